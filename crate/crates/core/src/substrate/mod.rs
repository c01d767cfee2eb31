//! Graph topologies over infinite vertex sets.
//!
//! Graphs are never materialised. A [`Graph`] enumerates the traversable
//! neighbours of a vertex on demand and names every edge by a canonical
//! [`EdgeKey`], so a [`WeightField`](crate::rng::WeightField) can assign the
//! same weight to an edge whichever endpoint it is reached from.
//!
//! Canonical edge form (stable, documented for cross-implementation traces):
//!
//! * lattice kinds: the edge between `v` and `v + e_i` is keyed by the
//!   lexicographically smaller endpoint `v` and the axis `i`; the oriented
//!   lattice uses the same key for its edge `v -> v + e_i`, so the oriented
//!   and unoriented lattices share weights edge for edge;
//! * the rotated lattice maps `(m, n)` to the oriented point
//!   `((n + m) / 2, (n - m) / 2)` and reuses the oriented key;
//! * trees: the edge from a vertex to its child is keyed by the child's path
//!   key (an iterated hash of the child-index path from the root).

mod lattice;
mod restricted;
mod tree;

pub use lattice::{lattice_edge_key, rotated_edge_key, rotated_to_oriented, Lattice, LatticeKind, Point};
pub use restricted::Restricted;
pub use tree::{child_key, DAryTree, TreeVertex, MAX_TREE_DEPTH, ROOT_KEY};

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical 64-bit digest of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey(pub u64);

/// An edge in canonical form: for unoriented kinds `tail` is the
/// lexicographically smaller endpoint, for oriented kinds it is the source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId<V> {
    pub tail: V,
    pub head: V,
}

/// One traversable neighbour of a vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step<V> {
    pub vertex: V,
    pub edge: EdgeKey,
    /// The step decreases the norm (towards the root).
    pub toward_root: bool,
}

/// An infinite, locally finite rooted graph with lazy neighbour enumeration.
pub trait Graph: Send + Sync {
    type Vertex: Clone + Eq + Hash + Ord + fmt::Debug + Send + Sync;

    fn topology(&self) -> Topology;

    fn root(&self) -> Self::Vertex;

    /// Checks that `v` is a valid vertex encoding for this graph.
    fn validate(&self, v: &Self::Vertex) -> Result<()>;

    /// Appends every traversable neighbour of `v` to `out`, in a fixed order.
    fn neighbors_into(&self, v: &Self::Vertex, out: &mut Vec<Step<Self::Vertex>>) -> Result<()>;

    fn neighbors(&self, v: &Self::Vertex) -> Result<Vec<Step<Self::Vertex>>> {
        self.validate(v)?;
        let mut out = Vec::new();
        self.neighbors_into(v, &mut out)?;
        Ok(out)
    }

    /// Distance-like size of `v`: L1 norm on lattices, depth on trees and the
    /// height coordinate on the rotated lattice.
    fn norm(&self, v: &Self::Vertex) -> u64;

    /// Stable 64-bit key of a vertex, used to index per-vertex randomness.
    fn vertex_key(&self, v: &Self::Vertex) -> u64;

    /// Canonical form of the edge joining `a` and `b`, if they are adjacent.
    fn edge_id(&self, a: &Self::Vertex, b: &Self::Vertex) -> Result<EdgeId<Self::Vertex>>;

    fn edge_key(&self, e: &EdgeId<Self::Vertex>) -> EdgeKey;

    /// Trees have no cycles, so exploration needs no visited set.
    fn is_tree(&self) -> bool {
        false
    }

    fn is_oriented(&self) -> bool {
        false
    }

    /// The d-ary tree behind this graph, when there is one, for kernels with
    /// a tree-specific fast path.
    fn as_tree(&self) -> Option<&DAryTree> {
        None
    }
}

/// Runtime description of a topology, as used in configs and on the CLI.
///
/// Text grammar: `lattice:<d>`, `oriented:<d>`, `rotated`, `tree:<d>`,
/// `halfspace:<d>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Topology {
    Lattice(usize),
    OrientedLattice(usize),
    RotatedOriented2D,
    DAryTree(usize),
    HalfSpaceLattice(usize),
}

impl Topology {
    pub fn dimension(&self) -> usize {
        match *self {
            Topology::Lattice(d)
            | Topology::OrientedLattice(d)
            | Topology::DAryTree(d)
            | Topology::HalfSpaceLattice(d) => d,
            Topology::RotatedOriented2D => 2,
        }
    }

    pub fn is_tree(&self) -> bool {
        matches!(self, Topology::DAryTree(_))
    }

    pub fn is_oriented(&self) -> bool {
        matches!(self, Topology::OrientedLattice(_) | Topology::RotatedOriented2D)
    }

    /// Bond percolation threshold when it is known exactly; oriented and
    /// higher-dimensional values must come from an estimate in the config.
    pub fn exact_critical_value(&self) -> Option<f64> {
        match *self {
            Topology::Lattice(2) | Topology::HalfSpaceLattice(2) => Some(0.5),
            Topology::DAryTree(d) => Some(1.0 / d as f64),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if d == 0 {
            return Err(Error::arg("topology", "dimension must be positive"));
        }
        if self.is_tree() && d < 2 {
            return Err(Error::arg("topology", "a d-ary tree needs d >= 2"));
        }
        Ok(())
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Topology::Lattice(d) => write!(f, "lattice:{d}"),
            Topology::OrientedLattice(d) => write!(f, "oriented:{d}"),
            Topology::RotatedOriented2D => write!(f, "rotated"),
            Topology::DAryTree(d) => write!(f, "tree:{d}"),
            Topology::HalfSpaceLattice(d) => write!(f, "halfspace:{d}"),
        }
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "rotated" {
            return Ok(Topology::RotatedOriented2D);
        }
        let bad = || {
            Error::arg(
                "topology",
                format!("`{s}`; expected lattice:<d>, oriented:<d>, rotated, tree:<d> or halfspace:<d>"),
            )
        };
        let (kind, d) = s.split_once(':').ok_or_else(bad)?;
        let d: usize = d.trim().parse().map_err(|_| bad())?;
        let t = match kind.trim() {
            "lattice" => Topology::Lattice(d),
            "oriented" => Topology::OrientedLattice(d),
            "tree" => Topology::DAryTree(d),
            "halfspace" => Topology::HalfSpaceLattice(d),
            _ => return Err(bad()),
        };
        t.validate()?;
        Ok(t)
    }
}

impl TryFrom<String> for Topology {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Topology> for String {
    fn from(t: Topology) -> String {
        t.to_string()
    }
}

/// A graph built from a [`Topology`], split by vertex type.
#[derive(Debug, Clone)]
pub enum AnyGraph {
    Lattice(Lattice),
    Tree(DAryTree),
}

impl Topology {
    pub fn build(&self) -> Result<AnyGraph> {
        self.validate()?;
        Ok(match *self {
            Topology::Lattice(d) => AnyGraph::Lattice(Lattice::full(d)),
            Topology::OrientedLattice(d) => AnyGraph::Lattice(Lattice::oriented(d)),
            Topology::HalfSpaceLattice(d) => AnyGraph::Lattice(Lattice::half_space(d)),
            Topology::RotatedOriented2D => AnyGraph::Lattice(Lattice::rotated()),
            Topology::DAryTree(d) => AnyGraph::Tree(DAryTree::new(d)),
        })
    }
}

/// Evaluates `$body` with `$g` bound to the concrete graph of `$topology`.
/// Both arms must produce the same type.
#[macro_export]
macro_rules! with_graph {
    ($topology:expr, |$g:ident| $body:expr) => {
        match $topology.build()? {
            $crate::substrate::AnyGraph::Lattice($g) => $body,
            $crate::substrate::AnyGraph::Tree($g) => $body,
        }
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_grammar_round_trips() {
        for t in [
            Topology::Lattice(2),
            Topology::OrientedLattice(3),
            Topology::RotatedOriented2D,
            Topology::DAryTree(2),
            Topology::HalfSpaceLattice(2),
        ] {
            assert_eq!(t.to_string().parse::<Topology>().unwrap(), t);
        }
        assert!("lattice".parse::<Topology>().is_err());
        assert!("tree:1".parse::<Topology>().is_err());
        assert!("cube:2".parse::<Topology>().is_err());
    }
}
