use std::collections::VecDeque;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::rng::WeightField;
use crate::substrate::{child_key, EdgeKey, Graph, Step};

/// Why an exploration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    None,
    SizeCap,
    Horizon,
}

/// The p-open cluster of a vertex, possibly truncated.
#[derive(Debug, Clone)]
pub struct Cluster<V> {
    pub origin: V,
    /// Breadth-first order, origin first.
    pub vertices: Vec<V>,
    /// Vertices whose parent edge is open and whose child edges are all
    /// closed. Only populated on trees.
    pub leaves: Vec<V>,
    /// Maximiser of the norm; ties go to the smallest vertex in `Ord`.
    pub max_norm_vertex: V,
    pub max_norm: u64,
    pub truncation: Truncation,
    /// Number of edge weights examined.
    pub edge_checks: u64,
}

impl<V> Cluster<V> {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn truncated(&self) -> bool {
        self.truncation != Truncation::None
    }
}

/// Exploration limits. A vertex beyond `horizon` (in norm) is never added;
/// meeting one through an open edge truncates the cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub size: usize,
    pub horizon: u64,
}

impl Caps {
    pub fn new(size: usize, horizon: u64) -> Self {
        Caps { size, horizon }
    }

    pub fn size_only(size: usize) -> Self {
        Caps { size, horizon: u64::MAX }
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(arg("p", format!("{p} is not a probability")))
    }
}

/// Breadth-first exploration of the p-open cluster of `v`.
///
/// On oriented graphs only outward edges are offered by the graph, so this is
/// the forward cluster. A vertex counts as a leaf on a tree when its parent
/// edge is open and each child edge is closed, which makes the origin a leaf
/// only if its own parent edge is open.
pub fn explore_cluster<G: Graph>(
    graph: &G,
    field: &WeightField,
    v: &G::Vertex,
    p: f64,
    caps: Caps,
) -> Result<Cluster<G::Vertex>> {
    check_p(p)?;
    if caps.size == 0 {
        return Err(arg("size_cap", "must be at least 1"));
    }
    graph.validate(v)?;
    let tree = graph.is_tree();
    let mut seen: FxHashSet<G::Vertex> = FxHashSet::default();
    seen.insert(v.clone());
    let mut queue = VecDeque::from([v.clone()]);
    let mut cluster = Cluster {
        origin: v.clone(),
        vertices: Vec::new(),
        leaves: Vec::new(),
        max_norm_vertex: v.clone(),
        max_norm: graph.norm(v),
        truncation: Truncation::None,
        edge_checks: 0,
    };
    let mut steps: Vec<Step<G::Vertex>> = Vec::new();
    // Vertices are admitted to `seen` when enqueued; `admitted` counts them
    // against the size cap.
    let mut admitted = 1usize;
    'bfs: while let Some(u) = queue.pop_front() {
        let norm = graph.norm(&u);
        if norm > cluster.max_norm || (norm == cluster.max_norm && u < cluster.max_norm_vertex) {
            cluster.max_norm = norm;
            cluster.max_norm_vertex = u.clone();
        }
        steps.clear();
        graph.neighbors_into(&u, &mut steps)?;
        let mut parent_open = false;
        let mut child_open = false;
        for s in steps.drain(..) {
            cluster.edge_checks += 1;
            if field.weight(s.edge) > p {
                continue;
            }
            if s.toward_root {
                parent_open = true;
            } else {
                child_open = true;
            }
            if seen.contains(&s.vertex) {
                continue;
            }
            if graph.norm(&s.vertex) > caps.horizon {
                cluster.truncation = Truncation::Horizon;
                cluster.vertices.push(u);
                break 'bfs;
            }
            if admitted == caps.size {
                cluster.truncation = Truncation::SizeCap;
                cluster.vertices.push(u);
                break 'bfs;
            }
            admitted += 1;
            seen.insert(s.vertex.clone());
            queue.push_back(s.vertex);
        }
        if tree && parent_open && !child_open {
            cluster.leaves.push(u.clone());
        }
        cluster.vertices.push(u);
    }
    // Vertices still queued at truncation belong to the cluster as well.
    for u in queue {
        let norm = graph.norm(&u);
        if norm > cluster.max_norm || (norm == cluster.max_norm && u < cluster.max_norm_vertex) {
            cluster.max_norm = norm;
            cluster.max_norm_vertex = u.clone();
        }
        cluster.vertices.push(u);
    }
    Ok(cluster)
}

/// Summary of the downward cluster of a tree vertex, explored by key only.
#[derive(Debug, Clone, PartialEq)]
pub struct DownCluster {
    pub size: u64,
    /// Largest depth below the start vertex reached by the cluster.
    pub height: u64,
    /// `(path key, absolute depth)` of each leaf, in depth-first order.
    pub leaves: Vec<(u64, u64)>,
    pub truncation: Truncation,
}

/// Explores the part of a p-open tree cluster below the vertex with path key
/// `key` at depth `depth`, assuming the parent edge is not followed.
///
/// This is the hot path for tail surveys and the leaf branching process; it
/// never builds vertex objects. `parent_open` says whether the edge above the
/// start vertex is open, which decides whether the start can be a leaf.
#[allow(clippy::too_many_arguments)]
pub fn explore_down(
    field: &WeightField,
    d: usize,
    key: u64,
    depth: u64,
    parent_open: bool,
    p: f64,
    caps: Caps,
    collect_leaves: bool,
) -> DownCluster {
    let mut out = DownCluster { size: 1, height: 0, leaves: Vec::new(), truncation: Truncation::None };
    let mut stack: Vec<(u64, u64, bool)> = vec![(key, depth, parent_open)];
    while let Some((k, dep, up_open)) = stack.pop() {
        out.height = out.height.max(dep - depth);
        let mut any = false;
        for i in 0..d as u32 {
            let ck = child_key(k, i);
            if field.weight(EdgeKey(ck)) > p {
                continue;
            }
            any = true;
            if dep + 1 - depth > caps.horizon {
                out.truncation = Truncation::Horizon;
                return out;
            }
            if out.size as usize >= caps.size {
                out.truncation = Truncation::SizeCap;
                return out;
            }
            out.size += 1;
            stack.push((ck, dep + 1, true));
        }
        if collect_leaves && up_open && !any {
            out.leaves.push((k, dep));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substrate::{DAryTree, Lattice, Point, Restricted, TreeVertex};

    #[test]
    fn p_zero_gives_singleton() {
        let f = WeightField::percolation(1);
        let g = Lattice::full(2);
        let c = explore_cluster(&g, &f, &Point::origin(2), 0.0, Caps::size_only(10)).unwrap();
        assert_eq!(c.size(), 1);
        assert!(!c.truncated());
        let t = DAryTree::new(3);
        let c = explore_cluster(&t, &f, &TreeVertex::root(), 0.0, Caps::size_only(10)).unwrap();
        assert_eq!(c.size(), 1);
        assert!(c.leaves.is_empty());
    }

    #[test]
    fn p_one_hits_size_cap() {
        let f = WeightField::percolation(1);
        let g = Lattice::full(2);
        let c = explore_cluster(&g, &f, &Point::origin(2), 1.0, Caps::size_only(100)).unwrap();
        assert_eq!(c.size(), 100);
        assert!(c.truncated());
        assert_eq!(c.truncation, Truncation::SizeCap);
    }

    #[test]
    fn horizon_truncates() {
        let f = WeightField::percolation(1);
        let g = Lattice::full(2);
        let c = explore_cluster(&g, &f, &Point::origin(2), 1.0, Caps::new(1_000_000, 5)).unwrap();
        assert_eq!(c.truncation, Truncation::Horizon);
        assert!(c.vertices.iter().all(|v| g.norm(v) <= 5));
    }

    #[test]
    fn binary_tree_singleton_probability() {
        let t = DAryTree::new(2);
        let base = WeightField::percolation(7);
        let n = 100_000u64;
        let hits = (0..n)
            .filter(|&i| {
                let c = explore_cluster(&t, &base.replica(i), &TreeVertex::root(), 0.5, Caps::size_only(2)).unwrap();
                c.size() == 1
            })
            .count();
        let est = hits as f64 / n as f64;
        assert!((est - 0.25).abs() < 0.01, "{est}");
    }

    #[test]
    fn finite_box_is_fully_explored() {
        let f = WeightField::percolation(3);
        let g = Restricted::new(Lattice::full(2), |v: &Point| v.coords().iter().all(|&c| (0..4).contains(&c)));
        let c = explore_cluster(&g, &f, &Point::origin(2), 1.0, Caps::size_only(100)).unwrap();
        assert_eq!(c.size(), 16);
        assert!(!c.truncated());
        assert_eq!(c.max_norm, 6);
        assert_eq!(c.max_norm_vertex, Point::new(&[3, 3]));
        // 24 edges, each examined once from each side.
        assert_eq!(c.edge_checks, 48);
    }

    #[test]
    fn max_norm_tie_break_is_lexicographic() {
        let f = WeightField::percolation(3);
        let g = Restricted::new(Lattice::full(2), |v: &Point| v.l1() <= 2);
        let c = explore_cluster(&g, &f, &Point::origin(2), 1.0, Caps::size_only(100)).unwrap();
        assert_eq!(c.max_norm, 2);
        assert_eq!(c.max_norm_vertex, Point::new(&[-2, 0]));
    }

    #[test]
    fn oriented_cluster_moves_outward() {
        let f = WeightField::percolation(5);
        let g = Lattice::oriented(2);
        let c = explore_cluster(&g, &f, &Point::origin(2), 0.7, Caps::size_only(5000)).unwrap();
        assert!(c.vertices.iter().all(|v| v.coords().iter().all(|&x| x >= 0)));
    }

    #[test]
    fn down_explorer_matches_generic_on_tree() {
        let t = DAryTree::new(3);
        let base = WeightField::percolation(11);
        for i in 0..300 {
            let f = base.replica(i);
            let c = explore_cluster(&t, &f, &TreeVertex::root(), 0.33, Caps::size_only(100_000)).unwrap();
            let dc = explore_down(&f, 3, crate::substrate::ROOT_KEY, 0, false, 0.33, Caps::size_only(100_000), true);
            assert!(!c.truncated());
            assert_eq!(dc.truncation, Truncation::None);
            assert_eq!(c.size() as u64, dc.size);
            assert_eq!(c.max_norm, dc.height);
            let mut a: Vec<u64> = c.leaves.iter().map(|v| v.key()).collect();
            let mut b: Vec<u64> = dc.leaves.iter().map(|l| l.0).collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn leaves_have_open_parent_and_closed_children() {
        let t = DAryTree::new(2);
        let f = WeightField::percolation(2);
        let c = explore_cluster(&t, &f, &TreeVertex::root(), 0.5, Caps::size_only(10_000)).unwrap();
        for leaf in &c.leaves {
            let steps = t.neighbors(leaf).unwrap();
            for s in steps {
                let open = f.weight(s.edge) <= 0.5;
                assert_eq!(open, s.toward_root);
            }
        }
    }
}
