use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{EdgeId, EdgeKey, Graph, Step, Topology};
use crate::error::{Error, Result};
use crate::rng::KeyHasher;

const EDGE_DOMAIN: u64 = 0x4c41_5454_4544_4745; // "LATTEDGE"
const VERTEX_DOMAIN: u64 = 0x4c41_5454_5645_5254; // "LATTVERT"

/// Integer lattice point. Rotated-lattice points are stored as `(m, n)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub SmallVec<[i64; 4]>);

impl Point {
    pub fn new(coords: &[i64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(SmallVec::from_elem(0, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn l1(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    fn shifted(&self, axis: usize, by: i64) -> Self {
        let mut p = self.clone();
        p.0[axis] += by;
        p
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatticeKind {
    /// `Z^d` with all `2d` nearest-neighbour edges.
    Full,
    /// `Z^d` with edges `v -> v + e_i` only.
    Oriented,
    /// `Z^d` restricted to `x_d >= 0`.
    HalfSpace,
    /// `{(m, n) : m + n even}` with edges `(m, n) -> (m +- 1, n + 1)`.
    Rotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    kind: LatticeKind,
    dim: usize,
}

/// Canonical key of the lattice edge `{v, v + e_axis}`.
pub fn lattice_edge_key(lower: &[i64], axis: usize) -> EdgeKey {
    let mut h = KeyHasher::new(EDGE_DOMAIN);
    for &c in lower {
        h.write_i64(c);
    }
    h.write(axis as u64);
    EdgeKey(h.finish())
}

/// Oriented-lattice coordinates of a rotated-lattice point.
#[inline]
pub fn rotated_to_oriented(m: i64, n: i64) -> (i64, i64) {
    ((n + m).div_euclid(2), (n - m).div_euclid(2))
}

/// Key of the rotated edge `(m, n) -> (m + dir, n + 1)` for `dir = +-1`.
#[inline]
pub fn rotated_edge_key(m: i64, n: i64, dir: i64) -> EdgeKey {
    let (x, y) = rotated_to_oriented(m, n);
    lattice_edge_key(&[x, y], if dir > 0 { 0 } else { 1 })
}

impl Lattice {
    pub fn full(dim: usize) -> Self {
        Lattice { kind: LatticeKind::Full, dim }
    }

    pub fn oriented(dim: usize) -> Self {
        Lattice { kind: LatticeKind::Oriented, dim }
    }

    pub fn half_space(dim: usize) -> Self {
        Lattice { kind: LatticeKind::HalfSpace, dim }
    }

    pub fn rotated() -> Self {
        Lattice { kind: LatticeKind::Rotated, dim: 2 }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Point {
        Point::origin(self.dim)
    }

    fn invalid(v: &Point, reason: impl Into<String>) -> Error {
        Error::InvalidVertex { vertex: v.to_string(), reason: reason.into() }
    }
}

impl Graph for Lattice {
    type Vertex = Point;

    fn topology(&self) -> Topology {
        match self.kind {
            LatticeKind::Full => Topology::Lattice(self.dim),
            LatticeKind::Oriented => Topology::OrientedLattice(self.dim),
            LatticeKind::HalfSpace => Topology::HalfSpaceLattice(self.dim),
            LatticeKind::Rotated => Topology::RotatedOriented2D,
        }
    }

    fn root(&self) -> Point {
        self.origin()
    }

    fn validate(&self, v: &Point) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Self::invalid(v, format!("expected {} coordinates", self.dim)));
        }
        match self.kind {
            LatticeKind::Rotated if (v.0[0] + v.0[1]).rem_euclid(2) != 0 => {
                Err(Self::invalid(v, "rotated lattice needs m + n even"))
            }
            LatticeKind::HalfSpace if v.0[self.dim - 1] < 0 => {
                Err(Self::invalid(v, "half-space needs x_d >= 0"))
            }
            _ => Ok(()),
        }
    }

    fn neighbors_into(&self, v: &Point, out: &mut Vec<Step<Point>>) -> Result<()> {
        match self.kind {
            LatticeKind::Full | LatticeKind::HalfSpace => {
                for axis in 0..self.dim {
                    let c = v.0[axis];
                    out.push(Step {
                        vertex: v.shifted(axis, 1),
                        edge: lattice_edge_key(&v.0, axis),
                        toward_root: c < 0,
                    });
                    if self.kind == LatticeKind::HalfSpace && axis == self.dim - 1 && c == 0 {
                        continue;
                    }
                    let w = v.shifted(axis, -1);
                    let edge = lattice_edge_key(&w.0, axis);
                    out.push(Step { vertex: w, edge, toward_root: c > 0 });
                }
            }
            LatticeKind::Oriented => {
                for axis in 0..self.dim {
                    out.push(Step {
                        vertex: v.shifted(axis, 1),
                        edge: lattice_edge_key(&v.0, axis),
                        toward_root: v.0[axis] < 0,
                    });
                }
            }
            LatticeKind::Rotated => {
                let (m, n) = (v.0[0], v.0[1]);
                for dir in [1i64, -1] {
                    out.push(Step {
                        vertex: Point::new(&[m + dir, n + 1]),
                        edge: rotated_edge_key(m, n, dir),
                        toward_root: n < 0,
                    });
                }
            }
        }
        Ok(())
    }

    fn norm(&self, v: &Point) -> u64 {
        match self.kind {
            LatticeKind::Rotated => v.0[1].unsigned_abs(),
            _ => v.l1(),
        }
    }

    fn vertex_key(&self, v: &Point) -> u64 {
        let mut h = KeyHasher::new(VERTEX_DOMAIN);
        for &c in v.0.iter() {
            h.write_i64(c);
        }
        h.finish()
    }

    fn edge_id(&self, a: &Point, b: &Point) -> Result<EdgeId<Point>> {
        self.validate(a)?;
        self.validate(b)?;
        let not_adjacent = || Self::invalid(b, format!("not adjacent to {a}"));
        match self.kind {
            LatticeKind::Rotated => {
                let (lo, hi) = if a.0[1] < b.0[1] { (a, b) } else { (b, a) };
                if hi.0[1] - lo.0[1] == 1 && (hi.0[0] - lo.0[0]).abs() == 1 {
                    Ok(EdgeId { tail: lo.clone(), head: hi.clone() })
                } else {
                    Err(not_adjacent())
                }
            }
            _ => {
                let diff: Vec<i64> = a.0.iter().zip(b.0.iter()).map(|(x, y)| y - x).collect();
                let nonzero: Vec<usize> = (0..self.dim).filter(|&i| diff[i] != 0).collect();
                if nonzero.len() != 1 || diff[nonzero[0]].abs() != 1 {
                    return Err(not_adjacent());
                }
                let (tail, head) = if a < b { (a, b) } else { (b, a) };
                Ok(EdgeId { tail: tail.clone(), head: head.clone() })
            }
        }
    }

    fn edge_key(&self, e: &EdgeId<Point>) -> EdgeKey {
        match self.kind {
            LatticeKind::Rotated => {
                let dir = e.head.0[0] - e.tail.0[0];
                rotated_edge_key(e.tail.0[0], e.tail.0[1], dir)
            }
            _ => {
                let axis = (0..self.dim).find(|&i| e.tail.0[i] != e.head.0[i]).unwrap_or(0);
                lattice_edge_key(&e.tail.0, axis)
            }
        }
    }

    fn is_oriented(&self) -> bool {
        matches!(self.kind, LatticeKind::Oriented | LatticeKind::Rotated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> Point {
        Point::new(c)
    }

    fn vertices(steps: &[Step<Point>]) -> Vec<Point> {
        steps.iter().map(|s| s.vertex.clone()).collect()
    }

    #[test]
    fn square_lattice_origin_has_four_neighbours() {
        let g = Lattice::full(2);
        let n = vertices(&g.neighbors(&g.origin()).unwrap());
        assert_eq!(n, vec![p(&[1, 0]), p(&[-1, 0]), p(&[0, 1]), p(&[0, -1])]);
    }

    #[test]
    fn oriented_origin_has_two_outward_neighbours() {
        let g = Lattice::oriented(2);
        let n = vertices(&g.neighbors(&g.origin()).unwrap());
        assert_eq!(n, vec![p(&[1, 0]), p(&[0, 1])]);
        assert!(g.neighbors(&p(&[0, 0, 0])).unwrap_err().to_string().contains("coordinates"));
    }

    #[test]
    fn half_space_boundary_drops_downward_edge() {
        let g = Lattice::half_space(2);
        let n = vertices(&g.neighbors(&p(&[5, 0])).unwrap());
        assert_eq!(n.len(), 3);
        assert!(!n.contains(&p(&[5, -1])));
        assert!(g.neighbors(&p(&[0, -1])).is_err());
    }

    #[test]
    fn rotated_lattice_checks_parity() {
        let g = Lattice::rotated();
        assert!(matches!(g.neighbors(&p(&[1, 0])), Err(Error::InvalidVertex { .. })));
        let n = vertices(&g.neighbors(&p(&[-2, 6])).unwrap());
        assert_eq!(n, vec![p(&[-1, 7]), p(&[-3, 7])]);
    }

    #[test]
    fn norms() {
        assert_eq!(Lattice::full(2).norm(&p(&[3, -4])), 7);
        assert_eq!(Lattice::rotated().norm(&p(&[-2, 6])), 6);
    }

    #[test]
    fn rotated_and_oriented_share_edge_weights() {
        // (m, n) = (x - y, x + y)
        let rot = Lattice::rotated();
        let ori = Lattice::oriented(2);
        let (x, y) = (3i64, 5i64);
        let r = rot.neighbors(&p(&[x - y, x + y])).unwrap();
        let o = ori.neighbors(&p(&[x, y])).unwrap();
        assert_eq!(r[0].edge, o[0].edge);
        assert_eq!(r[1].edge, o[1].edge);
        assert_eq!(r[0].vertex, p(&[x + 1 - y, x + 1 + y]));
    }

    #[test]
    fn edge_id_is_canonical() {
        let g = Lattice::full(2);
        let a = p(&[2, 3]);
        let b = p(&[2, 2]);
        let e1 = g.edge_id(&a, &b).unwrap();
        let e2 = g.edge_id(&b, &a).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(e1.tail, b);
        assert!(g.edge_id(&a, &p(&[3, 2])).is_err());
    }

    proptest! {
        #[test]
        fn unoriented_neighbour_relation_is_symmetric(x in -50i64..50, y in -50i64..50, z in -5i64..5) {
            for g in [Lattice::full(2), Lattice::full(3)] {
                let v = if g.dim() == 2 { p(&[x, y]) } else { p(&[x, y, z]) };
                for s in g.neighbors(&v).unwrap() {
                    let back = g.neighbors(&s.vertex).unwrap();
                    let rev = back.iter().find(|t| t.vertex == v);
                    prop_assert!(rev.is_some());
                    // same weight from either endpoint
                    prop_assert_eq!(rev.unwrap().edge, s.edge);
                    prop_assert_eq!(g.edge_key(&g.edge_id(&v, &s.vertex).unwrap()), s.edge);
                }
            }
        }

        #[test]
        fn half_space_stays_in_half_space(x in -20i64..20, y in 0i64..20) {
            let g = Lattice::half_space(2);
            for s in g.neighbors(&p(&[x, y])).unwrap() {
                prop_assert!(s.vertex.0[1] >= 0);
            }
        }
    }
}
