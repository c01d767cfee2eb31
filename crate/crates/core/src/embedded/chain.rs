//! The max-displacement jump chain on the oriented plane lattice.
//!
//! Starting from `y_0 = 0`, `x_{i+1}` is the highest vertex of the forward
//! cluster of `y_i` (leftmost among ties, i.e. smallest in coordinate
//! order) and `y_{i+1}` is where the frog sleeping at `x_{i+1}` first jumps.
//! The jump `J_{i+1} = |y_{i+1}| - |y_i|` is one more than the height gained
//! inside the cluster of `y_i`. Clusters are swept layer by layer in rotated
//! coordinates `(m, n) = (x - y, x + y)`; every cluster starts above all
//! previously explored vertices, so the jumps are independent.

use serde::{Deserialize, Serialize};

use super::{doubling_grid, Streams};
use crate::error::{arg, Result};
use crate::percolation::{advance, check_p, Caps};
use crate::stats::{survival_table, Observation, SurvivalRow};
use crate::substrate::{rotated_to_oriented, Graph, Lattice, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedChainState {
    pub p: f64,
    /// Highest cluster vertices `x_1, x_2, ...` in oriented coordinates.
    pub x: Vec<Point>,
    /// Landing points `y_1, y_2, ...`.
    pub y: Vec<Point>,
    /// `J_1, J_2, ...`; censored when the cluster hit a cap.
    pub jumps: Vec<Observation>,
    /// Holding times `tau_1, tau_2, ...` of the frogs at the `x_i`.
    pub clocks: Vec<f64>,
    pub steps: u64,
    pub censored: u64,
}

impl OrientedChainState {
    /// `M_n = |y_n|`, the displacement after `n` jumps (`n >= 1`).
    pub fn displacement(&self, n: usize) -> u64 {
        self.y[n - 1].l1()
    }

    /// Empirical `P(J >= n)` on a doubling grid up to the largest possible
    /// jump.
    pub fn tail(&self) -> Vec<JumpTailRow> {
        jump_tail(&self.jumps)
    }
}

/// Empirical `P(J >= n)` of jump samples on a doubling grid up to the largest
/// jump, with `n^{1/5} P(J >= n)` alongside.
pub fn jump_tail(jumps: &[Observation]) -> Vec<JumpTailRow> {
    let max = jumps.iter().map(|j| j.value).max().unwrap_or(1);
    survival_table(jumps, &doubling_grid(max))
        .into_iter()
        .map(|row| JumpTailRow { scaled: (row.n as f64).powf(0.2) * row.survival, row })
        .collect()
}

/// A tail row with `n^{1/5} P(J >= n)` alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpTailRow {
    #[serde(flatten)]
    pub row: SurvivalRow,
    pub scaled: f64,
}

/// Forward cluster of rotated `(m, n)`: returns the leftmost vertex of its
/// top layer and whether a cap cut the sweep short. `caps.horizon` bounds
/// the height gained, `caps.size` the number of vertices.
fn sweep(streams: &Streams, p: f64, m: i64, n: i64, caps: Caps) -> (i64, i64, bool) {
    let mut layer = vec![m];
    let mut next = Vec::new();
    let mut size = 1usize;
    let mut h = 0u64;
    loop {
        if h >= caps.horizon || size >= caps.size {
            return (layer[0], n + h as i64, true);
        }
        advance(&streams.percolation, p, n + h as i64, &layer, i64::MIN, i64::MAX, &mut next);
        if next.is_empty() {
            return (layer[0], n + h as i64, false);
        }
        size += next.len();
        h += 1;
        std::mem::swap(&mut layer, &mut next);
    }
}

/// Runs `steps` jumps of the chain at percolation parameter `p`.
///
/// A cluster that reaches `caps.horizon` layers or `caps.size` vertices is
/// cut there; its jump is recorded as a lower bound and the chain continues
/// from the top of the explored part, which is still below all unexplored
/// territory.
pub fn run_oriented_chain(streams: &Streams, p: f64, steps: u64, caps: Caps) -> Result<OrientedChainState> {
    check_p(p)?;
    if steps == 0 {
        return Err(arg("steps", "must be at least 1"));
    }
    if caps.size == 0 || caps.horizon == 0 {
        return Err(arg("caps", "size and horizon must be positive"));
    }
    let graph = Lattice::oriented(2);
    let oriented = |m: i64, n: i64| {
        let (x, y) = rotated_to_oriented(m, n);
        Point::new(&[x, y])
    };
    let mut st = OrientedChainState {
        p,
        x: Vec::with_capacity(steps as usize),
        y: Vec::with_capacity(steps as usize),
        jumps: Vec::with_capacity(steps as usize),
        clocks: Vec::with_capacity(steps as usize),
        steps,
        censored: 0,
    };
    let (mut m, mut n) = (0i64, 0i64);
    let mut explored_top = -1i64;
    for _ in 0..steps {
        assert!(n > explored_top, "cluster would re-enter explored territory");
        let (xm, xn, cut) = sweep(streams, p, m, n, caps);
        explored_top = xn;
        let x = oriented(xm, xn);
        let home = graph.vertex_key(&x);
        // Neighbour order of the oriented lattice: +e_1 then +e_2.
        let dir = if streams.direction(home, 0, 2) == 0 { 1 } else { -1 };
        let jump = (xn + 1 - n) as u64;
        st.jumps.push(if cut { Observation::at_least(jump) } else { Observation::exact(jump) });
        st.censored += cut as u64;
        st.clocks.push(streams.clock(home, 0));
        st.x.push(x);
        m = xm + dir;
        n = xn + 1;
        st.y.push(oriented(m, n));
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{StreamTag, WeightField};
    use crate::substrate::Graph;

    fn caps() -> Caps {
        Caps::new(1 << 20, 1024)
    }

    #[test]
    fn closed_lattice_makes_unit_jumps() {
        let st = run_oriented_chain(&Streams::new(3), 0.0, 500, caps()).unwrap();
        assert!(st.jumps.iter().all(|j| *j == Observation::exact(1)));
        assert_eq!(st.displacement(500), 500);
        assert_eq!(st.x[0], Point::origin(2));
    }

    #[test]
    fn clocks_average_to_one() {
        let st = run_oriented_chain(&Streams::new(4), 0.3, 10_000, caps()).unwrap();
        let mean = st.clocks.iter().sum::<f64>() / 10_000.0;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn chain_matches_generic_cluster_explorer() {
        let g = Lattice::oriented(2);
        let s = Streams::new(9);
        let st = run_oriented_chain(&s, 0.64, 200, caps()).unwrap();
        let mut from = Point::origin(2);
        for i in 0..200 {
            let c = crate::percolation::explore_cluster(&g, &s.percolation, &from, 0.64, Caps::new(1 << 20, u64::MAX))
                .unwrap();
            if st.jumps[i].censored {
                break;
            }
            assert_eq!(c.max_norm_vertex, st.x[i], "step {i}");
            assert_eq!(st.jumps[i].value, c.max_norm + 1 - g.norm(&from));
            assert!(g.neighbors(&st.x[i]).unwrap().iter().any(|s| s.vertex == st.y[i]));
            from = st.y[i].clone();
        }
    }

    #[test]
    fn invariants_and_stream_separation() {
        let s = Streams::new(11);
        let a = run_oriented_chain(&s, 0.6447, 2000, Caps::new(1 << 16, 256)).unwrap();
        assert!(a.jumps.iter().all(|j| j.value >= 1));
        assert!(a.x.windows(2).all(|w| w[1].l1() > w[0].l1()));
        let permuted = Streams { clocks: WeightField::new(999, StreamTag::FROG_CLOCK), ..s };
        let b = run_oriented_chain(&permuted, 0.6447, 2000, Caps::new(1 << 16, 256)).unwrap();
        assert_eq!(a.jumps, b.jumps);
        assert_ne!(a.clocks, b.clocks);
    }

    #[test]
    fn caps_censor_jumps() {
        let st = run_oriented_chain(&Streams::new(1), 0.9, 20, Caps::new(1 << 20, 50)).unwrap();
        assert!(st.censored > 0);
        assert!(st.jumps.iter().filter(|j| j.censored).all(|j| j.value == 51));
        assert!(run_oriented_chain(&Streams::new(1), 0.5, 0, caps()).is_err());
    }
}
