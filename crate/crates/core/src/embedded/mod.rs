//! Embedded subprocesses used to bound the frog model from below, each run as
//! a standalone experiment.
//!
//! * [`run_oriented_chain`]: the max-displacement jump chain on the oriented
//!   plane lattice and its jump tail.
//! * [`run_srw_hitting`]: three walks from -1, -2, -3 racing to `2Y`.
//! * [`run_halfspace_chain`]: three tracked frogs discovering fresh half-space
//!   clusters of size at least 3 on `Z^d`.
//! * [`sample_leaf_gw`]: the Galton-Watson tree of cluster leaves whose frog
//!   steps away from the root.
//!
//! Frog motion uses the same keys as the full model: the frog sleeping at `v`
//! draws its `k`-th holding time and direction at `(key(v), 0, k)`.

mod chain;
mod halfspace;
mod leaf_gw;
mod srw;

use serde::{Deserialize, Serialize};

pub use chain::{jump_tail, run_oriented_chain, JumpTailRow, OrientedChainState};
pub use halfspace::{run_halfspace_chain, Discovery, HalfspaceCaps, HalfspaceChainState, HalfspaceHalt};
pub use leaf_gw::{leaf_offspring, offspring_tail, root_offspring, sample_leaf_gw, LeafGwStatus, LeafGwTree, OffspringSample};
pub use srw::{first_step_hit_probability, run_srw_hitting, SrwHittingExperiment, SrwOptions, SRW_STEP_CAP};

use crate::rng::{StreamTag, WeightField};
use crate::stats::SurvivalRow;

/// The three independent random sources an embedded process reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Streams {
    pub percolation: WeightField,
    pub clocks: WeightField,
    pub directions: WeightField,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self::from_field(&WeightField::percolation(seed))
    }

    /// Clock and direction streams sharing `field`'s seed.
    pub fn from_field(field: &WeightField) -> Self {
        Streams {
            percolation: *field,
            clocks: field.with_stream(StreamTag::FROG_CLOCK),
            directions: field.with_stream(StreamTag::FROG_DIRECTION),
        }
    }

    /// Holding time of the `step`-th jump of the frog sleeping at `home`.
    #[inline]
    pub fn clock(&self, home: u64, step: u64) -> f64 {
        self.clocks.exponential(&[home, 0, step])
    }

    /// Index in `0..degree` of the `step`-th jump direction of that frog.
    #[inline]
    pub fn direction(&self, home: u64, step: u64, degree: usize) -> usize {
        ((self.directions.uniform(&[home, 0, step]) * degree as f64) as usize).min(degree - 1)
    }
}

/// Doubling grid `1, 2, 4, ...` up to and including `max` when it is a power
/// of two.
pub fn doubling_grid(max: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |&n| n.checked_mul(2)).take_while(|&n| n <= max).collect()
}

/// `scale(n) * survival(n)` for each row.
pub fn scaled_survival(rows: &[SurvivalRow], scale: impl Fn(f64) -> f64) -> Vec<(u64, f64)> {
    rows.iter().map(|r| (r.n, scale(r.n as f64) * r.survival)).collect()
}

/// Smallest value of a scaled tail over `at`, relative to its value at the
/// first point. Returns `None` if some point is missing or the first value
/// is zero.
pub fn scaled_tail_ratio(scaled: &[(u64, f64)], at: &[u64]) -> Option<f64> {
    let get = |n: u64| scaled.iter().find(|r| r.0 == n).map(|r| r.1);
    let first = get(*at.first()?)?;
    if first <= 0.0 {
        return None;
    }
    let mut min = f64::INFINITY;
    for &n in at {
        min = min.min(get(n)?);
    }
    Some(min / first)
}
