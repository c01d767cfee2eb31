//! The critical frog model CFM(G, m): sleeping frogs on every site, whole
//! p-open clusters waking at once, and rate-1 random walks.

mod config;
mod growth;
mod sim;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use config::FrogConfig;
pub use growth::{
    classify_growth, classify_times, monotone_coupling_check, CouplingReport, ExplosionSignature, Growth, GrowthRule,
};
pub use sim::{run_cfm_on, time_to_radius, ActivationEvent, CfmRun, FrogSimState, HaltStatus, Jump};

use crate::error::Result;
use crate::with_graph;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Topology-independent summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfmOutcome {
    pub halt: HaltStatus,
    pub time: f64,
    pub activated: u64,
    pub max_norm: u64,
    pub jumps: u64,
    pub trajectory: Vec<ActivationEvent>,
    pub signature: ExplosionSignature,
}

/// Runs CFM on the topology of `config` and classifies its growth over
/// `checkpoints`.
pub fn run_cfm(config: &FrogConfig, checkpoints: &[u64], rule: GrowthRule) -> Result<CfmOutcome> {
    with_graph!(config.topology, |g| {
        let run = run_cfm_on(&g, config, |_| ())?;
        let signature = classify_growth(&run.trajectory, checkpoints, rule);
        Ok(CfmOutcome {
            halt: run.state.halt,
            time: run.state.time,
            activated: run.state.activated.len() as u64,
            max_norm: run.state.max_norm,
            jumps: run.state.jumps,
            trajectory: run.trajectory,
            signature,
        })
    })
}

/// `start, 2 start, 4 start, ...` up to and including `limit`.
pub fn doubling_checkpoints(start: u64, limit: u64) -> Vec<u64> {
    std::iter::successors(Some(start.max(1)), |&r| r.checked_mul(2)).take_while(|&r| r <= limit).collect()
}

#[cfg(test)]
mod tests;
