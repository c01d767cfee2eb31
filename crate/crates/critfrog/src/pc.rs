//! The stored estimate of the oriented bond percolation threshold.
//!
//! No exact value is known, so oriented operations default to the estimate
//! in `data/oriented_pc.toml`, produced by `critfrog pc-estimate` with the
//! spec recorded alongside it.

use serde::Deserialize;

const STORED: &str = include_str!("../data/oriented_pc.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StoredEstimate {
    pub p_c: f64,
    pub ci_halfwidth: f64,
    pub batch_estimates: Vec<f64>,
    /// The spec that produced the estimate.
    pub spec: toml::Table,
}

pub fn stored_estimate() -> StoredEstimate {
    toml::from_str(STORED).expect("data/oriented_pc.toml is well formed")
}

pub fn oriented_pc() -> f64 {
    stored_estimate().p_c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{percolation::PcEstimate, run_operation};
    use crate::spec::ExperimentSpec;

    #[test]
    fn stored_spec_reproduces_the_stored_estimate() {
        let stored = stored_estimate();
        let spec = ExperimentSpec::parse(&toml::to_string(&stored.spec).unwrap()).unwrap();
        let env = run_operation::<PcEstimate>(&spec, &toml::Table::new()).unwrap();
        assert_eq!(env.derived("p_c").and_then(|v| v.as_f64()), Some(stored.p_c));
        let batches: Vec<f64> = env.table("batches").unwrap().column("p_c").unwrap();
        assert_eq!(batches, stored.batch_estimates);
    }
}
