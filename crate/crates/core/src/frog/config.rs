use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::substrate::Topology;

/// Parameters of one run of the critical frog model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrogConfig {
    pub topology: Topology,
    /// Sleeping frogs per site.
    pub m: u32,
    /// Percolation parameter; defaults to the topology's exact critical value.
    #[serde(default)]
    pub p: Option<f64>,
    pub seed: u64,
    /// Halts once any activated vertex lies beyond this norm.
    pub horizon: u64,
    /// Halts at the first event after this time.
    pub time_budget: f64,
    /// Halts when the number of active frogs would exceed this.
    pub frog_cap: u64,
    /// Halts when one activation would add more vertices than this.
    pub cluster_cap: usize,
}

impl FrogConfig {
    pub fn new(topology: Topology, m: u32, seed: u64) -> Self {
        FrogConfig {
            topology,
            m,
            p: None,
            seed,
            horizon: 256,
            time_budget: 1e4,
            frog_cap: 1_000_000,
            cluster_cap: 1_000_000,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    /// The percolation parameter in force.
    pub fn resolved_p(&self) -> Result<f64> {
        match self.p.or_else(|| self.topology.exact_critical_value()) {
            Some(p) => Ok(p),
            None => Err(arg("p", format!("no exact critical value for {}; supply p (e.g. a stored estimate)", self.topology))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        if self.m == 0 {
            return Err(arg("m", "need at least one frog per site"));
        }
        let p = self.resolved_p()?;
        if !(0.0..=1.0).contains(&p) {
            return Err(arg("p", format!("{p} is not a probability")));
        }
        if self.horizon == 0 || self.frog_cap == 0 || self.cluster_cap == 0 {
            return Err(arg("caps", "horizon, frog_cap and cluster_cap must be positive"));
        }
        if !(self.time_budget > 0.0) {
            return Err(arg("time_budget", "must be positive"));
        }
        Ok(())
    }
}
