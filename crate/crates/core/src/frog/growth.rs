use serde::{Deserialize, Serialize};

use super::config::FrogConfig;
use super::sim::{run_cfm_on, time_to_radius, ActivationEvent};
use crate::error::{Error, Result};
use crate::with_graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    ExplosiveSignature,
    SuperlinearSignature,
    LinearOrSlower,
    Inconclusive,
}

impl std::fmt::Display for Growth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Growth::ExplosiveSignature => "explosive-signature",
            Growth::SuperlinearSignature => "superlinear-signature",
            Growth::LinearOrSlower => "linear-or-slower",
            Growth::Inconclusive => "inconclusive",
        })
    }
}

/// Thresholds of [`classify_growth`]. Checkpoints are meant to double.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRule {
    pub explosive_factor: f64,
    pub superlinear_factor: f64,
    pub linear_band: f64,
    pub min_checkpoints: usize,
}

impl Default for GrowthRule {
    fn default() -> Self {
        GrowthRule { explosive_factor: 2.0, superlinear_factor: 2.0, linear_band: 0.25, min_checkpoints: 4 }
    }
}

impl GrowthRule {
    /// The rule in words, printed with every classification.
    pub fn describe(&self) -> String {
        format!(
            "explosive-signature if over the last three reached checkpoints the time increment shrinks by a factor >= {}; \
             superlinear-signature if r/t(r) at the last reached checkpoint exceeds {} times its value at the first \
             checkpoint reached after time 0; linear-or-slower if r/t(r) never exceeds {} times that first value; \
             otherwise inconclusive; at least {} checkpoints must be reached",
            self.explosive_factor,
            self.superlinear_factor,
            1.0 + self.linear_band,
            self.min_checkpoints
        )
    }
}

/// Time-to-radius profile of a run and its growth class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionSignature {
    pub checkpoints: Vec<u64>,
    pub times: Vec<Option<f64>>,
    /// `t(r_{j+1}) - t(r_j)` over consecutive reached checkpoints.
    pub increments: Vec<f64>,
    pub classification: Growth,
    pub rule: String,
    pub reason: String,
}

/// Classifies a time-to-radius profile. `times[j]` is the first time the
/// maximal norm reached `checkpoints[j]`.
pub fn classify_times(checkpoints: &[u64], times: &[Option<f64>], rule: GrowthRule) -> ExplosionSignature {
    let reached: Vec<(u64, f64)> =
        checkpoints.iter().zip(times).map_while(|(&r, t)| t.map(|t| (r, t))).collect();
    let increments: Vec<f64> = reached.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let mut sig = ExplosionSignature {
        checkpoints: checkpoints.to_vec(),
        times: times.to_vec(),
        increments: increments.clone(),
        classification: Growth::Inconclusive,
        rule: rule.describe(),
        reason: String::new(),
    };
    if reached.len() < rule.min_checkpoints {
        sig.reason = format!("reached {} of the {} checkpoints required", reached.len(), rule.min_checkpoints);
        return sig;
    }
    let n = increments.len();
    let (da, db) = (increments[n - 2], increments[n - 1]);
    if da > 0.0 && db * rule.explosive_factor <= da {
        sig.classification = Growth::ExplosiveSignature;
        sig.reason = format!("last increments {da} then {db}");
        return sig;
    }
    let speeds: Vec<f64> = reached.iter().filter(|(_, t)| *t > 0.0).map(|&(r, t)| r as f64 / t).collect();
    if speeds.len() < 2 {
        sig.reason = format!("only {} checkpoints reached after time 0", speeds.len());
        return sig;
    }
    let (first, last) = (speeds[0], speeds[speeds.len() - 1]);
    if last > rule.superlinear_factor * first {
        sig.classification = Growth::SuperlinearSignature;
        sig.reason = format!("r/t went from {first} to {last}");
    } else if speeds.iter().all(|&s| s <= (1.0 + rule.linear_band) * first) {
        sig.classification = Growth::LinearOrSlower;
        sig.reason = format!("r/t stayed within {} of {first}", rule.linear_band);
    } else {
        sig.reason = format!("r/t went from {first} to {last} without a clear trend");
    }
    sig
}

/// [`classify_times`] on the first times `M_t` reached each checkpoint.
pub fn classify_growth(trajectory: &[ActivationEvent], checkpoints: &[u64], rule: GrowthRule) -> ExplosionSignature {
    classify_times(checkpoints, &time_to_radius(trajectory, checkpoints), rule)
}

/// Checkpoint times of two runs that differ only in `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub m_low: u32,
    pub m_high: u32,
    pub checkpoints: Vec<u64>,
    pub times_low: Vec<Option<f64>>,
    pub times_high: Vec<Option<f64>>,
    /// Checkpoints reached by both runs.
    pub compared: usize,
    /// Checkpoints where the larger run was strictly later.
    pub violations: Vec<u64>,
    /// Whether the two trajectories are identical.
    pub identical: bool,
}

/// Runs `low` and `high` on the shared field and checks that the run with
/// more frogs per site reaches every checkpoint no later.
pub fn monotone_coupling_check(low: &FrogConfig, high: &FrogConfig, checkpoints: &[u64]) -> Result<CouplingReport> {
    let same_streams = FrogConfig { m: high.m, ..low.clone() } == *high;
    if !same_streams {
        return Err(Error::StreamMismatch(format!(
            "configs differ in more than m: {low:?} vs {high:?}"
        )));
    }
    if low.m > high.m {
        return Err(Error::StreamMismatch(format!("m_low = {} exceeds m_high = {}", low.m, high.m)));
    }
    let (a, b) = with_graph!(low.topology, |g| (
        run_cfm_on(&g, low, |_| ())?.trajectory,
        run_cfm_on(&g, high, |_| ())?.trajectory
    ));
    let times_low = time_to_radius(&a, checkpoints);
    let times_high = time_to_radius(&b, checkpoints);
    let mut compared = 0;
    let mut violations = Vec::new();
    for (i, &r) in checkpoints.iter().enumerate() {
        if let (Some(tl), Some(th)) = (times_low[i], times_high[i]) {
            compared += 1;
            if th > tl {
                violations.push(r);
            }
        }
    }
    Ok(CouplingReport {
        m_low: low.m,
        m_high: high.m,
        checkpoints: checkpoints.to_vec(),
        times_low,
        times_high,
        compared,
        violations,
        identical: a == b,
    })
}
