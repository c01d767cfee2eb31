//! Three simple random walks on `Z` started at -1, -2, -3, stopped when the
//! first of them sits at `2Y` for an independent geometric `Y`.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::replica;
use crate::rng::WeightField;
use crate::stats::{linear_fit, mean_ci, survival_table, LinearFit, Observation, SurvivalRow};

/// Per-replica step cap; a replica that reaches it is right-censored.
pub const SRW_STEP_CAP: u64 = 100_000_000;
/// Largest admissible fraction of censored replicas.
const MAX_CENSORED: f64 = 0.01;
/// Tail rows used in the slope fit need at least this many exceedances.
const TAIL_MIN_COUNT: u64 = 10;
/// Walk steps drawn from one 64-bit word (three bits each).
const STEPS_PER_WORD: u32 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrwOptions {
    /// Success probability of `Y`: `P(Y = k) = (1 - q)^k q`.
    pub q: f64,
    pub replicas: u64,
    pub step_cap: u64,
    /// Fix `Y` instead of sampling it.
    pub given_y: Option<u64>,
}

impl SrwOptions {
    pub fn new(q: f64, replicas: u64) -> Self {
        SrwOptions { q, replicas, step_cap: SRW_STEP_CAP, given_y: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrwHittingExperiment {
    pub options: SrwOptions,
    /// `Y` of each replica.
    pub ys: Vec<u64>,
    /// `sigma` of each replica, censored at the step cap.
    pub samples: Vec<Observation>,
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub censored: u64,
    /// `P(sigma > t)` on a doubling grid; the `n` column is `t`.
    pub tail: Vec<SurvivalRow>,
    /// Log-log fit over the top two decades of `t` with enough exceedances.
    pub tail_fit: Option<LinearFit>,
    pub first_half_mean: f64,
    pub second_half_mean: f64,
}

impl SrwHittingExperiment {
    /// Relative change of the running mean between the two halves.
    pub fn half_mean_change(&self) -> f64 {
        (self.second_half_mean - self.first_half_mean).abs() / self.first_half_mean
    }

    /// Empirical `P(sigma = 1)` among replicas with `Y = 0`.
    pub fn p_one_step_given_zero(&self) -> Option<f64> {
        let (hits, total) = self
            .ys
            .iter()
            .zip(&self.samples)
            .filter(|(y, _)| **y == 0)
            .fold((0u64, 0u64), |(h, t), (_, s)| (h + (s.value == 1 && !s.censored) as u64, t + 1));
        (total > 0).then(|| hits as f64 / total as f64)
    }
}

/// `P(sigma = 1 | Y = y)` by enumerating the 8 first steps.
pub fn first_step_hit_probability(y: u64) -> f64 {
    let target = 2 * y as i64;
    let hits = (0..8u32)
        .filter(|bits| (1..=3i64).any(|i| -i + if bits >> (i - 1) & 1 == 1 { 1 } else { -1 } == target))
        .count();
    hits as f64 / 8.0
}

fn geometric(u: f64, q: f64) -> u64 {
    if q >= 1.0 {
        return 0;
    }
    ((1.0 - u).ln() / (1.0 - q).ln()).floor() as u64
}

/// One replica: returns `(Y, sigma)`.
fn replica_run(field: &WeightField, index: u64, opts: &SrwOptions) -> (u64, Observation) {
    let mut r = field.reader(&[index]);
    let y = match opts.given_y {
        Some(y) => y,
        None => geometric(r.next_f64(), opts.q),
    };
    let target = 2 * y as i64;
    let mut pos = [-1i64, -2, -3];
    let mut t = 0u64;
    while t < opts.step_cap {
        let mut word = r.next_u64();
        for _ in 0..STEPS_PER_WORD {
            t += 1;
            let mut hit = false;
            for p in pos.iter_mut() {
                *p += if word & 1 == 1 { 1 } else { -1 };
                word >>= 1;
                hit |= *p == target;
            }
            if hit {
                return (y, Observation::exact(t));
            }
            if t >= opts.step_cap {
                break;
            }
        }
    }
    (y, Observation::at_least(opts.step_cap))
}

/// Runs `opts.replicas` independent replicas on `field`'s auxiliary stream.
pub fn run_srw_hitting(field: &WeightField, opts: SrwOptions) -> Result<SrwHittingExperiment> {
    if !(opts.q > 0.0 && opts.q < 1.0) {
        return Err(arg("q", format!("must lie in (0, 1), got {}", opts.q)));
    }
    if opts.replicas < 1000 {
        return Err(arg("replicas", "must be at least 1000"));
    }
    if opts.step_cap == 0 {
        return Err(arg("step_cap", "must be positive"));
    }
    let field = field.with_stream(crate::rng::StreamTag::AUXILIARY);
    let runs = replica::run(opts.replicas, |i| replica_run(&field, i, &opts));
    let (ys, samples): (Vec<u64>, Vec<Observation>) = runs.into_iter().unzip();
    SrwHittingExperiment::from_samples(opts, ys, samples)
}

impl SrwHittingExperiment {
    /// Summary statistics of stored replicas; fails like [`run_srw_hitting`]
    /// when more than 1% of them are censored.
    pub fn from_samples(opts: SrwOptions, ys: Vec<u64>, samples: Vec<Observation>) -> Result<Self> {
        let replicas = samples.len() as u64;
        if replicas < 2 || ys.len() != samples.len() {
            return Err(arg("samples", "need at least two replicas and one Y per sample"));
        }
        let censored = samples.iter().filter(|s| s.censored).count() as u64;
        if censored as f64 > MAX_CENSORED * replicas as f64 {
            return Err(Error::ExcessCensoring { censored, replicas });
        }
        let values: Vec<f64> = samples.iter().map(|s| s.value as f64).collect();
        let (mean, ci_halfwidth) = mean_ci(&values);
        let half = values.len() / 2;
        let first_half_mean = values[..half].iter().sum::<f64>() / half as f64;
        let second_half_mean = values[half..].iter().sum::<f64>() / (values.len() - half) as f64;

        // P(sigma > t) = P(sigma - 1 >= t).
        let shifted: Vec<Observation> =
            samples.iter().map(|s| Observation { value: s.value - 1, censored: s.censored }).collect();
        let grid = super::doubling_grid(opts.step_cap);
        let tail = survival_table(&shifted, &grid);
        let tail_fit = top_decades_fit(&tail, replicas);
        Ok(SrwHittingExperiment {
            options: opts,
            ys,
            samples,
            mean,
            ci_halfwidth,
            censored,
            tail,
            tail_fit,
            first_half_mean,
            second_half_mean,
        })
    }
}

/// Log-log fit over rows with `t` in `[t_top / 100, t_top]`, where `t_top` is
/// the largest grid point with at least [`TAIL_MIN_COUNT`] exceedances.
fn top_decades_fit(tail: &[SurvivalRow], replicas: u64) -> Option<LinearFit> {
    let floor = TAIL_MIN_COUNT as f64 / replicas as f64;
    let top = tail.iter().filter(|r| r.survival >= floor).map(|r| r.n).max()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .filter(|r| r.n * 100 >= top && r.n <= top && r.survival > 0.0)
        .map(|r| ((r.n as f64).ln(), r.survival.ln()))
        .unzip();
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_oracle() {
        assert_eq!(first_step_hit_probability(0), 0.5);
        assert_eq!(first_step_hit_probability(1), 0.0);
    }

    #[test]
    fn one_step_hit_given_zero() {
        let opts = SrwOptions { given_y: Some(0), ..SrwOptions::new(0.5, 100_000) };
        let e = run_srw_hitting(&WeightField::percolation(1), opts).unwrap();
        let p = e.p_one_step_given_zero().unwrap();
        assert!((p - first_step_hit_probability(0)).abs() <= 0.01, "{p}");
    }

    #[test]
    fn sampled_runs_respect_parity_and_support() {
        let e = run_srw_hitting(&WeightField::percolation(2), SrwOptions::new(0.5, 20_000)).unwrap();
        for (y, s) in e.ys.iter().zip(&e.samples) {
            assert!(s.value >= 1);
            assert!(s.censored || s.value > 2 * y);
        }
        assert_eq!(e.censored, 0);
        let zeros = e.ys.iter().filter(|&&y| y == 0).count() as f64 / 20_000.0;
        assert!((zeros - 0.5).abs() < 0.015, "{zeros}");
        let fit = e.tail_fit.unwrap();
        assert!(fit.slope <= -1.2, "{fit:?}");
        assert!(e.mean.is_finite());
    }

    #[test]
    fn tight_cap_is_reported_as_excess_censoring() {
        let opts = SrwOptions { step_cap: 2, ..SrwOptions::new(0.1, 1000) };
        assert!(matches!(run_srw_hitting(&WeightField::percolation(3), opts), Err(Error::ExcessCensoring { .. })));
        assert!(run_srw_hitting(&WeightField::percolation(3), SrwOptions::new(1.0, 1000)).is_err());
        assert!(run_srw_hitting(&WeightField::percolation(3), SrwOptions::new(0.5, 10)).is_err());
    }
}
