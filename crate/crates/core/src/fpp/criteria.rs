use serde::{Deserialize, Serialize};

use super::dist::{PassageDistribution, Spacing, Verdict};
use crate::error::{arg, Result};

/// Summands below this are treated as converged and left out.
pub const SUMMAND_FLOOR: f64 = 1e-18;

/// Printed with every [`tree_rate`] result.
pub const TREE_RATE_NOTE: &str = "tree_rate uses spacings exp(-2^k); the printed formula exp(2^-k) exceeds 1 \
     and cannot be a probability gap";

/// Partial sum of `F^-1(p_c + g_k)` with an analytic verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub partial_sum: f64,
    /// `(k, summand)` for every term that entered the sum.
    pub summands: Vec<(u32, f64)>,
    /// Indices whose argument `p_c + g_k` reaches 1 and whose summand is
    /// infinite only because the support is unbounded; they are left out.
    pub boundary_terms: Vec<u32>,
    pub verdict: Verdict,
}

fn series(dist: &PassageDistribution, spacing: Spacing, k_max: u32) -> Result<Criterion> {
    dist.validate()?;
    let pc = dist.p_c();
    let mut out = Criterion { partial_sum: 0.0, summands: Vec::new(), boundary_terms: Vec::new(), verdict: Verdict::Convergent };
    for k in 1..=k_max {
        let log_g = match spacing {
            Spacing::Dyadic => -(k as f64) * std::f64::consts::LN_2,
            Spacing::DoublyExponential(lambda) => -lambda.powi(k as i32),
        };
        let g = log_g.exp();
        let v = dist.inverse_at_gap(g, log_g);
        if v.is_infinite() && g >= 1.0 - pc && dist.mass_at_infinity() == 0.0 {
            out.boundary_terms.push(k);
            continue;
        }
        if v < SUMMAND_FLOOR {
            // Summands are nonincreasing in k.
            break;
        }
        out.partial_sum += v;
        out.summands.push((k, v));
    }
    out.verdict = if out.partial_sum.is_infinite() { Verdict::Divergent } else { dist.tail_class(spacing) };
    Ok(out)
}

/// `sum_{k <= k_max} F^-1(p_c + 2^-k)`, finite iff the passage time to
/// infinity on the square lattice is.
pub fn damron_criterion(dist: &PassageDistribution, k_max: u32) -> Result<Criterion> {
    if k_max < 20 {
        return Err(arg("k_max", format!("{k_max} is below 20")));
    }
    series(dist, Spacing::Dyadic, k_max)
}

/// `sum_{k <= k_max} F^-1(p_c + exp(-lambda^k))`, the tree analogue.
pub fn tree_criterion(dist: &PassageDistribution, lambda: f64, k_max: u32) -> Result<Criterion> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(arg("lambda", format!("{lambda} must exceed 1")));
    }
    if k_max == 0 {
        return Err(arg("k_max", "must be positive"));
    }
    series(dist, Spacing::DoublyExponential(lambda), k_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRate {
    pub n: u64,
    /// `floor(log2 log2 n)`.
    pub terms: u32,
    pub value: f64,
    pub note: String,
}

/// Growth profile `sum_{k=1}^{floor(log2 log2 n)} F^-1(p_c + exp(-2^k))` of
/// passage times to depth `n` on a tree.
pub fn tree_rate(dist: &PassageDistribution, n: u64) -> Result<TreeRate> {
    if n < 16 {
        return Err(arg("n", format!("{n} is below 16")));
    }
    dist.validate()?;
    // floor(log2 log2 n) = #{k >= 1 : 2^(2^k) <= n}.
    let mut terms = 0u32;
    while 1u128.checked_shl(1u32 << (terms + 1)).is_some_and(|x| x <= n as u128) {
        terms += 1;
    }
    let value = (1..=terms)
        .map(|k| {
            let log_g = -(2f64.powi(k as i32));
            dist.inverse_at_gap(log_g.exp(), log_g)
        })
        .sum();
    Ok(TreeRate { n, terms, value, note: TREE_RATE_NOTE.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpp::PassageDistribution::*;

    #[test]
    fn dyadic_examples() {
        let c = damron_criterion(&ZhangPolynomial { a: 1.0, p_c: 0.5 }, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Convergent);
        assert!((c.partial_sum - 1.0).abs() < 1e-9, "{}", c.partial_sum);
        assert!((c.summands[0].1 - 0.5).abs() < 1e-15);

        let c = damron_criterion(&ZhangExponential { b: 1.0, p_c: 0.5 }, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Divergent);
        let (k, v) = c.summands[9];
        assert!((v - 1.0 / (k as f64 * std::f64::consts::LN_2)).abs() < 1e-12);

        let c = damron_criterion(&ZhangExponential { b: 0.5, p_c: 0.5 }, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Convergent);
        let (k, v) = c.summands[9];
        assert!((v - (k as f64 * std::f64::consts::LN_2).powi(-2)).abs() < 1e-12);
    }

    #[test]
    fn infinite_mass_diverges_until_truncated() {
        let c = damron_criterion(&CouplingZ2 { p_c: 0.5 }, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Divergent);
        assert_eq!(c.partial_sum, f64::INFINITY);
        let t = PassageDistribution::truncated(CouplingZ2 { p_c: 0.5 }, 1.0);
        let c = damron_criterion(&t, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Convergent);
        assert!(c.partial_sum.is_finite());
        let c = damron_criterion(&PassageDistribution::truncated(CouplingOZ2 { p_c: 0.6 }, 1.0), 60).unwrap();
        assert_eq!(c.verdict, Verdict::Convergent);
    }

    #[test]
    fn unbounded_support_boundary_term_is_skipped() {
        let c = damron_criterion(&UnitExponential { p_c: 0.5 }, 60).unwrap();
        assert_eq!(c.boundary_terms, vec![1]);
        assert_eq!(c.verdict, Verdict::Convergent);
    }

    #[test]
    fn bernoulli_is_divergent() {
        let c = damron_criterion(&BernoulliOne { p_c: 0.5 }, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Divergent);
        assert_eq!(c.partial_sum, 60.0);
    }

    #[test]
    fn tree_examples() {
        let c = tree_criterion(&ZhangExponential { b: 1.0, p_c: 0.5 }, 2.0, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Convergent);
        for &(k, v) in &c.summands {
            assert!((v - 2f64.powi(-(k as i32))).abs() < 1e-15);
        }
        let c = tree_criterion(&UnitExponential { p_c: 0.5 }, 2.0, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Convergent);
        for &(k, v) in &c.summands {
            let g = (-(2f64.powi(k as i32))).exp();
            assert!(v <= -(1.0 - 0.5 - g).ln() + 1e-15);
        }
        let c = tree_criterion(&BernoulliOne { p_c: 0.5 }, 3.0, 60).unwrap();
        assert_eq!(c.verdict, Verdict::Divergent);
        assert!(tree_criterion(&BernoulliOne { p_c: 0.5 }, 1.0, 60).is_err());
    }

    #[test]
    fn tree_rate_counts_log_log_terms() {
        let b = BernoulliOne { p_c: 0.5 };
        let r = tree_rate(&b, 1u64 << 32).unwrap();
        assert_eq!((r.terms, r.value), (5, 5.0));
        assert_eq!(tree_rate(&b, 16).unwrap().terms, 2);
        assert_eq!(tree_rate(&b, 255).unwrap().terms, 2);
        assert_eq!(tree_rate(&b, 256).unwrap().terms, 3);
        assert_eq!(tree_rate(&b, u64::MAX).unwrap().terms, 5);
        assert!(tree_rate(&b, 15).is_err());
        assert!(!r.note.is_empty());
    }

    #[test]
    fn small_k_max_is_rejected() {
        assert!(damron_criterion(&BernoulliOne { p_c: 0.5 }, 19).is_err());
    }
}
