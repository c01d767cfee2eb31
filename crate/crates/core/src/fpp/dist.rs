use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Absolute tolerance of [`PassageDistribution::inverse_cdf_numeric`].
pub const BISECTION_TOL: f64 = 1e-12;

/// Edge passage-time distributions.
///
/// Every kind except `Truncated` carries the atom `p_c` at zero, so
/// `F(0) = p_c`. `CouplingZ2` and `CouplingOZ2` put the rest of their mass
/// beyond `p_c + (1 - p_c)/16` and `p_c + (1 - p_c)/2` at `+inf`.
///
/// Text form (also used by serde):
///
/// ```text
/// zhang-poly:a=<a>,pc=<p>      F = p_c + x^a
/// zhang-exp:b=<b>,pc=<p>       F = p_c + exp(-1/x^b)
/// coupling-z2:pc=<p>           F = p_c + (1 - p_c)(1 - e^-x)^2 / 16
/// coupling-oz2:pc=<p>          F = p_c + (1 - p_c)(1 - e^-x) / 2
/// unit-exp:pc=<p>              F = p_c + (1 - p_c)(1 - e^-x)
/// bernoulli-one:pc=<p>         times 0 with probability p_c, else 1
/// truncated:m=<m>,<inner>      min(t, m) for t drawn from <inner>
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PassageDistribution {
    ZhangPolynomial { a: f64, p_c: f64 },
    ZhangExponential { b: f64, p_c: f64 },
    CouplingZ2 { p_c: f64 },
    CouplingOZ2 { p_c: f64 },
    UnitExponential { p_c: f64 },
    BernoulliOne { p_c: f64 },
    Truncated { inner: Box<PassageDistribution>, m: f64 },
}

/// One-line form of the distribution grammar, quoted in parse errors.
pub const DIST_GRAMMAR: &str = "zhang-poly:a=<a>,pc=<p> | zhang-exp:b=<b>,pc=<p> | coupling-z2:pc=<p> | \
     coupling-oz2:pc=<p> | unit-exp:pc=<p> | bernoulli-one:pc=<p> | truncated:m=<m>,<inner>";

/// Asymptotic behaviour of a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Convergent,
    Divergent,
}

/// Gap sequence `F^-1(p_c + g_k)` is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    /// `g_k = 2^-k`.
    Dyadic,
    /// `g_k = exp(-lambda^k)` with `lambda > 1`.
    DoublyExponential(f64),
}

use PassageDistribution::*;

impl PassageDistribution {
    pub fn truncated(inner: PassageDistribution, m: f64) -> Self {
        Truncated { inner: Box::new(inner), m }
    }

    /// `F(0)`.
    pub fn p_c(&self) -> f64 {
        match self {
            ZhangPolynomial { p_c, .. }
            | ZhangExponential { p_c, .. }
            | CouplingZ2 { p_c }
            | CouplingOZ2 { p_c }
            | UnitExponential { p_c }
            | BernoulliOne { p_c } => *p_c,
            Truncated { inner, m } => {
                if *m == 0.0 {
                    1.0
                } else {
                    inner.p_c()
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(arg("pc", format!("{p} is not a probability")))
            }
        };
        match self {
            ZhangPolynomial { a, p_c } => {
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(arg("a", format!("{a} must be positive")));
                }
                prob(*p_c)
            }
            ZhangExponential { b, p_c } => {
                if !(*b > 0.0 && b.is_finite()) {
                    return Err(arg("b", format!("{b} must be positive")));
                }
                prob(*p_c)
            }
            CouplingZ2 { p_c } | CouplingOZ2 { p_c } | UnitExponential { p_c } | BernoulliOne { p_c } => {
                if *p_c >= 1.0 && !matches!(self, BernoulliOne { .. }) {
                    return Err(arg("pc", "must be below 1"));
                }
                prob(*p_c)
            }
            Truncated { inner, m } => {
                if !(*m >= 0.0) {
                    return Err(arg("m", format!("{m} must be nonnegative")));
                }
                inner.validate()
            }
        }
    }

    /// Total mass at `+inf`.
    pub fn mass_at_infinity(&self) -> f64 {
        match self {
            CouplingZ2 { p_c } => (1.0 - p_c) * 15.0 / 16.0,
            CouplingOZ2 { p_c } => (1.0 - p_c) / 2.0,
            _ => 0.0,
        }
    }

    /// `F(x) = P(t <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        match self {
            ZhangPolynomial { a, p_c } => (p_c + x.powf(*a)).min(1.0),
            ZhangExponential { b, p_c } => {
                if x == 0.0 {
                    *p_c
                } else {
                    (p_c + (-1.0 / x.powf(*b)).exp()).min(1.0)
                }
            }
            CouplingZ2 { p_c } => p_c + (1.0 - p_c) * (-(-x).exp_m1()).powi(2) / 16.0,
            CouplingOZ2 { p_c } => p_c + (1.0 - p_c) * (-(-x).exp_m1()) / 2.0,
            UnitExponential { p_c } => p_c + (1.0 - p_c) * (-(-x).exp_m1()),
            BernoulliOne { p_c } => {
                if x < 1.0 {
                    *p_c
                } else {
                    1.0
                }
            }
            Truncated { inner, m } => {
                if x >= *m {
                    1.0
                } else {
                    inner.cdf(x)
                }
            }
        }
    }

    /// Generalised inverse `inf{x >= 0 : F(x) >= u}`, `+inf` when no finite
    /// `x` qualifies. Total on `[0, 1]`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        if self.is_zero_at(u) {
            return 0.0;
        }
        let g = u - self.p_c();
        self.inverse_at_gap(g, g.ln())
    }

    fn is_zero_at(&self, u: f64) -> bool {
        match self {
            Truncated { inner, m } => *m == 0.0 || inner.is_zero_at(u),
            _ => u <= self.p_c(),
        }
    }

    /// `F^-1(p_c + g)` for `g > 0`, from the gap and its logarithm. Passing
    /// `ln g` separately keeps tiny gaps exact where `p_c + g` would round
    /// to `p_c`. Gaps reaching past `F = 1` are clamped to it.
    pub fn inverse_at_gap(&self, g: f64, log_g: f64) -> f64 {
        match self {
            ZhangPolynomial { a, p_c } => {
                let top = 1.0 - p_c;
                if g >= top {
                    top.powf(1.0 / a)
                } else {
                    (log_g / a).exp()
                }
            }
            ZhangExponential { b, p_c } => {
                let log_g = if g >= 1.0 - p_c { (1.0 - p_c).ln() } else { log_g };
                if log_g >= 0.0 {
                    f64::INFINITY
                } else {
                    (-1.0 / log_g).powf(1.0 / b)
                }
            }
            CouplingZ2 { p_c } => {
                let s = (16.0 * g / (1.0 - p_c)).sqrt();
                if s >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-s).ln_1p()
                }
            }
            CouplingOZ2 { p_c } => {
                let s = 2.0 * g / (1.0 - p_c);
                if s >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-s).ln_1p()
                }
            }
            UnitExponential { p_c } => {
                let s = g / (1.0 - p_c);
                if s >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-s).ln_1p()
                }
            }
            BernoulliOne { .. } => 1.0,
            Truncated { inner, m } => {
                if *m == 0.0 {
                    0.0
                } else {
                    inner.inverse_at_gap(g, log_g).min(*m)
                }
            }
        }
    }

    /// Edge passage time for the uniform weight `u`.
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        self.inverse_cdf(u)
    }

    /// Generalised inverse by bisection on [`cdf`](Self::cdf), to
    /// [`BISECTION_TOL`]. Slow; a cross-check for the closed forms.
    pub fn inverse_cdf_numeric(&self, u: f64) -> f64 {
        if self.cdf(0.0) >= u {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.cdf(hi) < u {
            hi *= 2.0;
            if hi > 1e300 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Whether `sum_k F^-1(p_c + g_k)` converges, judged from the decay of
    /// the summands for large `k` alone (finitely many infinite terms at
    /// small `k` are ignored here).
    pub fn tail_class(&self, spacing: Spacing) -> Verdict {
        match (self, spacing) {
            (ZhangExponential { b, .. }, Spacing::Dyadic) => {
                // Summands (k ln 2)^(-1/b): a p-series with p = 1/b.
                if *b < 1.0 {
                    Verdict::Convergent
                } else {
                    Verdict::Divergent
                }
            }
            (BernoulliOne { .. }, _) => Verdict::Divergent,
            (Truncated { inner, m }, s) => {
                if *m == 0.0 {
                    Verdict::Convergent
                } else {
                    inner.tail_class(s)
                }
            }
            // Geometric or faster decay in every remaining case.
            _ => Verdict::Convergent,
        }
    }
}

impl fmt::Display for PassageDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZhangPolynomial { a, p_c } => write!(f, "zhang-poly:a={a},pc={p_c}"),
            ZhangExponential { b, p_c } => write!(f, "zhang-exp:b={b},pc={p_c}"),
            CouplingZ2 { p_c } => write!(f, "coupling-z2:pc={p_c}"),
            CouplingOZ2 { p_c } => write!(f, "coupling-oz2:pc={p_c}"),
            UnitExponential { p_c } => write!(f, "unit-exp:pc={p_c}"),
            BernoulliOne { p_c } => write!(f, "bernoulli-one:pc={p_c}"),
            Truncated { inner, m } => write!(f, "truncated:m={m},{inner}"),
        }
    }
}

impl FromStr for PassageDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| arg("dist", format!("{s:?}: {why}; expected {DIST_GRAMMAR}"));
        let s = s.trim();
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("expected <kind>:<params>"))?;
        if kind == "truncated" {
            let (m, inner) = rest.split_once(',').ok_or_else(|| bad("expected truncated:m=<m>,<inner>"))?;
            let m = m.strip_prefix("m=").ok_or_else(|| bad("expected m=<m>"))?;
            let m: f64 = m.parse().map_err(|_| bad("m is not a number"))?;
            let d = Self::truncated(inner.parse()?, m);
            d.validate()?;
            return Ok(d);
        }
        let mut params: Vec<(&str, f64)> = Vec::new();
        for item in rest.split(',').filter(|x| !x.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v: f64 = v.trim().parse().map_err(|_| bad("value is not a number"))?;
            params.push((k.trim(), v));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let need = |key: &str| get(key).ok_or_else(|| bad(&format!("missing {key}")));
        let allowed: &[&str] = match kind {
            "zhang-poly" => &["a", "pc"],
            "zhang-exp" => &["b", "pc"],
            "coupling-z2" | "coupling-oz2" | "unit-exp" | "bernoulli-one" => &["pc"],
            _ => return Err(bad("unknown kind")),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(bad(&format!("unexpected parameter {k}")));
        }
        let d = match kind {
            "zhang-poly" => ZhangPolynomial { a: need("a")?, p_c: need("pc")? },
            "zhang-exp" => ZhangExponential { b: need("b")?, p_c: need("pc")? },
            "coupling-z2" => CouplingZ2 { p_c: need("pc")? },
            "coupling-oz2" => CouplingOZ2 { p_c: need("pc")? },
            "unit-exp" => UnitExponential { p_c: get("pc").unwrap_or(0.0) },
            _ => BernoulliOne { p_c: need("pc")? },
        };
        d.validate()?;
        Ok(d)
    }
}

impl TryFrom<String> for PassageDistribution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PassageDistribution> for String {
    fn from(d: PassageDistribution) -> String {
        d.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{StreamTag, WeightField};
    use crate::stats::{ks_p_value, ks_statistic};
    use proptest::prelude::*;

    fn all_kinds() -> Vec<PassageDistribution> {
        vec![
            ZhangPolynomial { a: 0.5, p_c: 0.5 },
            ZhangPolynomial { a: 2.0, p_c: 0.3 },
            ZhangExponential { b: 2.0, p_c: 0.5 },
            ZhangExponential { b: 0.5, p_c: 0.5 },
            CouplingZ2 { p_c: 0.5 },
            CouplingOZ2 { p_c: 0.6 },
            UnitExponential { p_c: 0.0 },
            UnitExponential { p_c: 0.25 },
            BernoulliOne { p_c: 0.5 },
            PassageDistribution::truncated(CouplingZ2 { p_c: 0.5 }, 1.0),
            PassageDistribution::truncated(ZhangExponential { b: 1.0, p_c: 0.5 }, 0.3),
        ]
    }

    #[test]
    fn inverse_examples() {
        let d = ZhangPolynomial { a: 1.0, p_c: 0.5 };
        assert_eq!(d.inverse_cdf(0.4), 0.0);
        assert!((d.inverse_cdf(0.75) - 0.25).abs() < 1e-15);
        let d = ZhangExponential { b: 1.0, p_c: 0.5 };
        assert!((d.inverse_cdf(0.5 + (-2f64).exp()) - 0.5).abs() < 1e-12);
        assert_eq!(CouplingOZ2 { p_c: 0.6 }.inverse_cdf(0.95), f64::INFINITY);
        assert_eq!(CouplingOZ2 { p_c: 0.6 }.inverse_cdf(0.8), f64::INFINITY);
        assert!(CouplingOZ2 { p_c: 0.6 }.inverse_cdf(0.79).is_finite());
        assert_eq!(CouplingZ2 { p_c: 0.5 }.inverse_cdf(0.5 + 0.5 / 16.0), f64::INFINITY);
        assert_eq!(BernoulliOne { p_c: 0.0 }.inverse_cdf(0.3), 1.0);
        assert_eq!(BernoulliOne { p_c: 0.5 }.inverse_cdf(0.5), 0.0);
    }

    #[test]
    fn masses_and_atoms() {
        for d in all_kinds() {
            assert_eq!(d.cdf(-1.0), 0.0);
            assert!((d.cdf(0.0) - d.p_c()).abs() < 1e-15, "{d}");
            let finite_mass = d.cdf(1e6);
            assert!((finite_mass + d.mass_at_infinity() - 1.0).abs() < 1e-12, "{d}");
        }
        assert!((CouplingZ2 { p_c: 0.5 }.cdf(1e6) - (0.5 + 0.5 / 16.0)).abs() < 1e-12);
        assert!((CouplingOZ2 { p_c: 0.6 }.cdf(1e6) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_bisection() {
        for d in all_kinds() {
            for i in 1..200 {
                let u = i as f64 / 200.0;
                let exact = d.inverse_cdf(u);
                let numeric = d.inverse_cdf_numeric(u);
                if exact.is_infinite() {
                    // At an atom boundary the float CDF saturates only far out.
                    assert!(numeric.is_infinite() || d.cdf(numeric) < u || numeric > 30.0, "{d} u={u}");
                } else {
                    assert!((exact - numeric).abs() < 1e-9 * exact.max(1.0), "{d} u={u}: {exact} vs {numeric}");
                }
            }
        }
    }

    #[test]
    fn coupling_gap_is_max_of_two_exponentials() {
        let pc = 0.5;
        let d = CouplingZ2 { p_c: pc };
        let f = WeightField::new(99, StreamTag::AUXILIARY);
        let width = (1.0 - pc) / 16.0;
        let sample: Vec<f64> = (0..100_000u64)
            .map(|i| {
                let u = pc + width * (1.0 - f.uniform(&[i]));
                d.inverse_cdf(u.min(pc + width * (1.0 - 1e-12)))
            })
            .collect();
        let ks = ks_statistic(&sample, |x| (-(-x).exp_m1()).powi(2));
        let pv = ks_p_value(ks, sample.len());
        assert!(pv > 0.01, "D={ks} p={pv}");
    }

    #[test]
    fn grammar_round_trips() {
        for d in all_kinds() {
            let s = d.to_string();
            assert_eq!(s.parse::<PassageDistribution>().unwrap(), d);
        }
        assert_eq!(
            "zhang-poly:a=0.5,pc=0.5".parse::<PassageDistribution>().unwrap(),
            ZhangPolynomial { a: 0.5, p_c: 0.5 }
        );
        for bad in ["zhang-poly:a=0.5", "zhang-poly:a=-1,pc=0.5", "nope:pc=0.5", "unit-exp:pc=0.5,a=1", "truncated:1,unit-exp:pc=0"] {
            assert!(bad.parse::<PassageDistribution>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn generalized_inverse_contract(k in 0usize..11, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let d = &all_kinds()[k];
            let x = d.inverse_cdf(u);
            prop_assert!(x >= 0.0);
            if x.is_finite() {
                prop_assert!(d.cdf(x) >= u - 1e-12);
            }
            prop_assert_eq!(x == 0.0, u <= d.cdf(0.0));
            let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
            prop_assert!(d.inverse_cdf(lo) <= d.inverse_cdf(hi));
        }

        #[test]
        fn truncation_coupling(k in 0usize..9, u in 0.0f64..1.0, m in 0.01f64..3.0) {
            let d = all_kinds()[k].clone();
            let t = PassageDistribution::truncated(d.clone(), m);
            let (full, cut) = (d.inverse_cdf(u), t.inverse_cdf(u));
            prop_assert!(cut <= full);
            if full <= m {
                prop_assert_eq!(cut, full);
            }
        }
    }
}
