//! Oriented percolation on the rotated lattice, swept one height at a time.
//!
//! A layer is the sorted list of first coordinates `m` of the wet vertices
//! at height `n` (all with `m = n mod 2`). The edge `(m, n) -> (m +- 1, n + 1)`
//! carries the same weight as in [`Lattice::rotated`](crate::Lattice::rotated).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cluster::check_p;
use crate::error::{arg, Error, Result};
use crate::replica;
use crate::rng::WeightField;
use crate::stats::{linear_fit, mean_ci, wilson, LinearFit, Z95};
use crate::substrate::rotated_edge_key;

/// Slack used when rounding real boundary lines to integers.
const ROUND_EPS: f64 = 1e-9;

/// Advances `layer` at height `n` one step, keeping targets in `[lo, hi]`.
#[inline]
pub(crate) fn advance(field: &WeightField, p: f64, n: i64, layer: &[i64], lo: i64, hi: i64, next: &mut Vec<i64>) {
    next.clear();
    for &m in layer {
        for dir in [-1i64, 1] {
            let t = m + dir;
            if t < lo || t > hi || next.last() == Some(&t) {
                continue;
            }
            if field.weight(rotated_edge_key(m, n, dir)) <= p {
                next.push(t);
            }
        }
    }
}

/// Like [`advance`] but records, for each new vertex, the index of the
/// first vertex of `layer` that reached it.
fn advance_traced(
    field: &WeightField,
    p: f64,
    n: i64,
    layer: &[i64],
    lo: i64,
    hi: i64,
    next: &mut Vec<i64>,
    parents: &mut Vec<u32>,
) {
    next.clear();
    parents.clear();
    for (i, &m) in layer.iter().enumerate() {
        for dir in [-1i64, 1] {
            let t = m + dir;
            if t < lo || t > hi || next.last() == Some(&t) {
                continue;
            }
            if field.weight(rotated_edge_key(m, n, dir)) <= p {
                next.push(t);
                parents.push(i as u32);
            }
        }
    }
}

/// Height reached by the forward cluster of `(0, 0)`: the last height with a
/// wet vertex, or `cap` if the cluster survives that long.
pub fn survival_height(field: &WeightField, p: f64, cap: u64) -> u64 {
    let mut layer = vec![0i64];
    let mut next = Vec::new();
    for n in 0..cap as i64 {
        advance(field, p, n, &layer, i64::MIN, i64::MAX, &mut next);
        if next.is_empty() {
            return n as u64;
        }
        std::mem::swap(&mut layer, &mut next);
    }
    cap
}

/// A positive rational number, written `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(arg("delta", format!("{num}/{den} is not a positive rational")));
        }
        Ok(Ratio { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Ratio {
    fn default() -> Self {
        Ratio { num: 1, den: 10 }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || arg("delta", format!("cannot parse {s:?} as num/den"));
        match s.split_once('/') {
            Some((a, b)) => Ratio::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => Ratio::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl TryFrom<String> for Ratio {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Ratio> for String {
    fn from(r: Ratio) -> String {
        r.to_string()
    }
}

fn ceil_div(a: i128, b: i128) -> i64 {
    let q = a.div_euclid(b);
    (if a.rem_euclid(b) == 0 { q } else { q + 1 }) as i64
}

/// A horizontal run of rotated-lattice vertices at one height. Only the
/// coordinates `m` in `[lo, hi]` with `m = height mod 2` belong to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
    pub height: i64,
}

impl Window {
    /// Rounds `[lo, hi]` at `height` to a parity-valid window, raising `lo`
    /// by one when it has the wrong parity.
    fn snapped(lo: i64, hi: i64, height: i64) -> Self {
        let lo = if (lo - height).rem_euclid(2) == 0 { lo } else { lo + 1 };
        Window { lo, hi, height }
    }

    pub fn contains(&self, m: i64) -> bool {
        (self.lo..=self.hi).contains(&m) && (m - self.height).rem_euclid(2) == 0
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn intersect(&self, lo: i64, hi: i64) -> Window {
        Window::snapped(self.lo.max(lo), self.hi.min(hi), self.height)
    }

    /// The vertices of the window in increasing order.
    pub fn points(&self) -> impl Iterator<Item = i64> {
        let lo = self.lo;
        (lo..=self.hi).step_by(2)
    }
}

/// A rotated-lattice vertex `(m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corner {
    pub m: i64,
    pub n: i64,
}

/// The parallelogram with bottom edge `[-1.5 dL, -0.5 dL] x {0}` and sides of
/// slope `1 / alpha_hat`, together with its crossing windows.
///
/// The top height is `ceil((1 + 3d) L / alpha_hat)`. Left corners are rounded
/// up and right corners down to valid vertices. A vertex `(m, n)` lies inside
/// when `-1.5 dL + alpha_hat n <= m <= -0.5 dL + alpha_hat n` and
/// `0 <= n <= top`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parallelogram {
    pub p: f64,
    pub l: u64,
    pub delta: Ratio,
    pub alpha_hat: f64,
    pub u0: Corner,
    pub v0: Corner,
    pub u1: Corner,
    pub v1: Corner,
    /// `[ceil(-1.25 dL), ceil(-0.75 dL)] x {0}`, intersected with the bottom row.
    pub start: Window,
    /// `[ceil((1 + 1.75 d) L), ceil((1 + 2.25 d) L)] x {top}`, intersected with the top row.
    pub end: Window,
}

impl Parallelogram {
    pub fn new(p: f64, l: u64, delta: Ratio, alpha_hat: f64) -> Result<Self> {
        check_p(p)?;
        if l == 0 {
            return Err(arg("L", "must be positive"));
        }
        if !(alpha_hat > 0.0 && alpha_hat <= 1.0) {
            return Err(arg("alpha_hat", format!("{alpha_hat} is outside (0, 1]")));
        }
        let (num, den, li) = (delta.num as i128, delta.den as i128, l as i128);
        // Multiples of L in units of 1 / (4 den).
        let q = |whole: i128, quarters: i128| (whole * 4 * den + quarters * num) * li;
        let top_real = (q(1, 12) as f64 / (4 * den) as f64) / alpha_hat;
        let top = (top_real - ROUND_EPS).ceil() as i64;
        let mut par = Parallelogram {
            p,
            l,
            delta,
            alpha_hat,
            u0: Corner { m: 0, n: 0 },
            v0: Corner { m: 0, n: 0 },
            u1: Corner { m: 0, n: top },
            v1: Corner { m: 0, n: top },
            start: Window { lo: 0, hi: -1, height: 0 },
            end: Window { lo: 0, hi: -1, height: top },
        };
        let (lo0, hi0) = par.row(0);
        let (lot, hit) = par.row(top);
        par.u0.m = lo0;
        par.v0.m = hi0;
        par.u1.m = lot;
        par.v1.m = hit;
        let start = Window::snapped(ceil_div(q(0, -5), 4 * den), ceil_div(q(0, -3), 4 * den), 0);
        par.start = start.intersect(lo0, hi0);
        if par.start.is_empty() {
            return Err(Error::DegenerateWindow {
                window: "start",
                detail: format!("{start:?} is empty within the bottom row [{lo0}, {hi0}] for L={l}, delta={delta}"),
            });
        }
        let end = Window::snapped(ceil_div(q(1, 7), 4 * den), ceil_div(q(1, 9), 4 * den), top);
        par.end = end.intersect(lot, hit);
        if par.end.is_empty() {
            return Err(Error::DegenerateWindow {
                window: "end",
                detail: format!("{end:?} is empty within the top row [{lot}, {hit}] for L={l}, delta={delta}"),
            });
        }
        Ok(par)
    }

    pub fn top(&self) -> i64 {
        self.end.height
    }

    /// Parity-valid bounds of the parallelogram at height `n` (possibly empty).
    pub fn row(&self, n: i64) -> (i64, i64) {
        let dl = self.delta.value() * self.l as f64;
        let left = -1.5 * dl + self.alpha_hat * n as f64;
        let right = -0.5 * dl + self.alpha_hat * n as f64;
        let w = Window::snapped((left - ROUND_EPS).ceil() as i64, (right + ROUND_EPS).floor() as i64, n);
        let hi = if (w.hi - n).rem_euclid(2) == 0 { w.hi } else { w.hi - 1 };
        (w.lo, hi)
    }

    pub fn contains(&self, m: i64, n: i64) -> bool {
        if n < 0 || n > self.top() || (m - n).rem_euclid(2) != 0 {
            return false;
        }
        let (lo, hi) = self.row(n);
        lo <= m && m <= hi
    }
}

/// Whether the parallelogram has a centered crossing on `field`.
pub fn centered_crossing(field: &WeightField, par: &Parallelogram) -> bool {
    let mut layer: Vec<i64> = par.start.points().collect();
    let mut next = Vec::with_capacity(layer.len() + 2);
    for n in 0..par.top() {
        let (lo, hi) = par.row(n + 1);
        advance(field, par.p, n, &layer, lo, hi, &mut next);
        if next.is_empty() {
            return false;
        }
        std::mem::swap(&mut layer, &mut next);
    }
    layer.iter().any(|&m| par.end.contains(m))
}

/// A centered crossing as a list of vertices from the start window to the end
/// window, or `None` when there is none.
pub fn crossing_path(field: &WeightField, par: &Parallelogram) -> Option<Vec<Corner>> {
    let mut layers: Vec<Vec<i64>> = vec![par.start.points().collect()];
    let mut parents: Vec<Vec<u32>> = vec![Vec::new()];
    for n in 0..par.top() {
        let (lo, hi) = par.row(n + 1);
        let (mut next, mut par_idx) = (Vec::new(), Vec::new());
        advance_traced(field, par.p, n, layers.last().unwrap(), lo, hi, &mut next, &mut par_idx);
        if next.is_empty() {
            return None;
        }
        layers.push(next);
        parents.push(par_idx);
    }
    let top = par.top() as usize;
    let mut idx = layers[top].iter().position(|&m| par.end.contains(m))?;
    let mut path = Vec::with_capacity(top + 1);
    for n in (0..=top).rev() {
        path.push(Corner { m: layers[n][idx], n: n as i64 });
        if n > 0 {
            idx = parents[n][idx] as usize;
        }
    }
    path.reverse();
    Some(path)
}

/// Crossing frequency over independent replicas of a field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingExperiment {
    pub parallelogram: Parallelogram,
    pub replicas: u64,
    pub crossings: u64,
    pub estimate: f64,
    /// 95% normal-approximation half width.
    pub ci_halfwidth: f64,
}

pub fn run_crossing_experiment(field: &WeightField, par: &Parallelogram, replicas: u64) -> CrossingExperiment {
    let hits = replica::run(replicas, |i| centered_crossing(&field.replica(i), par));
    let crossings = hits.iter().filter(|&&h| h).count() as u64;
    let estimate = if replicas == 0 { f64::NAN } else { crossings as f64 / replicas as f64 };
    let ci_halfwidth = Z95 * (estimate * (1.0 - estimate) / replicas as f64).sqrt();
    CrossingExperiment { parallelogram: par.clone(), replicas, crossings, estimate, ci_halfwidth }
}

/// Estimate of the edge speed `alpha(p)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpeed {
    pub p: f64,
    pub n_max: u64,
    /// The start set is `[-window, 0] x {0}`.
    pub window: i64,
    pub replicas: u64,
    /// Replicas whose process was still alive at `n_max`.
    pub survivors: u64,
    pub alpha_hat: f64,
    pub ci_halfwidth: f64,
}

/// Rightmost wet point at height `n_max` started from the even points of
/// `[-window, 0] x {0}`, or `None` if the process dies first.
pub fn rightmost_point(field: &WeightField, p: f64, n_max: u64, window: i64) -> Option<i64> {
    let mut layer: Vec<i64> = (-window..=0).filter(|m| m % 2 == 0).collect();
    let mut next = Vec::with_capacity(layer.len() + 2);
    for n in 0..n_max as i64 {
        advance(field, p, n, &layer, i64::MIN, i64::MAX, &mut next);
        if next.is_empty() {
            return None;
        }
        std::mem::swap(&mut layer, &mut next);
    }
    layer.last().copied()
}

/// Mean of `r_n / n` at `n = n_max` over surviving replicas, with the start
/// half-line truncated to width `2 n_max`.
pub fn estimate_edge_speed(field: &WeightField, p: f64, n_max: u64, replicas: u64) -> Result<EdgeSpeed> {
    check_p(p)?;
    if n_max < 100 {
        return Err(arg("n_max", format!("{n_max} is below 100")));
    }
    if replicas == 0 {
        return Err(arg("replicas", "must be positive"));
    }
    let window = 2 * n_max as i64;
    let ends = replica::run(replicas, |i| rightmost_point(&field.replica(i), p, n_max, window));
    let speeds: Vec<f64> = ends.iter().flatten().map(|&r| r as f64 / n_max as f64).collect();
    if speeds.is_empty() {
        return Err(Error::Subcritical { p, height: n_max });
    }
    let (alpha_hat, ci) = mean_ci(&speeds);
    Ok(EdgeSpeed {
        p,
        n_max,
        window,
        replicas,
        survivors: speeds.len() as u64,
        alpha_hat,
        ci_halfwidth: if ci.is_finite() { ci } else { 0.0 },
    })
}

/// Confidence gate for the correlation-length search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGate {
    pub epsilon: f64,
    /// Normal quantile of the one-sided Wilson lower bound that must exceed
    /// `1 - epsilon`.
    pub z: f64,
    pub delta: Ratio,
}

impl Default for CorrelationGate {
    fn default() -> Self {
        CorrelationGate { epsilon: 0.05, z: 1.0, delta: Ratio::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub l: u64,
    pub replicas: u64,
    pub crossings: u64,
    pub estimate: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Found,
    /// L(p, epsilon) exceeds schedule.
    ScheduleExhausted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationLengthRecord {
    pub p: f64,
    pub gate: CorrelationGate,
    pub alpha_hat: f64,
    pub l_hat: Option<u64>,
    pub status: SearchStatus,
    pub search_trace: Vec<TraceEntry>,
}

/// `count` lengths growing geometrically by `2^(1/per_octave)` from `start`,
/// rounded and deduplicated.
pub fn geometric_schedule(start: u64, count: usize, per_octave: u32) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(count);
    let ratio = 2f64.powf(1.0 / per_octave.max(1) as f64);
    let mut x = start.max(1) as f64;
    while out.len() < count {
        let v = x.round() as u64;
        if out.last() != Some(&v) {
            out.push(v);
        }
        x *= ratio;
    }
    out
}

/// Walks `schedule` and returns the first `L` whose crossing frequency
/// clears `1 - epsilon` with the Wilson lower bound at the gate's `z`.
///
/// An `epsilon >= 1` gate is vacuous and accepts the first `L`. Lengths whose
/// windows round to nothing are skipped.
pub fn estimate_correlation_length(
    field: &WeightField,
    p: f64,
    alpha_hat: f64,
    replicas: u64,
    schedule: &[u64],
    gate: CorrelationGate,
) -> Result<CorrelationLengthRecord> {
    check_p(p)?;
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(arg("L_schedule", "must be nonempty and strictly increasing"));
    }
    if replicas == 0 {
        return Err(arg("replicas", "must be positive"));
    }
    let mut record = CorrelationLengthRecord {
        p,
        gate,
        alpha_hat,
        l_hat: None,
        status: SearchStatus::ScheduleExhausted,
        search_trace: Vec::new(),
    };
    let target = 1.0 - gate.epsilon;
    for &l in schedule {
        let par = match Parallelogram::new(p, l, gate.delta, alpha_hat) {
            Ok(par) => par,
            Err(Error::DegenerateWindow { .. }) => continue,
            Err(e) => return Err(e),
        };
        let exp = run_crossing_experiment(field, &par, replicas);
        let lower_bound = wilson(exp.crossings, replicas, gate.z).0;
        record.search_trace.push(TraceEntry { l, replicas, crossings: exp.crossings, estimate: exp.estimate, lower_bound });
        if target <= 0.0 || lower_bound > target {
            record.l_hat = Some(l);
            record.status = SearchStatus::Found;
            break;
        }
    }
    Ok(record)
}

/// Fitted exponent of `L(p) ~ (p - p_c)^(-nu)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuEstimate {
    pub nu_hat: f64,
    pub slope_se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_c_hat: f64,
    pub fit: LinearFit,
}

/// Least-squares fit of `log L` against `log (p - p_c_hat)` over `(p, L)`
/// points; `nu_hat` is minus the slope.
pub fn fit_nu(points: &[(f64, f64)], p_c_hat: f64) -> Result<NuEstimate> {
    let mut ps: Vec<f64> = points.iter().map(|x| x.0).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    if ps.len() < 4 {
        return Err(arg("records", format!("need at least 4 distinct p, got {}", ps.len())));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(p, l) in points {
        if !(p > p_c_hat) {
            return Err(arg("records", format!("p = {p} is not above p_c = {p_c_hat}")));
        }
        if !(l > 0.0) {
            return Err(arg("records", format!("nonpositive length {l}")));
        }
        xs.push((p - p_c_hat).ln());
        ys.push(l.ln());
    }
    let fit = linear_fit(&xs, &ys).ok_or_else(|| arg("records", "degenerate regression"))?;
    let nu_hat = -fit.slope;
    let half = if fit.slope_se.is_finite() { Z95 * fit.slope_se } else { f64::INFINITY };
    Ok(NuEstimate { nu_hat, slope_se: fit.slope_se, ci_low: nu_hat - half, ci_high: nu_hat + half, p_c_hat, fit })
}

/// [`fit_nu`] over the records that found a length.
pub fn estimate_nu_parallel(records: &[CorrelationLengthRecord], p_c_hat: f64) -> Result<NuEstimate> {
    let points: Vec<(f64, f64)> = records.iter().filter_map(|r| r.l_hat.map(|l| (r.p, l as f64))).collect();
    fit_nu(&points, p_c_hat)
}

/// Estimate of the oriented critical value with a batch confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub p_c: f64,
    pub ci_halfwidth: f64,
    pub batch_estimates: Vec<f64>,
    pub heights: [u64; 3],
    pub replicas_per_batch: u64,
    pub iterations: u32,
}

/// Settings for [`estimate_oriented_pc`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    /// Largest survival height; survival is also read at a half and a quarter of it.
    pub height: u64,
    pub replicas_per_batch: u64,
    pub batches: u64,
    pub bracket: (f64, f64),
    pub iterations: u32,
}

impl Default for CriticalSearch {
    fn default() -> Self {
        CriticalSearch { height: 200, replicas_per_batch: 20_000, batches: 4, bracket: (0.55, 0.75), iterations: 14 }
    }
}

/// Curvature of `log P(survive to h)` in `log h` over `h/4, h/2, h`:
/// positive above criticality, where survival levels off, and negative
/// below it. Zero survivors count as minus infinity.
fn survival_curvature(fields: &[WeightField], p: f64, height: u64) -> f64 {
    let hs = [height / 4, height / 2, height];
    let reach = replica::run(fields.len() as u64, |i| survival_height(&fields[i as usize], p, height));
    let count = |h: u64| reach.iter().filter(|&&r| r >= h).count() as f64;
    let (a, b, c) = (count(hs[0]), count(hs[1]), count(hs[2]));
    if c == 0.0 {
        return f64::NEG_INFINITY;
    }
    (c.ln() - b.ln()) - (b.ln() - a.ln())
}

/// Bisection for the oriented critical value on the sign of the survival
/// curvature, run independently on `batches` disjoint blocks of replicas.
/// Each batch reuses its fields for every trial `p`.
pub fn estimate_oriented_pc(field: &WeightField, search: CriticalSearch) -> Result<CriticalEstimate> {
    let (lo0, hi0) = search.bracket;
    if !(0.0 <= lo0 && lo0 < hi0 && hi0 <= 1.0) {
        return Err(arg("bracket", format!("({lo0}, {hi0}) is not an increasing subinterval of [0, 1]")));
    }
    if search.height < 8 || search.batches < 2 || search.replicas_per_batch == 0 {
        return Err(arg("search", "need height >= 8, at least 2 batches and some replicas"));
    }
    let mut estimates = Vec::with_capacity(search.batches as usize);
    for b in 0..search.batches {
        let fields: Vec<WeightField> =
            (0..search.replicas_per_batch).map(|i| field.replica(b * search.replicas_per_batch + i)).collect();
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..search.iterations {
            let mid = 0.5 * (lo + hi);
            if survival_curvature(&fields, mid, search.height) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        estimates.push(0.5 * (lo + hi));
    }
    let (p_c, ci_halfwidth) = mean_ci(&estimates);
    Ok(CriticalEstimate {
        p_c,
        ci_halfwidth,
        batch_estimates: estimates,
        heights: [search.height / 4, search.height / 2, search.height],
        replicas_per_batch: search.replicas_per_batch,
        iterations: search.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::{explore_cluster, Caps};
    use crate::substrate::{Lattice, Point, Restricted};

    fn par(p: f64, l: u64, alpha: f64) -> Parallelogram {
        Parallelogram::new(p, l, Ratio::default(), alpha).unwrap()
    }

    /// Reachability by generic breadth-first search on the rotated lattice
    /// restricted to the parallelogram.
    fn bfs_crossing(field: &WeightField, par: &Parallelogram) -> bool {
        let pc = par.clone();
        let g = Restricted::new(Lattice::rotated(), move |v: &Point| pc.contains(v.coords()[0], v.coords()[1]));
        par.start.points().any(|m| {
            let c = explore_cluster(&g, field, &Point::new(&[m, 0]), par.p, Caps::size_only(usize::MAX)).unwrap();
            c.vertices.iter().any(|v| v.coords()[1] == par.top() && par.end.contains(v.coords()[0]))
        })
    }

    #[test]
    fn full_openness_geometry() {
        let q = par(1.0, 40, 1.0);
        assert_eq!(q.start, Window { lo: -4, hi: -3, height: 0 });
        assert_eq!(q.start.points().collect::<Vec<_>>(), vec![-4]);
        assert_eq!(q.top(), 52);
        assert_eq!(q.end.points().collect::<Vec<_>>(), vec![48]);
        assert_eq!((q.u0, q.v0), (Corner { m: -6, n: 0 }, Corner { m: -2, n: 0 }));
        assert_eq!((q.u1, q.v1), (Corner { m: 46, n: 52 }, Corner { m: 50, n: 52 }));
        let f = WeightField::percolation(1);
        assert!(centered_crossing(&f, &q));
        assert!(bfs_crossing(&f, &q));
        assert!(!centered_crossing(&f, &par(0.0, 40, 1.0)));
    }

    #[test]
    fn degenerate_window_is_reported() {
        let e = Parallelogram::new(0.5, 1, Ratio::default(), 0.5).unwrap_err();
        assert!(matches!(e, Error::DegenerateWindow { window: "start", .. }), "{e}");
    }

    #[test]
    fn sweep_agrees_with_breadth_first_oracle() {
        let base = WeightField::percolation(21);
        for (p, l, alpha) in [(0.9, 40, 0.78), (0.95, 20, 0.9), (0.8, 160, 0.58), (0.75, 320, 0.45)] {
            let q = par(p, l, alpha);
            let mut hits = 0;
            for i in 0..100 {
                let f = base.replica(i);
                let a = centered_crossing(&f, &q);
                assert_eq!(a, bfs_crossing(&f, &q), "p={p} L={l} replica {i}");
                assert_eq!(a, crossing_path(&f, &q).is_some());
                hits += a as u32;
            }
            assert!(hits > 0 && hits < 100, "uninformative case p={p}: {hits}");
        }
    }

    #[test]
    fn crossing_paths_replay() {
        let base = WeightField::percolation(22);
        let q = par(0.9, 80, 0.78);
        let mut found = 0;
        for i in 0..100 {
            let f = base.replica(i);
            let Some(path) = crossing_path(&f, &q) else { continue };
            found += 1;
            assert!(q.start.contains(path[0].m) && path[0].n == 0);
            let last = path.last().unwrap();
            assert!(q.end.contains(last.m) && last.n == q.top());
            for w in path.windows(2) {
                let (a, b) = (w[0], w[1]);
                assert_eq!(b.n, a.n + 1);
                assert_eq!((b.m - a.m).abs(), 1);
                assert!(q.contains(b.m, b.n));
                assert!(f.weight(rotated_edge_key(a.m, a.n, b.m - a.m)) <= q.p);
            }
        }
        assert!(found > 10);
    }

    #[test]
    fn crossing_is_monotone_in_p() {
        let base = WeightField::percolation(23);
        for i in 0..200 {
            let f = base.replica(i);
            let mut prev = false;
            for p in [0.8, 0.85, 0.9, 0.95, 0.99] {
                let now = centered_crossing(&f, &par(p, 80, 0.7));
                assert!(now || !prev);
                prev = now;
            }
        }
    }

    #[test]
    fn edge_speed_extremes() {
        let f = WeightField::percolation(24);
        let s = estimate_edge_speed(&f, 1.0, 100, 4).unwrap();
        assert_eq!(s.alpha_hat, 1.0);
        assert_eq!(s.window, 200);
        assert!(matches!(estimate_edge_speed(&f, 0.3, 200, 8), Err(Error::Subcritical { .. })));
        assert!(estimate_edge_speed(&f, 0.8, 99, 8).is_err());
    }

    #[test]
    fn edge_speed_is_monotone_on_common_seeds() {
        let f = WeightField::percolation(25);
        let alphas: Vec<f64> =
            [0.68, 0.72, 0.8, 0.9].iter().map(|&p| estimate_edge_speed(&f, p, 200, 20).unwrap().alpha_hat).collect();
        assert!(alphas.windows(2).all(|w| w[0] <= w[1]), "{alphas:?}");
        assert!(alphas[0] > 0.0 && alphas[3] < 1.0);
    }

    #[test]
    fn rightmost_point_is_monotone_pathwise() {
        let base = WeightField::percolation(26);
        for i in 0..50 {
            let f = base.replica(i);
            let a = rightmost_point(&f, 0.7, 150, 300);
            let b = rightmost_point(&f, 0.75, 150, 300);
            if let Some(a) = a {
                assert!(b.unwrap() >= a);
            }
        }
    }

    #[test]
    fn correlation_length_search() {
        let f = WeightField::percolation(27);
        let schedule = geometric_schedule(40, 6, 1);
        assert_eq!(schedule, vec![40, 80, 160, 320, 640, 1280]);
        let alpha = |p: f64| estimate_edge_speed(&f.with_stream(crate::StreamTag::AUXILIARY), p, 400, 20).unwrap().alpha_hat;

        let vacuous = CorrelationGate { epsilon: 1.0, ..Default::default() };
        let r = estimate_correlation_length(&f, 0.7, alpha(0.7), 50, &schedule, vacuous).unwrap();
        assert_eq!(r.l_hat, Some(40));

        let gate = CorrelationGate::default();
        let r = estimate_correlation_length(&f, 0.99, alpha(0.99), 200, &schedule[2..], gate).unwrap();
        assert_eq!(r.l_hat, Some(160), "{:?}", r.search_trace);

        let mut prev = 0;
        for p in [0.97, 0.93, 0.9] {
            let r = estimate_correlation_length(&f, p, alpha(p), 100, &schedule, gate).unwrap();
            let l = r.l_hat.expect("schedule exhausted");
            assert!(l >= prev, "p={p}: {:?}", r.search_trace);
            prev = l;
        }

        let r = estimate_correlation_length(&f, 0.66, alpha(0.66), 50, &[20, 30], gate).unwrap();
        assert_eq!(r.status, SearchStatus::ScheduleExhausted);
        assert_eq!(r.search_trace.len(), 2);
    }

    #[test]
    fn planted_regression_recovers_slope() {
        let pc = 0.6;
        let points: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0, 32.0].iter().map(|k| (pc + 1.0 / k, k * k)).collect();
        let nu = fit_nu(&points, pc).unwrap();
        assert!((nu.nu_hat - 2.0).abs() < 1e-6, "{}", nu.nu_hat);
    }

    #[test]
    fn degenerate_regressions_are_rejected() {
        assert!(fit_nu(&[(0.7, 10.0), (0.7, 12.0), (0.7, 11.0), (0.7, 9.0)], 0.6).is_err());
        assert!(fit_nu(&[(0.7, 10.0), (0.8, 12.0), (0.9, 11.0)], 0.6).is_err());
        assert!(fit_nu(&[(0.5, 10.0), (0.8, 12.0), (0.9, 11.0), (0.95, 3.0)], 0.6).is_err());
    }

    #[test]
    fn critical_value_bracket() {
        let f = WeightField::percolation(28);
        let search = CriticalSearch { height: 64, replicas_per_batch: 4000, batches: 3, bracket: (0.55, 0.75), iterations: 10 };
        let est = estimate_oriented_pc(&f, search).unwrap();
        assert!((0.6..0.69).contains(&est.p_c), "{est:?}");
        assert_eq!(est.batch_estimates.len(), 3);
    }

    #[test]
    fn ratio_round_trip() {
        let r: Ratio = "1/10".parse().unwrap();
        assert_eq!(r, Ratio::default());
        assert_eq!(r.to_string(), "1/10");
        assert!("0/3".parse::<Ratio>().is_err());
    }
}
