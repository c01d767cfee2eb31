//! Cluster tails and the oriented crossing machinery.

use critfrog_core::embedded::doubling_grid;
use critfrog_core::percolation::{
    centered_crossing, estimate_correlation_length, estimate_oriented_pc, fit_nu, geometric_schedule,
    rightmost_point, root_cluster_sizes, Caps, CorrelationGate, CriticalSearch, Parallelogram, Ratio,
};
use critfrog_core::stats::{linear_fit, loglog_slope, mean_ci, survival_table, wilson, Observation, Z95};
use critfrog_core::{with_graph, StreamTag, Topology, WeightField};
use serde_json::{json, Value};

use super::{find, params, Context, Derived, Execution, Operation};
use crate::error::{HarnessError, Result};
use crate::row;
use crate::spec::List;
use crate::table::Table;

/// Fills `p` from the topology's exact critical value, or the stored
/// estimate on oriented topologies.
pub(crate) fn resolve_p(topology: Topology, p: &mut Option<f64>) -> Result<()> {
    if p.is_none() {
        *p = topology.exact_critical_value().or_else(|| topology.is_oriented().then(crate::pc::oriented_pc));
    }
    match *p {
        Some(v) if (0.0..=1.0).contains(&v) => Ok(()),
        Some(v) => Err(HarnessError::spec("params.p", format!("{v} is not a probability"))),
        None => Err(HarnessError::spec("params.p", format!("no critical value known for {topology}; give one"))),
    }
}

pub(crate) fn oriented_p(p: &mut Option<f64>) -> Result<()> {
    resolve_p(Topology::RotatedOriented2D, p)
}

/// Right-censored observations stored as `value` and `censored` columns.
pub(crate) fn observations(t: &Table, value: &str, censored: &str) -> Result<Vec<Observation>> {
    let v: Vec<u64> = t.column(value)?;
    let c: Vec<bool> = t.column(censored)?;
    Ok(v.into_iter().zip(c).map(|(value, censored)| Observation { value, censored }).collect())
}

pub(crate) fn survival_columns() -> [&'static str; 5] {
    ["n", "survival", "ci_low", "ci_high", "censored_fraction"]
}

fn fit_json(fit: Option<critfrog_core::stats::LinearFit>) -> Value {
    serde_json::to_value(fit).expect("fits serialize")
}

fn edge_speed_field(seed: u64) -> WeightField {
    WeightField::new(seed, StreamTag::AUXILIARY)
}

/// Edge speed used for parallelogram slopes: mean `r_n / n` over surviving
/// replicas on the auxiliary field of `seed`.
fn alpha_for(seed: u64, p: f64, n_max: u64, replicas: u64) -> Result<f64> {
    Ok(critfrog_core::percolation::estimate_edge_speed(&edge_speed_field(seed), p, n_max, replicas)?.alpha_hat)
}

params! {
    ClusterTailParams / ClusterTailArgs {
        /// Graph: lattice:<d>, oriented:<d>, rotated, tree:<d> or halfspace:<d>.
        topology: Topology = Topology::DAryTree(2),
        /// Percolation parameter; defaults to the critical value.
        p: Option<f64> = None,
        /// Clusters are cut (and censored) at this many vertices.
        size_cap: u64 = 1_000_000,
        /// Clusters are cut at this norm; unlimited by default.
        horizon: Option<u64> = None,
        /// Sizes at which the survival function is tabulated; doubling up to the cap by default.
        grid: Option<List<u64>> = None,
    }
}

pub struct ClusterTail;

impl Operation for ClusterTail {
    const NAME: &'static str = "cluster-tail";
    const REPLICAS: Option<u64> = Some(10_000);
    type Params = ClusterTailParams;

    fn resolve(p: &mut ClusterTailParams) -> Result<()> {
        resolve_p(p.topology, &mut p.p)?;
        if p.grid.is_none() {
            p.grid = Some(doubling_grid(p.size_cap).into());
        }
        Ok(())
    }

    fn execute(ctx: &Context, p: &ClusterTailParams) -> Result<Execution> {
        let caps = Caps::new(p.size_cap as usize, p.horizon.unwrap_or(u64::MAX));
        let field = WeightField::percolation(ctx.seed);
        let sizes = with_graph!(p.topology, |g| root_cluster_sizes(&g, &field, p.p.unwrap(), ctx.replicas, caps))?;
        let mut t = Table::new("sizes", &["replica", "size", "censored"]);
        for (i, s) in sizes.iter().enumerate() {
            t.push(row![i, s.value, s.censored]);
        }
        Ok(Execution { tables: vec![t], ..Default::default() })
    }

    fn derive(_: &Context, p: &ClusterTailParams, primary: &[Table]) -> Result<Derived> {
        let samples = observations(find(primary, "sizes")?, "size", "censored")?;
        let truncated = samples.iter().filter(|s| s.censored).count();
        if truncated == samples.len() {
            return Err(critfrog_core::Error::AllTruncated { size_cap: p.size_cap }.into());
        }
        let rows = survival_table(&samples, p.grid.as_deref().unwrap_or_default());
        let mut t = Table::new("tail", &survival_columns());
        for r in &rows {
            t.push(row![r.n, r.survival, r.ci_low, r.ci_high, r.censored_fraction]);
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|r| r.survival > 0.0).map(|r| (r.n as f64, r.survival.ln())).unzip();
        Ok(Derived {
            tables: vec![t],
            aggregates: json!({
                "replicas": samples.len(),
                "truncated": truncated,
                "loglog_fit": fit_json(loglog_slope(&rows)),
                "semilog_fit": fit_json(linear_fit(&xs, &ys)),
            }),
        })
    }
}

params! {
    CrossingParams / CrossingArgs {
        /// Percolation parameter; defaults to the stored oriented estimate.
        p: Option<f64> = None,
        /// Parallelogram length.
        l: u64 = 64,
        /// Window ratio, written num/den.
        delta: Ratio = Ratio::default(),
        /// Edge speed used for the slope; estimated at p when absent.
        alpha_hat: Option<f64> = None,
        /// Height of the edge-speed estimate used when alpha_hat is absent.
        speed_n_max: u64 = 200,
        /// Replicas of that estimate.
        speed_replicas: u64 = 200,
    }
}

pub struct Crossing;

impl Operation for Crossing {
    const NAME: &'static str = "crossing";
    const REPLICAS: Option<u64> = Some(1000);
    type Params = CrossingParams;

    fn resolve(p: &mut CrossingParams) -> Result<()> {
        oriented_p(&mut p.p)
    }

    fn execute(ctx: &Context, p: &CrossingParams) -> Result<Execution> {
        let prob = p.p.unwrap();
        let alpha = match p.alpha_hat {
            Some(a) => a,
            None => alpha_for(ctx.seed, prob, p.speed_n_max, p.speed_replicas)?,
        };
        let par = Parallelogram::new(prob, p.l, p.delta, alpha)?;
        let field = WeightField::percolation(ctx.seed);
        let hits = critfrog_core::replica::run(ctx.replicas, |i| centered_crossing(&field.replica(i), &par));
        let mut t = Table::new("crossings", &["replica", "crossed"]);
        for (i, h) in hits.iter().enumerate() {
            t.push(row![i, h]);
        }
        Ok(Execution {
            tables: vec![t],
            info: json!({ "alpha_hat": alpha, "parallelogram": par }),
            ..Default::default()
        })
    }

    fn derive(_: &Context, _: &CrossingParams, primary: &[Table]) -> Result<Derived> {
        let hits: Vec<bool> = find(primary, "crossings")?.column("crossed")?;
        let n = hits.len() as u64;
        let k = hits.iter().filter(|&&h| h).count() as u64;
        let estimate = k as f64 / n as f64;
        Ok(Derived {
            tables: Vec::new(),
            aggregates: json!({
                "replicas": n,
                "crossings": k,
                "estimate": estimate,
                "ci_halfwidth": Z95 * (estimate * (1.0 - estimate) / n as f64).sqrt(),
            }),
        })
    }
}

params! {
    CorrLengthParams / CorrLengthArgs {
        /// Percolation parameter; must exceed the critical value.
        p: f64 = 0.7,
        /// The search accepts L once the crossing probability clears 1 - epsilon.
        epsilon: f64 = 0.05,
        /// Normal quantile of the one-sided Wilson lower bound used by the gate.
        z: f64 = 1.0,
        /// Window ratio, written num/den.
        delta: Ratio = Ratio::default(),
        /// Edge speed used for the slope; estimated at p when absent.
        alpha_hat: Option<f64> = None,
        /// Height of the edge-speed estimate used when alpha_hat is absent.
        speed_n_max: u64 = 200,
        /// Replicas of that estimate.
        speed_replicas: u64 = 200,
        /// Increasing parallelogram lengths to try.
        schedule: List<u64> = geometric_schedule(8, 16, 2).into(),
    }
}

pub struct CorrLength;

fn trace_columns() -> [&'static str; 5] {
    ["l", "replicas", "crossings", "estimate", "lower_bound"]
}

/// First `L` of a trace table whose Wilson lower bound clears the gate.
fn first_accepted(t: &Table, gate: CorrelationGate, rows: &[usize]) -> Result<Option<u64>> {
    let ls: Vec<u64> = t.column("l")?;
    let n: Vec<u64> = t.column("replicas")?;
    let k: Vec<u64> = t.column("crossings")?;
    let target = 1.0 - gate.epsilon;
    Ok(rows.iter().copied().find(|&i| target <= 0.0 || wilson(k[i], n[i], gate.z).0 > target).map(|i| ls[i]))
}

impl Operation for CorrLength {
    const NAME: &'static str = "corr-length";
    const REPLICAS: Option<u64> = Some(1000);
    type Params = CorrLengthParams;

    fn execute(ctx: &Context, p: &CorrLengthParams) -> Result<Execution> {
        let alpha = match p.alpha_hat {
            Some(a) => a,
            None => alpha_for(ctx.seed, p.p, p.speed_n_max, p.speed_replicas)?,
        };
        let gate = CorrelationGate { epsilon: p.epsilon, z: p.z, delta: p.delta };
        let field = WeightField::percolation(ctx.seed);
        let rec = estimate_correlation_length(&field, p.p, alpha, ctx.replicas, &p.schedule, gate)?;
        let mut t = Table::new("trace", &trace_columns());
        for e in &rec.search_trace {
            t.push(row![e.l, e.replicas, e.crossings, e.estimate, e.lower_bound]);
        }
        Ok(Execution { tables: vec![t], info: json!({ "alpha_hat": alpha }), ..Default::default() })
    }

    fn derive(_: &Context, p: &CorrLengthParams, primary: &[Table]) -> Result<Derived> {
        let t = find(primary, "trace")?;
        let gate = CorrelationGate { epsilon: p.epsilon, z: p.z, delta: p.delta };
        let l_hat = first_accepted(t, gate, &(0..t.len()).collect::<Vec<_>>())?;
        Ok(Derived {
            tables: Vec::new(),
            aggregates: json!({
                "l_hat": l_hat,
                "status": if l_hat.is_some() { "found" } else { "L(p, epsilon) exceeds schedule" },
            }),
        })
    }
}

params! {
    EdgeSpeedParams / EdgeSpeedArgs {
        /// Percolation parameter; defaults to the stored oriented estimate.
        p: Option<f64> = None,
        /// Height at which r_n / n is read; the start half-line has width 2 n_max.
        n_max: u64 = 400,
    }
}

pub struct EdgeSpeedOp;

impl Operation for EdgeSpeedOp {
    const NAME: &'static str = "edge-speed";
    const REPLICAS: Option<u64> = Some(200);
    type Params = EdgeSpeedParams;

    fn resolve(p: &mut EdgeSpeedParams) -> Result<()> {
        oriented_p(&mut p.p)?;
        if p.n_max < 100 {
            return Err(HarnessError::spec("params.n_max", format!("{} is below 100", p.n_max)));
        }
        Ok(())
    }

    fn execute(ctx: &Context, p: &EdgeSpeedParams) -> Result<Execution> {
        let field = WeightField::percolation(ctx.seed);
        let window = 2 * p.n_max as i64;
        let ends =
            critfrog_core::replica::run(ctx.replicas, |i| rightmost_point(&field.replica(i), p.p.unwrap(), p.n_max, window));
        let mut t = Table::new("rightmost", &["replica", "alive", "r"]);
        for (i, r) in ends.iter().enumerate() {
            t.push(row![i, r.is_some(), r]);
        }
        Ok(Execution { tables: vec![t], info: json!({ "window": window }), ..Default::default() })
    }

    fn derive(_: &Context, p: &EdgeSpeedParams, primary: &[Table]) -> Result<Derived> {
        let ends: Vec<Option<i64>> = find(primary, "rightmost")?.optional("r")?;
        let speeds: Vec<f64> = ends.iter().flatten().map(|&r| r as f64 / p.n_max as f64).collect();
        if speeds.is_empty() {
            return Err(critfrog_core::Error::Subcritical { p: p.p.unwrap(), height: p.n_max }.into());
        }
        let (alpha_hat, ci) = mean_ci(&speeds);
        Ok(Derived {
            tables: Vec::new(),
            aggregates: json!({
                "survivors": speeds.len(),
                "alpha_hat": alpha_hat,
                "ci_halfwidth": if ci.is_finite() { ci } else { 0.0 },
            }),
        })
    }
}

params! {
    NuParallelParams / NuParallelArgs {
        /// Critical value the offsets are measured from; defaults to the stored estimate.
        p_c_hat: Option<f64> = None,
        /// Distances p - p_c_hat at which L(p, epsilon) is estimated.
        offsets: List<f64> = vec![0.02, 0.03, 0.045, 0.07, 0.1].into(),
        /// Gate of each correlation-length search, as in corr-length.
        epsilon: f64 = 0.05,
        /// Normal quantile of the gate's Wilson lower bound.
        z: f64 = 1.0,
        /// Window ratio, written num/den.
        delta: Ratio = Ratio::default(),
        /// Height of the edge-speed estimate at each p.
        speed_n_max: u64 = 400,
        /// Replicas of that estimate.
        speed_replicas: u64 = 200,
        /// Parallelogram lengths tried at each p.
        schedule: List<u64> = geometric_schedule(8, 24, 2).into(),
    }
}

pub struct NuParallel;

impl Operation for NuParallel {
    const NAME: &'static str = "nu-parallel";
    const REPLICAS: Option<u64> = Some(1000);
    type Params = NuParallelParams;

    fn resolve(p: &mut NuParallelParams) -> Result<()> {
        oriented_p(&mut p.p_c_hat)
    }

    fn execute(ctx: &Context, p: &NuParallelParams) -> Result<Execution> {
        let pc = p.p_c_hat.unwrap();
        let gate = CorrelationGate { epsilon: p.epsilon, z: p.z, delta: p.delta };
        let field = WeightField::percolation(ctx.seed);
        let mut records = Table::new("records", &["p", "alpha_hat"]);
        let mut trace = Table::new("trace", &["p", "l", "replicas", "crossings", "estimate", "lower_bound"]);
        for &off in p.offsets.iter() {
            let prob = pc + off;
            let alpha = alpha_for(ctx.seed, prob, p.speed_n_max, p.speed_replicas)?;
            let rec = estimate_correlation_length(&field, prob, alpha, ctx.replicas, &p.schedule, gate)?;
            records.push(row![prob, alpha]);
            for e in &rec.search_trace {
                trace.push(row![prob, e.l, e.replicas, e.crossings, e.estimate, e.lower_bound]);
            }
        }
        Ok(Execution { tables: vec![records, trace], ..Default::default() })
    }

    fn derive(_: &Context, p: &NuParallelParams, primary: &[Table]) -> Result<Derived> {
        let pc = p.p_c_hat.unwrap();
        let gate = CorrelationGate { epsilon: p.epsilon, z: p.z, delta: p.delta };
        let records = find(primary, "records")?;
        let trace = find(primary, "trace")?;
        let ps: Vec<f64> = records.column("p")?;
        let trace_p: Vec<f64> = trace.column("p")?;
        let mut lengths = Table::new("lengths", &["p", "l_hat"]);
        let mut points = Vec::new();
        for &prob in &ps {
            let rows: Vec<usize> = (0..trace.len()).filter(|&i| trace_p[i] == prob).collect();
            let l_hat = first_accepted(trace, gate, &rows)?;
            lengths.push(row![prob, l_hat]);
            if let Some(l) = l_hat {
                points.push((prob, l as f64));
            }
        }
        let aggregates = match fit_nu(&points, pc) {
            Ok(nu) => json!({
                "points": points.len(),
                "nu_hat": nu.nu_hat,
                "slope_se": nu.slope_se,
                "ci_low": nu.ci_low,
                "ci_high": nu.ci_high,
                "r_squared": nu.fit.r_squared,
            }),
            Err(e) => json!({ "points": points.len(), "nu_hat": null, "fit_error": e.to_string() }),
        };
        Ok(Derived { tables: vec![lengths], aggregates })
    }
}

params! {
    PcEstimateParams / PcEstimateArgs {
        /// Largest survival height; survival is also read at a half and a quarter of it.
        height: u64 = 200,
        /// Survival samples per batch, shared by every bisection step.
        replicas_per_batch: u64 = 20_000,
        /// Independent batches; their spread gives the interval.
        batches: u64 = 4,
        /// Lower end of the bisection bracket.
        bracket_low: f64 = 0.55,
        /// Upper end of the bisection bracket.
        bracket_high: f64 = 0.75,
        /// Bisection steps per batch.
        iterations: u32 = 14,
    }
}

pub struct PcEstimate;

impl Operation for PcEstimate {
    const NAME: &'static str = "pc-estimate";
    const REPLICAS: Option<u64> = None;
    type Params = PcEstimateParams;

    fn execute(ctx: &Context, p: &PcEstimateParams) -> Result<Execution> {
        let search = CriticalSearch {
            height: p.height,
            replicas_per_batch: p.replicas_per_batch,
            batches: p.batches,
            bracket: (p.bracket_low, p.bracket_high),
            iterations: p.iterations,
        };
        let est = estimate_oriented_pc(&WeightField::percolation(ctx.seed), search)?;
        let mut t = Table::new("batches", &["batch", "p_c"]);
        for (i, b) in est.batch_estimates.iter().enumerate() {
            t.push(row![i, b]);
        }
        Ok(Execution { tables: vec![t], info: json!({ "heights": est.heights }), ..Default::default() })
    }

    fn derive(_: &Context, _: &PcEstimateParams, primary: &[Table]) -> Result<Derived> {
        let b: Vec<f64> = find(primary, "batches")?.column("p_c")?;
        let (p_c, ci) = mean_ci(&b);
        Ok(Derived { tables: Vec::new(), aggregates: json!({ "p_c": p_c, "ci_halfwidth": ci }) })
    }
}
