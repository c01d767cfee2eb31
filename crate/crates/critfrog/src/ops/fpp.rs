//! Passage times to spheres and the summability criteria.

use critfrog_core::fpp::{damron_criterion, rho_trace, tree_criterion, tree_rate, PassageDistribution, RhoRule, TREE_RATE_NOTE};
use critfrog_core::stats::mean_ci;
use critfrog_core::{with_graph, Topology, WeightField};
use serde_json::json;

use super::{find, params, Context, Derived, Execution, Operation, ReplicaFailure};
use crate::error::{HarnessError, Result};
use crate::row;
use crate::spec::List;
use crate::table::Table;

params! {
    RhoTraceParams / RhoTraceArgs {
        /// Graph: lattice:<d>, oriented:<d>, rotated, tree:<d> or halfspace:<d>.
        topology: Topology = Topology::Lattice(2),
        /// Edge-time law, e.g. zhang-poly:a=0.5,pc=0.5 (see the README for the grammar).
        dist: PassageDistribution = PassageDistribution::ZhangPolynomial { a: 0.5, p_c: 0.5 },
        /// Increasing sphere radii.
        radii: List<u64> = vec![16, 32, 64, 128, 256].into(),
        /// Search horizon; defaults to the last radius.
        horizon: Option<u64> = None,
        /// Plausibly finite if the last three increments are below this fraction of the first time.
        finite_fraction: f64 = 0.05,
        /// Plausibly infinite if the last three increments exceed this.
        infinite_floor: f64 = 0.05,
    }
}

pub struct RhoTraceOp;

impl RhoTraceParams {
    fn rule(&self) -> RhoRule {
        RhoRule { finite_fraction: self.finite_fraction, infinite_floor: self.infinite_floor }
    }
}

impl Operation for RhoTraceOp {
    const NAME: &'static str = "rho-trace";
    const REPLICAS: Option<u64> = Some(50);
    type Params = RhoTraceParams;

    fn resolve(p: &mut RhoTraceParams) -> Result<()> {
        let last = *p.radii.last().ok_or_else(|| HarnessError::spec("params.radii", "must be nonempty"))?;
        p.horizon.get_or_insert(last);
        Ok(())
    }

    fn execute(ctx: &Context, p: &RhoTraceParams) -> Result<Execution> {
        let horizon = p.horizon.unwrap();
        let runs = critfrog_core::replica::run(ctx.replicas, |i| {
            let field = WeightField::percolation(ctx.replica_seed(i));
            with_graph!(p.topology, |g| rho_trace(&g, &field, &p.dist, &p.radii, horizon, p.rule())
                .map(|r| (r.times, r.verdict, r.discovered)))
        });
        let mut t = Table::new("rho", &["replica", "seed", "radius", "time", "verdict"]);
        let mut failures = Vec::new();
        let mut discovered = Vec::new();
        for (i, run) in runs.into_iter().enumerate() {
            match run {
                Ok((times, verdict, seen)) => {
                    for (r, time) in p.radii.iter().zip(&times) {
                        t.push(row![i, ctx.replica_seed(i as u64), r, time, verdict.to_string()]);
                    }
                    discovered.push(seen);
                }
                Err(e) => failures.push(ReplicaFailure { replica: i as u64, error: e.to_string() }),
            }
        }
        Ok(Execution { tables: vec![t], info: json!({ "discovered": discovered }), failures, ..Default::default() })
    }

    fn derive(_: &Context, p: &RhoTraceParams, primary: &[Table]) -> Result<Derived> {
        let t = find(primary, "rho")?;
        let replica: Vec<u64> = t.column("replica")?;
        let time: Vec<f64> = t.column("time")?;
        let k = p.radii.len();
        let mut counts = std::collections::BTreeMap::<String, u64>::new();
        let mut by_radius = vec![Vec::new(); k];
        for (chunk, ids) in time.chunks(k).zip(replica.chunks(k)) {
            if ids.iter().any(|&r| r != ids[0]) || chunk.len() != k {
                return Err(HarnessError::spec("rho.replica", "rows are not grouped by replica"));
            }
            *counts.entry(p.rule().judge(chunk).to_string()).or_default() += 1;
            for (j, &x) in chunk.iter().enumerate() {
                by_radius[j].push(x);
            }
        }
        let total = time.len() / k.max(1);
        let mut means = Table::new("mean_times", &["radius", "mean", "ci_halfwidth", "finite"]);
        for (r, xs) in p.radii.iter().zip(&by_radius) {
            let finite: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
            let (m, ci) = mean_ci(&finite);
            means.push(row![r, m, ci, finite.len()]);
        }
        let fraction = |v: &str| counts.get(v).copied().unwrap_or(0) as f64 / total as f64;
        Ok(Derived {
            tables: vec![means],
            aggregates: json!({
                "replicas": total,
                "verdicts": counts,
                "plausibly_finite_fraction": fraction("plausibly-finite"),
                "plausibly_infinite_fraction": fraction("plausibly-infinite"),
            }),
        })
    }
}

params! {
    CriterionParams / CriterionArgs {
        /// Edge-time law, e.g. zhang-exp:b=1,pc=0.5.
        dist: PassageDistribution = PassageDistribution::ZhangPolynomial { a: 1.0, p_c: 0.5 },
        /// damron (spacings 2^-k) or tree (spacings exp(-lambda^k)).
        kind: String = "damron".into(),
        /// Base of the tree spacings.
        lambda: f64 = 2.0,
        /// Number of terms.
        k_max: u32 = 60,
        /// Also evaluate the tree growth profile at this n.
        rate_n: Option<u64> = None,
    }
}

pub struct CriterionOp;

impl Operation for CriterionOp {
    const NAME: &'static str = "criterion";
    const REPLICAS: Option<u64> = None;
    type Params = CriterionParams;

    fn resolve(p: &mut CriterionParams) -> Result<()> {
        if p.kind != "damron" && p.kind != "tree" {
            return Err(HarnessError::spec("params.kind", format!("{:?}; expected damron or tree", p.kind)));
        }
        Ok(())
    }

    fn execute(_: &Context, p: &CriterionParams) -> Result<Execution> {
        let c = if p.kind == "damron" {
            damron_criterion(&p.dist, p.k_max)?
        } else {
            tree_criterion(&p.dist, p.lambda, p.k_max)?
        };
        let mut t = Table::new("summands", &["k", "summand"]);
        for (k, v) in &c.summands {
            t.push(row![k, v]);
        }
        let rate = p.rate_n.map(|n| tree_rate(&p.dist, n)).transpose()?;
        if rate.is_some() {
            eprintln!("note: {TREE_RATE_NOTE}");
        }
        Ok(Execution {
            tables: vec![t],
            info: json!({ "verdict": c.verdict, "boundary_terms": c.boundary_terms, "tree_rate": rate }),
            ..Default::default()
        })
    }

    fn derive(_: &Context, _: &CriterionParams, primary: &[Table]) -> Result<Derived> {
        let v: Vec<f64> = find(primary, "summands")?.column("summand")?;
        let partial_sum: f64 = v.iter().sum();
        Ok(Derived { tables: Vec::new(), aggregates: json!({ "terms": v.len(), "partial_sum": partial_sum }) })
    }
}
