//! The embedded subprocesses: oriented jump chain, three-walk hitting time,
//! half-space chain and leaf Galton-Watson tree.

use critfrog_core::embedded::{
    first_step_hit_probability, jump_tail, root_offspring, run_halfspace_chain, run_oriented_chain, sample_leaf_gw,
    offspring_tail, scaled_tail_ratio, HalfspaceCaps, LeafGwStatus, SrwHittingExperiment, SrwOptions, Streams,
    SRW_STEP_CAP,
};
use critfrog_core::percolation::Caps;
use critfrog_core::stats::{median, Observation, SurvivalRow};
use critfrog_core::{Topology, WeightField};
use serde_json::json;

use super::percolation::{observations, oriented_p, resolve_p, survival_columns};
use super::{find, params, Context, Derived, Execution, Operation, ReplicaFailure};
use crate::error::{HarnessError, Result};
use crate::row;
use crate::spec::List;
use crate::table::Table;

fn survival_table_of(name: &str, rows: &[SurvivalRow], extra: Option<(&str, Vec<f64>)>) -> Table {
    let mut cols = survival_columns().to_vec();
    if let Some((c, _)) = &extra {
        cols.push(c);
    }
    let mut t = Table::new(name, &cols);
    for (i, r) in rows.iter().enumerate() {
        let mut cells = row![r.n, r.survival, r.ci_low, r.ci_high, r.censored_fraction];
        if let Some((_, v)) = &extra {
            cells.push(crate::table::Cell::cell(&v[i]));
        }
        t.push(cells);
    }
    t
}

params! {
    OrientedChainParams / OrientedChainArgs {
        /// Percolation parameter; defaults to the stored oriented estimate.
        p: Option<f64> = None,
        /// Number of jumps.
        steps: u64 = 10_000,
        /// A cluster is cut (and its jump censored) after gaining this much height.
        horizon: u64 = 1024,
        /// A cluster is cut after this many vertices.
        size_cap: u64 = 1 << 24,
        /// Points where n^(1/5) P(J >= n) is compared with its value at the first.
        check_at: List<u64> = vec![8, 32, 128, 512].into(),
        /// Jump indices between which M_n / n is compared.
        growth_at: List<u64> = vec![100, 10_000].into(),
    }
}

pub struct OrientedChain;

impl Operation for OrientedChain {
    const NAME: &'static str = "oriented-chain";
    const REPLICAS: Option<u64> = None;
    type Params = OrientedChainParams;

    fn resolve(p: &mut OrientedChainParams) -> Result<()> {
        oriented_p(&mut p.p)
    }

    fn execute(ctx: &Context, p: &OrientedChainParams) -> Result<Execution> {
        let caps = Caps::new(p.size_cap as usize, p.horizon);
        let st = run_oriented_chain(&Streams::new(ctx.seed), p.p.unwrap(), p.steps, caps)?;
        let mut t = Table::new("jumps", &["index", "jump", "censored", "clock"]);
        for (i, (j, c)) in st.jumps.iter().zip(&st.clocks).enumerate() {
            t.push(row![i + 1, j.value, j.censored, c]);
        }
        Ok(Execution { tables: vec![t], ..Default::default() })
    }

    fn derive(_: &Context, p: &OrientedChainParams, primary: &[Table]) -> Result<Derived> {
        let t = find(primary, "jumps")?;
        let jumps = observations(t, "jump", "censored")?;
        let clocks: Vec<f64> = t.column("clock")?;
        let tail = jump_tail(&jumps);
        let rows: Vec<SurvivalRow> = tail.iter().map(|r| r.row).collect();
        let scaled: Vec<(u64, f64)> = tail.iter().map(|r| (r.row.n, r.scaled)).collect();
        let table = survival_table_of("tail", &rows, Some(("scaled", scaled.iter().map(|s| s.1).collect())));
        // M_n = |y_n| is the sum of the first n jumps.
        let displacement: Vec<u64> = jumps
            .iter()
            .scan(0u64, |m, j| {
                *m += j.value;
                Some(*m)
            })
            .collect();
        let growth = match p.growth_at.as_ref() {
            [a, b] if *b as usize <= displacement.len() && *a >= 1 => {
                let speed = |n: u64| displacement[n as usize - 1] as f64 / n as f64;
                Some(speed(*b) / speed(*a))
            }
            _ => None,
        };
        Ok(Derived {
            tables: vec![table],
            aggregates: json!({
                "steps": jumps.len(),
                "censored": jumps.iter().filter(|j| j.censored).count(),
                "mean_clock": clocks.iter().sum::<f64>() / clocks.len() as f64,
                "scaled_tail_ratio": scaled_tail_ratio(&scaled, &p.check_at),
                "displacement_growth": growth,
            }),
        })
    }
}

params! {
    SrwHittingParams / SrwHittingArgs {
        /// Success probability of Y: P(Y = k) = (1 - q)^k q.
        q: f64 = 0.5,
        /// Per-replica step cap; longer replicas are censored.
        step_cap: u64 = SRW_STEP_CAP,
        /// Fix Y instead of sampling it.
        given_y: Option<u64> = None,
    }
}

pub struct SrwHitting;

impl SrwHittingParams {
    fn options(&self, replicas: u64) -> SrwOptions {
        SrwOptions { q: self.q, replicas, step_cap: self.step_cap, given_y: self.given_y }
    }
}

impl Operation for SrwHitting {
    const NAME: &'static str = "srw-hitting";
    const REPLICAS: Option<u64> = Some(100_000);
    type Params = SrwHittingParams;

    fn execute(ctx: &Context, p: &SrwHittingParams) -> Result<Execution> {
        let e = critfrog_core::embedded::run_srw_hitting(&WeightField::percolation(ctx.seed), p.options(ctx.replicas))?;
        let mut t = Table::new("samples", &["replica", "y", "sigma", "censored"]);
        for (i, (y, s)) in e.ys.iter().zip(&e.samples).enumerate() {
            t.push(row![i, y, s.value, s.censored]);
        }
        Ok(Execution { tables: vec![t], ..Default::default() })
    }

    fn derive(ctx: &Context, p: &SrwHittingParams, primary: &[Table]) -> Result<Derived> {
        let t = find(primary, "samples")?;
        let e = SrwHittingExperiment::from_samples(p.options(ctx.replicas), t.column("y")?, observations(t, "sigma", "censored")?)?;
        Ok(Derived {
            tables: vec![survival_table_of("tail", &e.tail, None)],
            aggregates: json!({
                "mean": e.mean,
                "ci_halfwidth": e.ci_halfwidth,
                "censored": e.censored,
                "tail_fit": e.tail_fit,
                "first_half_mean": e.first_half_mean,
                "second_half_mean": e.second_half_mean,
                "half_mean_change": e.half_mean_change(),
                "p_one_step_given_zero": e.p_one_step_given_zero(),
                "enumerated_p_one_step_given_zero": first_step_hit_probability(0),
            }),
        })
    }
}

params! {
    HalfspaceChainParams / HalfspaceChainArgs {
        /// Dimension of the lattice.
        d: u64 = 2,
        /// Percolation parameter; defaults to the critical value when it is known.
        p: Option<f64> = None,
        /// Clusters of size at least 3 to discover.
        discoveries: u64 = 10_000,
        /// Clusters are cut (and flagged) at this many vertices.
        cluster_cap: u64 = 10_000,
        /// Total frog jumps before a run halts.
        step_cap: u64 = 1_000_000_000,
        /// R_n / n at the last discovery is compared with its value here.
        n_low: u64 = 100,
    }
}

pub struct HalfspaceChain;

impl Operation for HalfspaceChain {
    const NAME: &'static str = "halfspace-chain";
    const REPLICAS: Option<u64> = Some(10);
    type Params = HalfspaceChainParams;

    fn resolve(p: &mut HalfspaceChainParams) -> Result<()> {
        resolve_p(Topology::HalfSpaceLattice(p.d as usize), &mut p.p)?;
        if p.n_low == 0 || p.n_low > p.discoveries {
            return Err(HarnessError::spec("params.n_low", "must lie in 1..=discoveries"));
        }
        Ok(())
    }

    fn execute(ctx: &Context, p: &HalfspaceChainParams) -> Result<Execution> {
        let caps = HalfspaceCaps { cluster_cap: p.cluster_cap as usize, step_cap: p.step_cap };
        let runs = critfrog_core::replica::run(ctx.replicas, |i| {
            run_halfspace_chain(&Streams::new(ctx.replica_seed(i)), p.d as usize, p.p.unwrap(), p.discoveries, caps)
        });
        let mut runs_t = Table::new("runs", &["replica", "seed", "initial_visit_time", "jumps", "halt"]);
        let mut disc = Table::new(
            "discoveries",
            &["replica", "index", "time", "trials", "size", "height", "r", "movers", "censored"],
        );
        let mut failures = Vec::new();
        for (i, run) in runs.into_iter().enumerate() {
            match run {
                Ok(st) => {
                    let halt = serde_json::to_value(st.halt).unwrap();
                    runs_t.push(row![i, ctx.replica_seed(i as u64), st.initial_visit_time, st.jumps, halt.as_str().unwrap()]);
                    for d in &st.discoveries {
                        disc.push(row![i, d.index, d.time, d.trials, d.size, d.height, d.r, d.movers, d.censored]);
                    }
                }
                Err(e) => failures.push(ReplicaFailure { replica: i as u64, error: e.to_string() }),
            }
        }
        Ok(Execution { tables: vec![runs_t, disc], failures, ..Default::default() })
    }

    fn derive(_: &Context, p: &HalfspaceChainParams, primary: &[Table]) -> Result<Derived> {
        let t = find(primary, "discoveries")?;
        let replica: Vec<u64> = t.column("replica")?;
        let index: Vec<u64> = t.column("index")?;
        let r: Vec<i64> = t.column("r")?;
        let censored: Vec<bool> = t.column("censored")?;
        let ids: Vec<u64> = find(primary, "runs")?.column("replica")?;
        let mut ratios = Table::new("ratios", &["replica", "r_low", "r_high", "ratio"]);
        let mut values = Vec::new();
        for &id in &ids {
            let at = |n: u64| (0..r.len()).find(|&k| replica[k] == id && index[k] == n).map(|k| r[k]);
            let (lo, hi) = (at(p.n_low), at(p.discoveries));
            let ratio = match (lo, hi) {
                (Some(lo), Some(hi)) if lo > 0 => {
                    Some((hi as f64 / p.discoveries as f64) / (lo as f64 / p.n_low as f64))
                }
                _ => None,
            };
            ratios.push(row![id, lo, hi, ratio]);
            values.extend(ratio);
        }
        let n = ids.len().max(1) as f64;
        let share = |f: f64| values.iter().filter(|&&v| v >= f).count() as f64 / n;
        Ok(Derived {
            tables: vec![ratios],
            aggregates: json!({
                "replicas": ids.len(),
                "completed": values.len(),
                "censored_fraction": censored.iter().filter(|&&c| c).count() as f64 / censored.len().max(1) as f64,
                "median_ratio": (!values.is_empty()).then(|| median(&values)),
                "fraction_ratio_at_least_1_5": share(1.5),
                "fraction_ratio_at_least_2": share(2.0),
            }),
        })
    }
}

params! {
    LeafGwParams / LeafGwArgs {
        /// Arity of the tree.
        d: u64 = 2,
        /// Percolation parameter; defaults to 1/d.
        p: Option<f64> = None,
        /// Generations to grow; 0 samples root offspring only.
        generations: u64 = 40,
        /// Clusters are cut (and their offspring censored) at this many vertices.
        size_cap: u64 = 100_000,
        /// Nodes kept per generation, those with the smallest cumulative times.
        width: u64 = 1000,
        /// Generations whose minimal times are compared (each a doubling of the previous).
        checkpoints: List<u64> = vec![10, 20, 40].into(),
        /// n at which n P(Z >= n^2) is tabulated.
        tail_ns: List<u64> = vec![2, 4, 8, 16].into(),
    }
}

pub struct LeafGw;

impl Operation for LeafGw {
    const NAME: &'static str = "leaf-gw";
    const REPLICAS: Option<u64> = Some(60);
    type Params = LeafGwParams;

    fn resolve(p: &mut LeafGwParams) -> Result<()> {
        resolve_p(Topology::DAryTree(p.d as usize), &mut p.p)?;
        if p.generations > 0 && p.checkpoints.iter().any(|&g| g > p.generations) {
            return Err(HarnessError::spec("params.checkpoints", "must not exceed generations"));
        }
        Ok(())
    }

    fn execute(ctx: &Context, p: &LeafGwParams) -> Result<Execution> {
        let caps = Caps::size_only(p.size_cap as usize);
        let (d, prob) = (p.d as usize, p.p.unwrap());
        if p.generations == 0 {
            let s = root_offspring(&Streams::new(ctx.seed), d, prob, ctx.replicas, caps);
            let mut t = Table::new("offspring", &["replica", "leaves", "offspring", "censored"]);
            for (i, o) in s.iter().enumerate() {
                t.push(row![i, o.leaves, o.offspring.value, o.offspring.censored]);
            }
            return Ok(Execution { tables: vec![t], ..Default::default() });
        }
        let trees = critfrog_core::replica::run(ctx.replicas, |i| {
            sample_leaf_gw(&Streams::new(ctx.replica_seed(i)), d, prob, p.generations as u32, caps, p.width as usize)
        });
        let mut runs = Table::new("runs", &["replica", "seed", "survived", "extinct_generation", "pruned"]);
        let mut gens = Table::new("generations", &["replica", "generation", "size", "min_time"]);
        let mut failures = Vec::new();
        for (i, tree) in trees.into_iter().enumerate() {
            match tree {
                Ok(t) => {
                    let extinct = match t.status {
                        LeafGwStatus::Extinct { generation } => Some(generation),
                        LeafGwStatus::Survived => None,
                    };
                    runs.push(row![i, ctx.replica_seed(i as u64), t.survived(), extinct, t.pruned]);
                    for (g, (size, time)) in t.generation_sizes.iter().zip(&t.min_time).enumerate() {
                        gens.push(row![i, g, size, time]);
                    }
                }
                Err(e) => failures.push(ReplicaFailure { replica: i as u64, error: e.to_string() }),
            }
        }
        Ok(Execution { tables: vec![runs, gens], failures, ..Default::default() })
    }

    fn derive(_: &Context, p: &LeafGwParams, primary: &[Table]) -> Result<Derived> {
        if p.generations == 0 {
            let t = find(primary, "offspring")?;
            let z: Vec<Observation> = observations(t, "offspring", "censored")?;
            let leaves: Vec<u64> = t.column("leaves")?;
            let tail = offspring_tail(&z, &p.tail_ns);
            let rows: Vec<SurvivalRow> = tail.iter().map(|x| x.0).collect();
            let scaled: Vec<(u64, f64)> = p.tail_ns.iter().zip(&tail).map(|(&n, x)| (n, x.1)).collect();
            let table = survival_table_of("tail", &rows, Some(("n_times_survival", scaled.iter().map(|s| s.1).collect())));
            return Ok(Derived {
                tables: vec![table],
                aggregates: json!({
                    "samples": z.len(),
                    "censored": z.iter().filter(|o| o.censored).count(),
                    "zero_leaves_fraction": leaves.iter().filter(|&&l| l == 0).count() as f64 / leaves.len().max(1) as f64,
                    "scaled_tail_ratio": scaled_tail_ratio(&scaled, &p.tail_ns),
                }),
            });
        }
        let runs = find(primary, "runs")?;
        let survived: Vec<bool> = runs.column("survived")?;
        let ids: Vec<u64> = runs.column("replica")?;
        let gens = find(primary, "generations")?;
        let (rep, gen, time): (Vec<u64>, Vec<u64>, Vec<f64>) =
            (gens.column("replica")?, gens.column("generation")?, gens.column("min_time")?);
        let time_at = |id: u64, g: u64| (0..rep.len()).find(|&k| rep[k] == id && gen[k] == g).map(|k| time[k]);
        let mut inc = Table::new("increments", &["from", "to", "median_increment", "survivors"]);
        let mut medians = Vec::new();
        for w in p.checkpoints.windows(2) {
            let v: Vec<f64> = ids
                .iter()
                .zip(&survived)
                .filter(|(_, &s)| s)
                .filter_map(|(&id, _)| Some(time_at(id, w[1])? - time_at(id, w[0])?))
                .collect();
            let m = (!v.is_empty()).then(|| median(&v));
            inc.push(row![w[0], w[1], m, v.len()]);
            medians.push(m);
        }
        Ok(Derived {
            tables: vec![inc],
            aggregates: json!({
                "replicas": ids.len(),
                "survivors": survived.iter().filter(|&&s| s).count(),
                "median_increments": medians,
            }),
        })
    }
}
