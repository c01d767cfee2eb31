//! The critical frog model.

use critfrog_core::frog::{classify_times, doubling_checkpoints, run_cfm, FrogConfig, GrowthRule};
use critfrog_core::stats::median;
use critfrog_core::Topology;
use serde_json::json;

use super::percolation::resolve_p;
use super::{find, params, Attachment, Context, Derived, Execution, Operation, ReplicaFailure};
use crate::envelope::{streams_json, VERSION};
use crate::error::{HarnessError, Result};
use crate::row;
use crate::spec::List;
use crate::table::Table;

params! {
    CfmParams / CfmArgs {
        /// Graph: lattice:<d>, oriented:<d>, tree:<d> or halfspace:<d>.
        topology: Topology = Topology::Lattice(2),
        /// Sleeping frogs per site.
        m: u32 = 1,
        /// Percolation parameter; defaults to the critical value (stored estimate on oriented graphs).
        p: Option<f64> = None,
        /// Halt once an activated vertex lies beyond this norm.
        horizon: u64 = 256,
        /// Halt at the first event after this time.
        time_budget: f64 = 1e4,
        /// Halt when the number of active frogs would exceed this.
        frog_cap: u64 = 1_000_000,
        /// Halt when one activation would add more vertices than this.
        cluster_cap: u64 = 1_000_000,
        /// Radii whose first hitting times are recorded; doubling from 16 up to the horizon by default.
        checkpoints: Option<List<u64>> = None,
        /// Shrink factor of the last time increment that signals explosion.
        explosive_factor: f64 = 2.0,
        /// Growth factor of r/t(r) that signals superlinear spread.
        superlinear_factor: f64 = 2.0,
        /// r/t(r) staying within 1 + linear_band of its first value is linear or slower.
        linear_band: f64 = 0.25,
        /// Checkpoints a run must reach to be classified.
        min_checkpoints: u64 = 4,
        /// Write every activation event to trajectory.jsonl.
        trajectory: bool = true,
    }
}

impl CfmParams {
    pub fn rule(&self) -> GrowthRule {
        GrowthRule {
            explosive_factor: self.explosive_factor,
            superlinear_factor: self.superlinear_factor,
            linear_band: self.linear_band,
            min_checkpoints: self.min_checkpoints as usize,
        }
    }

    pub fn config(&self, seed: u64) -> FrogConfig {
        FrogConfig {
            horizon: self.horizon,
            time_budget: self.time_budget,
            frog_cap: self.frog_cap,
            cluster_cap: self.cluster_cap as usize,
            ..FrogConfig::new(self.topology, self.m, seed)
        }
        .with_p(self.p.expect("resolved"))
    }
}

pub struct Cfm;

fn checkpoint_column(r: u64) -> String {
    format!("t_{r}")
}

impl Operation for Cfm {
    const NAME: &'static str = "cfm";
    const REPLICAS: Option<u64> = Some(20);
    type Params = CfmParams;

    fn resolve(p: &mut CfmParams) -> Result<()> {
        resolve_p(p.topology, &mut p.p)?;
        if p.checkpoints.is_none() {
            p.checkpoints = Some(doubling_checkpoints(16, p.horizon).into());
        }
        p.config(0).validate()?;
        Ok(())
    }

    fn execute(ctx: &Context, p: &CfmParams) -> Result<Execution> {
        let checkpoints = p.checkpoints.as_deref().unwrap();
        let runs = critfrog_core::replica::run(ctx.replicas, |i| run_cfm(&p.config(ctx.replica_seed(i)), checkpoints, p.rule()));
        let mut columns = vec!["replica", "seed", "halt", "time", "activated", "max_norm", "jumps", "classification"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        columns.extend(checkpoints.iter().map(|&r| checkpoint_column(r)));
        let mut t = Table { name: "runs".into(), columns, rows: Vec::new() };
        let mut failures = Vec::new();
        let mut jsonl = String::new();
        if p.trajectory {
            let meta = json!({ "meta": {
                "tool": "critfrog", "version": VERSION, "operation": Self::NAME,
                "seed": ctx.seed, "replicas": ctx.replicas, "streams": streams_json(),
            }});
            jsonl.push_str(&meta.to_string());
            jsonl.push('\n');
        }
        for (i, run) in runs.into_iter().enumerate() {
            let seed = ctx.replica_seed(i as u64);
            match run {
                Ok(o) => {
                    let mut r = row![
                        i,
                        seed,
                        serde_json::to_value(o.halt).unwrap().as_str().unwrap(),
                        o.time,
                        o.activated,
                        o.max_norm,
                        o.jumps,
                        o.signature.classification.to_string()
                    ];
                    r.extend(o.signature.times.iter().map(crate::table::Cell::cell));
                    t.push(r);
                    if p.trajectory {
                        for e in &o.trajectory {
                            let line = json!({
                                "replica": i, "time": e.time, "vertex": e.vertex, "cluster_size": e.cluster_size,
                                "activated": e.activated, "max_norm": e.max_norm,
                            });
                            jsonl.push_str(&line.to_string());
                            jsonl.push('\n');
                        }
                    }
                }
                Err(e) => failures.push(ReplicaFailure { replica: i as u64, error: e.to_string() }),
            }
        }
        let attachments =
            if p.trajectory { vec![Attachment { file: "trajectory.jsonl".into(), contents: jsonl }] } else { Vec::new() };
        Ok(Execution {
            tables: vec![t],
            info: json!({ "rule": p.rule().describe() }),
            failures,
            attachments,
        })
    }

    fn derive(_: &Context, p: &CfmParams, primary: &[Table]) -> Result<Derived> {
        let t = find(primary, "runs")?;
        let checkpoints = p.checkpoints.as_deref().unwrap();
        let columns: Vec<Vec<Option<f64>>> =
            checkpoints.iter().map(|&r| t.optional(&checkpoint_column(r))).collect::<Result<_>>()?;
        let stored: Vec<String> = t.column("classification")?;
        let mut counts = std::collections::BTreeMap::<String, u64>::new();
        for (i, class) in stored.iter().enumerate() {
            let times: Vec<Option<f64>> = columns.iter().map(|c| c[i]).collect();
            let fresh = classify_times(checkpoints, &times, p.rule()).classification.to_string();
            if fresh != *class {
                return Err(HarnessError::spec("runs.classification", format!("row {i}: stored {class}, rows give {fresh}")));
            }
            *counts.entry(fresh).or_default() += 1;
        }
        let mut med = Table::new("checkpoints", &["radius", "reached", "median_time"]);
        for (r, c) in checkpoints.iter().zip(&columns) {
            let reached: Vec<f64> = c.iter().flatten().copied().collect();
            med.push(row![r, reached.len(), (!reached.is_empty()).then(|| median(&reached))]);
        }
        let n = stored.len().max(1) as f64;
        let fraction = |k: &str| counts.get(k).copied().unwrap_or(0) as f64 / n;
        Ok(Derived {
            tables: vec![med],
            aggregates: json!({
                "replicas": stored.len(),
                "classifications": counts,
                "explosive_fraction": fraction("explosive-signature"),
                "superlinear_fraction": fraction("superlinear-signature"),
            }),
        })
    }
}
