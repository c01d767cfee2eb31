//! The operation registry: one entry per subcommand.
//!
//! An operation turns resolved parameters into primary tables (one row per
//! replica or per sample) and derives every reported aggregate from those
//! rows alone, so a stored run can be re-derived and checked on load.

use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::envelope::{Aggregates, ResultEnvelope};
use crate::error::{HarnessError, Result};
use crate::spec::{merge_params, ExperimentSpec};
use crate::table::Table;

pub mod embedded;
pub mod fpp;
pub mod frog;
pub mod percolation;

/// Declares an operation's parameter struct together with its command-line
/// twin, whose fields are all optional overrides.
macro_rules! params {
    (
        $(#[$meta:meta])*
        $params:ident / $args:ident {
            $( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr, )*
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $params {
            $( $(#[doc = $doc])* pub $field: $ty, )*
        }

        impl Default for $params {
            fn default() -> Self {
                $params { $( $field: $default, )* }
            }
        }

        #[derive(Debug, Clone, Default, clap::Args, serde::Serialize)]
        pub struct $args {
            $(
                $(#[doc = $doc])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<<$ty as $crate::spec::CliValue>::Arg>,
            )*
        }
    };
}

pub(crate) use params;

/// Seed and replica count of a run. Per-seed operations give replica `i`
/// the seed `seed + i`; survey operations derive replica `i` from one
/// field with `WeightField::replica(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    pub seed: u64,
    pub replicas: u64,
}

impl Context {
    pub fn replica_seed(&self, i: u64) -> u64 {
        self.seed.wrapping_add(i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaFailure {
    pub replica: u64,
    pub error: String,
}

/// A non-tabular output file, such as a JSONL trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub file: String,
    pub contents: String,
}

#[derive(Debug, Default)]
pub struct Execution {
    pub tables: Vec<Table>,
    /// Diagnostics that are not recomputable from the rows.
    pub info: Value,
    pub failures: Vec<ReplicaFailure>,
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Default)]
pub struct Derived {
    pub tables: Vec<Table>,
    pub aggregates: Value,
}

pub trait Operation {
    const NAME: &'static str;
    /// Replica count when the spec gives none; `None` for operations that
    /// have no replicas.
    const REPLICAS: Option<u64>;
    type Params: Serialize + DeserializeOwned + Default + Clone + Sync;

    /// Fills parameters whose defaults depend on other parameters.
    fn resolve(_params: &mut Self::Params) -> Result<()> {
        Ok(())
    }

    fn execute(ctx: &Context, params: &Self::Params) -> Result<Execution>;

    fn derive(ctx: &Context, params: &Self::Params, primary: &[Table]) -> Result<Derived>;
}

pub(crate) fn find<'a>(tables: &'a [Table], name: &str) -> Result<&'a Table> {
    tables.iter().find(|t| t.name == name).ok_or_else(|| HarnessError::spec(name, "missing table"))
}

struct Resolved<P> {
    echo: ExperimentSpec,
    ctx: Context,
    params: P,
}

fn resolve<O: Operation>(spec: &ExperimentSpec, cli: &impl Serialize) -> Result<Resolved<O::Params>> {
    if spec.operation != O::NAME {
        return Err(HarnessError::spec("operation", format!("expected {}, got {}", O::NAME, spec.operation)));
    }
    let mut params: O::Params = merge_params(&spec.params, cli)?;
    O::resolve(&mut params)?;
    let replicas = match (O::REPLICAS, spec.replicas) {
        (None, _) => None,
        (Some(default), given) => Some(given.unwrap_or(default)),
    };
    if replicas == Some(0) {
        return Err(HarnessError::spec("replicas", "must be positive"));
    }
    let mut echo = spec.echo();
    echo.replicas = replicas;
    echo.params = toml::Table::try_from(&params).map_err(|e| HarnessError::spec("params", e.to_string()))?;
    Ok(Resolved { echo, ctx: Context { seed: spec.seed, replicas: replicas.unwrap_or(1) }, params })
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(HarnessError::spec("jobs", "must be positive")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::spec("jobs", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs operation `O` on `spec` with command-line overrides `cli`.
pub fn run_operation<O: Operation>(spec: &ExperimentSpec, cli: &impl Serialize) -> Result<ResultEnvelope> {
    let start = Instant::now();
    let r = resolve::<O>(spec, cli)?;
    let (exec, derived) = in_pool(spec.jobs, || -> Result<_> {
        let exec = O::execute(&r.ctx, &r.params)?;
        let derived = O::derive(&r.ctx, &r.params, &exec.tables)?;
        Ok((exec, derived))
    })??;
    let primary = exec.tables.len();
    let mut tables = exec.tables;
    tables.extend(derived.tables);
    Ok(ResultEnvelope {
        spec: r.echo,
        tables,
        primary,
        aggregates: Aggregates { derived: derived.aggregates, info: exec.info },
        failures: exec.failures,
        attachments: exec.attachments,
        wall_clock: start.elapsed(),
    })
}

/// Re-derives the derived tables and aggregates of a stored run from its
/// echoed spec and primary tables.
fn rederive<O: Operation>(echo: &ExperimentSpec, primary: &[Table]) -> Result<Derived> {
    let r = resolve::<O>(echo, &toml::Table::new())?;
    O::derive(&r.ctx, &r.params, primary)
}

pub struct OperationEntry {
    pub name: &'static str,
    pub run: fn(&ExperimentSpec) -> Result<ResultEnvelope>,
    pub rederive: fn(&ExperimentSpec, &[Table]) -> Result<Derived>,
}

fn entry<O: Operation>() -> OperationEntry {
    OperationEntry { name: O::NAME, run: |s| run_operation::<O>(s, &toml::Table::new()), rederive: rederive::<O> }
}

pub fn registry() -> Vec<OperationEntry> {
    vec![
        entry::<percolation::ClusterTail>(),
        entry::<percolation::Crossing>(),
        entry::<percolation::CorrLength>(),
        entry::<percolation::EdgeSpeedOp>(),
        entry::<percolation::NuParallel>(),
        entry::<percolation::PcEstimate>(),
        entry::<fpp::RhoTraceOp>(),
        entry::<fpp::CriterionOp>(),
        entry::<frog::Cfm>(),
        entry::<embedded::OrientedChain>(),
        entry::<embedded::SrwHitting>(),
        entry::<embedded::HalfspaceChain>(),
        entry::<embedded::LeafGw>(),
    ]
}

pub fn lookup(name: &str) -> Result<OperationEntry> {
    let all = registry();
    let names: Vec<&str> = all.iter().map(|e| e.name).collect();
    let expected = names.join(", ");
    all.into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| HarnessError::spec("operation", format!("unknown operation {name:?}; expected one of {expected}")))
}

/// Runs the operation named in `spec` and, if the spec names an output
/// directory, writes the envelope there.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultEnvelope> {
    let env = (lookup(&spec.operation)?.run)(spec)?;
    if let Some(dir) = &spec.out {
        env.write(dir)?;
    }
    Ok(env)
}
