//! The `critfrog` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::acceptance::{self, Tier};
use crate::envelope::{load_envelope, ResultEnvelope};
use crate::error::{exit, HarnessError, Result};
use crate::ops::{embedded, fpp, frog, percolation, run_experiment, run_operation, Operation};
use crate::spec::ExperimentSpec;

/// Environment variable naming the parent of default output directories.
pub const OUT_ENV: &str = "CRITFROG_OUT";
const DEFAULT_OUT: &str = "critfrog-out";

#[derive(Debug, Parser)]
#[command(name = "critfrog", version, about = "Monte Carlo toolkit for the critical frog model and critical first passage percolation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replicas.
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Worker threads; the output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; defaults to $CRITFROG_OUT/<operation> or critfrog-out/<operation>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Spec file whose values the flags override.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OpCommand<A: Args> {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub args: A,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TierArg {
    Fast,
    Slow,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Survival function of root cluster sizes.
    ClusterTail(OpCommand<percolation::ClusterTailArgs>),
    /// Crossing probability of one oriented parallelogram.
    Crossing(OpCommand<percolation::CrossingArgs>),
    /// Smallest parallelogram length whose crossing probability clears the gate.
    CorrLength(OpCommand<percolation::CorrLengthArgs>),
    /// Rightmost point speed of supercritical oriented percolation.
    EdgeSpeed(OpCommand<percolation::EdgeSpeedArgs>),
    /// Parallel correlation exponent from correlation lengths above p_c.
    NuParallel(OpCommand<percolation::NuParallelArgs>),
    /// Critical value of oriented percolation on the plane.
    PcEstimate(OpCommand<percolation::PcEstimateArgs>),
    /// Passage times to growing boxes with a finite/infinite verdict.
    RhoTrace(OpCommand<fpp::RhoTraceArgs>),
    /// Summability criterion of a passage distribution.
    Criterion(OpCommand<fpp::CriterionArgs>),
    /// Critical frog model runs with growth classification.
    Cfm(OpCommand<frog::CfmArgs>),
    /// Jump chain of the oriented lattice.
    OrientedChain(OpCommand<embedded::OrientedChainArgs>),
    /// Hitting time of three walks racing to 2Y.
    SrwHitting(OpCommand<embedded::SrwHittingArgs>),
    /// Half-space cluster discovery chain.
    HalfspaceChain(OpCommand<embedded::HalfspaceChainArgs>),
    /// Galton-Watson tree of cluster leaves.
    LeafGw(OpCommand<embedded::LeafGwArgs>),
    /// Runs a spec file.
    Run {
        spec: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-derives a stored run and checks it against its files.
    Verify { dir: PathBuf },
    /// Runs the acceptance suite.
    Acceptance {
        #[arg(long, value_enum, default_value = "fast")]
        tier: TierArg,
        /// Runs only these criteria, comma separated (e.g. AC1,AC3).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

fn default_out(operation: &str) -> PathBuf {
    let base = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    base.join(operation)
}

fn base_spec<O: Operation>(common: &Common) -> Result<ExperimentSpec> {
    let mut spec = match &common.spec {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::new(O::NAME),
    };
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if common.replicas.is_some() {
        spec.replicas = common.replicas;
    }
    if common.jobs.is_some() {
        spec.jobs = common.jobs;
    }
    if common.out.is_some() {
        spec.out = common.out.clone();
    }
    if spec.out.is_none() {
        spec.out = Some(default_out(O::NAME));
    }
    Ok(spec)
}

fn run_cmd<O: Operation, A: Args + Serialize>(cmd: &OpCommand<A>) -> Result<ResultEnvelope> {
    let spec = base_spec::<O>(&cmd.common)?;
    let env = run_operation::<O>(&spec, &cmd.args)?;
    env.write(spec.out.as_deref().expect("output directory set"))?;
    report(&env, spec.out.as_deref());
    Ok(env)
}

fn report(env: &ResultEnvelope, dir: Option<&Path>) {
    let aggregates = serde_json::to_string_pretty(&env.aggregates.derived).expect("aggregates serialize");
    println!("{aggregates}");
    if let Some(dir) = dir {
        println!("wrote {} ({})", dir.display(), env.status());
    }
    for f in &env.failures {
        eprintln!("replica {} failed: {}", f.replica, f.error);
    }
    eprintln!("wall clock {:.3} s", env.wall_clock.as_secs_f64());
}

fn dispatch(command: &Command) -> Result<()> {
    use Command::*;
    let env = match command {
        ClusterTail(c) => run_cmd::<percolation::ClusterTail, _>(c)?,
        Crossing(c) => run_cmd::<percolation::Crossing, _>(c)?,
        CorrLength(c) => run_cmd::<percolation::CorrLength, _>(c)?,
        EdgeSpeed(c) => run_cmd::<percolation::EdgeSpeedOp, _>(c)?,
        NuParallel(c) => run_cmd::<percolation::NuParallel, _>(c)?,
        PcEstimate(c) => run_cmd::<percolation::PcEstimate, _>(c)?,
        RhoTrace(c) => run_cmd::<fpp::RhoTraceOp, _>(c)?,
        Criterion(c) => run_cmd::<fpp::CriterionOp, _>(c)?,
        Cfm(c) => run_cmd::<frog::Cfm, _>(c)?,
        OrientedChain(c) => run_cmd::<embedded::OrientedChain, _>(c)?,
        SrwHitting(c) => run_cmd::<embedded::SrwHitting, _>(c)?,
        HalfspaceChain(c) => run_cmd::<embedded::HalfspaceChain, _>(c)?,
        LeafGw(c) => run_cmd::<embedded::LeafGw, _>(c)?,
        Run { spec, jobs, out } => {
            let mut s = ExperimentSpec::load(spec)?;
            if jobs.is_some() {
                s.jobs = *jobs;
            }
            if out.is_some() {
                s.out = out.clone();
            }
            if s.out.is_none() {
                s.out = Some(default_out(&s.operation));
            }
            let env = run_experiment(&s)?;
            report(&env, s.out.as_deref());
            env
        }
        Verify { dir } => {
            let env = load_envelope(dir)?;
            println!("{}: {} tables and aggregates re-derive exactly", dir.display(), env.tables.len());
            return Ok(());
        }
        Acceptance { tier, only } => {
            let tier = match tier {
                TierArg::Fast => Tier::Fast,
                TierArg::Slow => Tier::Slow,
            };
            let mut suite = acceptance::Suite::new(tier);
            if !only.is_empty() {
                suite.only = Some(only.clone());
            }
            let report = suite.run(|e| println!("{e}"));
            println!("{}", report.summary_line());
            let failed = report.failed();
            return if failed.is_empty() { Ok(()) } else { Err(HarnessError::AcceptanceFailed { failed }) };
        }
    };
    match env.failure() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::VALIDATION } else { exit::SUCCESS };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
