//! Experiment harness for the critfrog toolkit: typed experiment specs,
//! result envelopes written as CSV plus a JSON summary, and the acceptance
//! suite.

pub mod acceptance;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod ops;
pub mod pc;
pub mod spec;
pub mod table;

pub use envelope::{load_envelope, ResultEnvelope};
pub use error::{HarnessError, Result};
pub use ops::{lookup, registry, run_experiment, run_operation, Operation};
pub use spec::ExperimentSpec;
pub use table::Table;
