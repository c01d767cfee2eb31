//! Bond percolation: cluster exploration on every topology, cluster-size
//! tails, and the parallelogram crossing machinery of oriented percolation.

mod block;
mod cluster;
mod oriented;
mod tail;

pub use block::{block_bound_exponent, is_summable, strip_schedule};
pub(crate) use cluster::check_p;
pub(crate) use oriented::advance;
pub use cluster::{explore_cluster, explore_down, Caps, Cluster, DownCluster, Truncation};
pub use oriented::{
    centered_crossing, crossing_path, estimate_correlation_length, estimate_edge_speed, estimate_nu_parallel,
    estimate_oriented_pc, fit_nu, geometric_schedule, rightmost_point, run_crossing_experiment, survival_height,
    Corner, CorrelationGate, CorrelationLengthRecord, CriticalEstimate, CriticalSearch, CrossingExperiment, EdgeSpeed,
    NuEstimate, Parallelogram, Ratio, SearchStatus, TraceEntry, Window,
};
pub use tail::{cluster_tail_survey, root_cluster_sizes, TailSurvey, MIN_SURVEY_REPLICAS};
