//! Critical first passage percolation: passage-time distributions with an
//! atom at zero, Dijkstra passage times on lazy graphs, nested passage
//! times to spheres, and the series criteria for a finite passage time to
//! infinity.

mod criteria;
mod dist;
pub mod oracle;
mod passage;

pub use criteria::{damron_criterion, tree_criterion, tree_rate, Criterion, TreeRate, SUMMAND_FLOOR, TREE_RATE_NOTE};
pub use dist::{PassageDistribution, Spacing, Verdict, BISECTION_TOL, DIST_GRAMMAR};
pub use passage::{
    passage_time, path_time, rho_trace, Frontier, Geodesic, RhoRule, RhoTrace, RhoVerdict,
};
