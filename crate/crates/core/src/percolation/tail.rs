use serde::{Deserialize, Serialize};

use super::cluster::{check_p, explore_cluster, explore_down, Caps};
use crate::error::{arg, Error, Result};
use crate::replica;
use crate::rng::WeightField;
use crate::stats::{linear_fit, loglog_slope, survival_table, LinearFit, Observation, SurvivalRow};
use crate::substrate::{Graph, ROOT_KEY};

/// Smallest replica count accepted by [`cluster_tail_survey`].
pub const MIN_SURVEY_REPLICAS: u64 = 1000;

/// Empirical tail of the root cluster size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailSurvey {
    pub p: f64,
    pub replicas: u64,
    pub caps: Caps,
    pub rows: Vec<SurvivalRow>,
    /// Slope of `log P(size >= n)` against `log n`.
    pub loglog: Option<LinearFit>,
    /// Slope of `log P(size >= n)` against `n`.
    pub semilog: Option<LinearFit>,
    pub truncated: u64,
}

/// Root cluster sizes of `replicas` independent fields, right-censored at the
/// caps. Trees use the key-only explorer.
pub fn root_cluster_sizes<G: Graph>(
    graph: &G,
    field: &WeightField,
    p: f64,
    replicas: u64,
    caps: Caps,
) -> Result<Vec<Observation>> {
    check_p(p)?;
    if caps.size == 0 {
        return Err(arg("size_cap", "must be at least 1"));
    }
    if let Some(tree) = graph.as_tree() {
        let d = tree.arity();
        return Ok(replica::run(replicas, |i| {
            let c = explore_down(&field.replica(i), d, ROOT_KEY, 0, false, p, caps, false);
            if c.truncation == super::Truncation::None {
                Observation::exact(c.size)
            } else {
                Observation::at_least(c.size)
            }
        }));
    }
    let root = graph.root();
    let results = replica::run(replicas, |i| explore_cluster(graph, &field.replica(i), &root, p, caps));
    results
        .into_iter()
        .map(|r| {
            r.map(|c| {
                if c.truncated() {
                    Observation::at_least(c.size() as u64)
                } else {
                    Observation::exact(c.size() as u64)
                }
            })
        })
        .collect()
}

/// Survival table of the root cluster size on `grid`, with Wilson intervals
/// and log-log and semi-log fits.
pub fn cluster_tail_survey<G: Graph>(
    graph: &G,
    field: &WeightField,
    p: f64,
    grid: &[u64],
    replicas: u64,
    caps: Caps,
) -> Result<TailSurvey> {
    if replicas < MIN_SURVEY_REPLICAS {
        return Err(arg("replicas", format!("need at least {MIN_SURVEY_REPLICAS}, got {replicas}")));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(arg("n_grid", "must be nonempty and strictly increasing"));
    }
    let samples = root_cluster_sizes(graph, field, p, replicas, caps)?;
    let truncated = samples.iter().filter(|s| s.censored).count() as u64;
    if truncated == replicas {
        return Err(Error::AllTruncated { size_cap: caps.size as u64 });
    }
    let rows = survival_table(&samples, grid);
    let loglog = loglog_slope(&rows);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.survival > 0.0).map(|r| (r.n as f64, r.survival.ln())).unzip();
    let semilog = linear_fit(&xs, &ys);
    Ok(TailSurvey { p, replicas, caps, rows, loglog, semilog, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substrate::{DAryTree, Lattice};

    #[test]
    fn subcritical_square_lattice_tail_is_small() {
        let g = Lattice::full(2);
        let s = cluster_tail_survey(&g, &WeightField::percolation(4), 0.25, &[1, 8, 64], 5000, Caps::size_only(10_000))
            .unwrap();
        assert!(s.rows[2].survival < 0.01, "{:?}", s.rows);
        assert_eq!(s.rows[0].survival, 1.0);
    }

    #[test]
    fn subcritical_tree_decays_exponentially() {
        let g = DAryTree::new(2);
        let grid = [2, 4, 6, 8, 10, 12, 14, 16];
        let s = cluster_tail_survey(&g, &WeightField::percolation(5), 0.25, &grid, 200_000, Caps::size_only(100_000))
            .unwrap();
        let fit = s.semilog.unwrap();
        assert!(fit.slope < 0.0);
        // Successive log-ratios settle down instead of flattening out.
        let logs: Vec<f64> = s.rows.iter().map(|r| r.survival.ln()).collect();
        let first = logs[1] - logs[0];
        let last = logs[7] - logs[6];
        assert!(last < 0.0 && first < 0.0);
        assert!(last < 0.5 * first, "{first} {last}");
    }

    #[test]
    fn critical_binary_tree_tail_bounds() {
        let g = DAryTree::new(2);
        let s = cluster_tail_survey(
            &g,
            &WeightField::percolation(6),
            0.5,
            &[4, 16, 64, 256],
            200_000,
            Caps::size_only(100_000),
        )
        .unwrap();
        for r in &s.rows {
            let scaled = r.survival * (r.n as f64).sqrt();
            assert!((0.3..=3.0).contains(&scaled), "{r:?}");
        }
        let slope = s.loglog.unwrap().slope;
        assert!((-0.6..=-0.4).contains(&slope), "{slope}");
    }

    #[test]
    fn all_truncated_is_an_error() {
        let g = Lattice::full(2);
        let e = cluster_tail_survey(&g, &WeightField::percolation(4), 1.0, &[1], 1000, Caps::size_only(5));
        assert!(matches!(e, Err(Error::AllTruncated { .. })));
    }

    #[test]
    fn rejects_bad_grid_and_small_runs() {
        let g = Lattice::full(2);
        let f = WeightField::percolation(4);
        assert!(cluster_tail_survey(&g, &f, 0.3, &[4, 2], 1000, Caps::size_only(5)).is_err());
        assert!(cluster_tail_survey(&g, &f, 0.3, &[4], 999, Caps::size_only(5)).is_err());
    }

    #[test]
    fn tree_straddles_critical_point() {
        let field = WeightField::percolation(8);
        for d in [2usize, 3, 4] {
            let pc = 1.0 / d as f64;
            let reach = |p: f64| {
                let n = 4000u64;
                let hits = crate::replica::run(n, |i| {
                    let c = explore_down(&field.replica(i), d, ROOT_KEY, 0, false, p, Caps::new(200_000, 30), false);
                    c.truncation != super::super::Truncation::None
                });
                hits.iter().filter(|&&h| h).count() as f64 / n as f64
            };
            assert!(reach(pc - 0.1) < 0.05, "d={d}");
            assert!(reach(pc + 0.1) > 0.2, "d={d}");
        }
    }
}
