//! The restricted three-frog process on `Z^d`.
//!
//! One frog walks from the origin until it has seen three sites; `Gamma_1`
//! is the union of their clusters. From then on only three frogs move: the
//! ones in the latest `Gamma_j` nearest to the half-space above it. Each
//! time one of them climbs above every explored height `F`, the cluster of
//! its landing site inside `{x_d > F}` is explored. That cluster is fresh;
//! if it has at least three sites it becomes `Gamma_{j+1}` and its three
//! frogs nearest to the next half-space take over.

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::Streams;
use crate::error::{arg, Result};
use crate::percolation::{check_p, explore_cluster, Caps};
use crate::substrate::{Graph, Lattice, Point, Restricted};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceCaps {
    /// Largest cluster explored before it is cut and flagged.
    pub cluster_cap: usize,
    /// Total frog jumps before the run halts.
    pub step_cap: u64,
}

impl Default for HalfspaceCaps {
    fn default() -> Self {
        HalfspaceCaps { cluster_cap: 10_000, step_cap: 1_000_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfspaceHalt {
    Completed,
    StepCap,
}

/// The `index`-th cluster of size at least 3 (`Gamma_index`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub index: u64,
    pub time: f64,
    /// Clusters explored since the previous discovery, this one included.
    pub trials: u64,
    pub size: u64,
    /// Top height `Z_index` of the cluster.
    pub height: i64,
    /// `R` right after the discovery: the top height of everything explored.
    pub r: i64,
    /// Distinct frogs that jumped since the previous discovery.
    pub movers: u32,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceChainState {
    pub d: usize,
    pub p: f64,
    /// Time the first frog needed to visit three distinct sites.
    pub initial_visit_time: f64,
    pub discoveries: Vec<Discovery>,
    /// `(time, R_t)` after every cluster exploration.
    pub trajectory: Vec<(f64, i64)>,
    /// Current positions of the tracked frogs.
    pub trio: Vec<Point>,
    pub jumps: u64,
    pub halt: HalfspaceHalt,
}

impl HalfspaceChainState {
    /// `R` at discovery `n` (1-based).
    pub fn r_at(&self, n: usize) -> Option<i64> {
        self.discoveries.get(n.checked_sub(1)?).map(|d| d.r)
    }

    /// Times between consecutive discoveries.
    pub fn advance_times(&self) -> Vec<f64> {
        self.discoveries.windows(2).map(|w| w[1].time - w[0].time).collect()
    }
}

#[derive(Debug, Clone)]
struct Frog {
    home: u64,
    pos: Point,
    step: u64,
    next: f64,
}

impl Frog {
    fn wake(streams: &Streams, home: u64, pos: Point, t: f64) -> Self {
        Frog { home, pos, step: 0, next: t + streams.clock(home, 0) }
    }
}

/// The three frogs of `candidates` nearest to `{x_d > top}`: highest first,
/// then smallest in coordinate order.
fn nearest_three(mut candidates: Vec<Frog>, d: usize) -> Vec<Frog> {
    candidates.sort_by(|a, b| b.pos.0[d - 1].cmp(&a.pos.0[d - 1]).then_with(|| a.pos.cmp(&b.pos)));
    candidates.truncate(3);
    candidates
}

/// Runs the restricted process on `Lattice(d)` at parameter `p` until
/// `discoveries` clusters of size at least 3 (counting `Gamma_1`) are found.
pub fn run_halfspace_chain(
    streams: &Streams,
    d: usize,
    p: f64,
    discoveries: u64,
    caps: HalfspaceCaps,
) -> Result<HalfspaceChainState> {
    if d < 2 {
        return Err(arg("d", "must be at least 2"));
    }
    check_p(p)?;
    if discoveries == 0 {
        return Err(arg("discoveries", "must be at least 1"));
    }
    if caps.cluster_cap < 3 {
        return Err(arg("cluster_cap", "must be at least 3"));
    }
    let lattice = Lattice::full(d);
    let h = |v: &Point| v.0[d - 1];
    let cap = Caps::size_only(caps.cluster_cap);
    let mut jumps = 0u64;
    let mut nbrs = Vec::new();
    let step = |f: &mut Frog, nbrs: &mut Vec<_>| -> Result<f64> {
        nbrs.clear();
        lattice.neighbors_into(&f.pos, nbrs)?;
        let k = streams.direction(f.home, f.step, nbrs.len());
        let t = f.next;
        f.pos = nbrs.swap_remove(k).vertex;
        f.step += 1;
        f.next = t + streams.clock(f.home, f.step);
        Ok(t)
    };

    // The first frog walks until it has visited three sites.
    let origin = lattice.origin();
    let mut walker = Frog::wake(streams, lattice.vertex_key(&origin), origin.clone(), 0.0);
    let mut visited = vec![origin.clone()];
    let mut t = 0.0;
    while visited.len() < 3 {
        t = step(&mut walker, &mut nbrs)?;
        jumps += 1;
        if !visited.contains(&walker.pos) {
            visited.push(walker.pos.clone());
        }
    }
    let initial_visit_time = t;

    let mut gamma: Vec<Point> = Vec::new();
    let mut seen = FxHashSet::default();
    let mut censored = false;
    for v in &visited {
        if seen.contains(v) {
            continue;
        }
        let c = explore_cluster(&lattice, &streams.percolation, v, p, cap)?;
        censored |= c.truncated();
        for u in c.vertices {
            if seen.insert(u.clone()) {
                gamma.push(u);
            }
        }
    }
    let mut top = gamma.iter().map(h).max().unwrap();
    let mut candidates: Vec<Frog> = gamma
        .iter()
        .filter(|v| **v != origin)
        .map(|v| Frog::wake(streams, lattice.vertex_key(v), v.clone(), t))
        .collect();
    candidates.push(walker);
    let mut trio = nearest_three(candidates, d);

    let mut st = HalfspaceChainState {
        d,
        p,
        initial_visit_time,
        discoveries: vec![Discovery {
            index: 1,
            time: t,
            trials: 1,
            size: gamma.len() as u64,
            height: top,
            r: top,
            movers: 1,
            censored,
        }],
        trajectory: vec![(t, top)],
        trio: Vec::new(),
        jumps: 0,
        halt: HalfspaceHalt::Completed,
    };
    let mut trials = 0u64;
    let mut moved = [false; 3];
    while (st.discoveries.len() as u64) < discoveries {
        if jumps >= caps.step_cap {
            st.halt = HalfspaceHalt::StepCap;
            break;
        }
        let i = (0..3).min_by(|&a, &b| trio[a].next.total_cmp(&trio[b].next)).unwrap();
        t = step(&mut trio[i], &mut nbrs)?;
        jumps += 1;
        moved[i] = true;
        if h(&trio[i].pos) <= top {
            continue;
        }
        let floor = top;
        let region = Restricted::new(lattice, move |v: &Point| v.0[d - 1] > floor);
        let c = explore_cluster(&region, &streams.percolation, &trio[i].pos, p, cap)?;
        trials += 1;
        let c_top = c.vertices.iter().map(h).max().unwrap();
        top = top.max(c_top);
        st.trajectory.push((t, top));
        if c.size() < 3 {
            continue;
        }
        st.discoveries.push(Discovery {
            index: st.discoveries.len() as u64 + 1,
            time: t,
            trials,
            size: c.size() as u64,
            height: c_top,
            r: top,
            movers: moved.iter().filter(|&&m| m).count() as u32,
            censored: c.truncated(),
        });
        trials = 0;
        moved = [false; 3];
        let fresh = c.vertices.iter().map(|v| Frog::wake(streams, lattice.vertex_key(v), v.clone(), t)).collect();
        trio = nearest_three(fresh, d);
    }
    st.trio = trio.into_iter().map(|f| f.pos).collect();
    st.jumps = jumps;
    Ok(st)
}
