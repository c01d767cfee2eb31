use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::config::FrogConfig;
use crate::error::Result;
use crate::rng::{StreamTag, WeightField};
use crate::substrate::{Graph, Step};

/// Why a run stopped. Every run stops on one of these; none is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltStatus {
    TimeBudget,
    Horizon,
    FrogCap,
    ClusterCap,
}

/// One activation: a frog landing on a sleeping cluster, or the initial
/// activation of the root cluster at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationEvent {
    pub time: f64,
    /// Debug rendering of the vertex the cluster was entered at.
    pub vertex: String,
    /// Vertices activated by this event.
    pub cluster_size: u64,
    /// `|xi_t|` after the event.
    pub activated: u64,
    /// `M_t` after the event.
    pub max_norm: u64,
}

/// One frog jump, reported to the observer of [`run_cfm_on`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jump<V> {
    /// Birth-order index of the frog.
    pub frog: u32,
    pub time: f64,
    pub from: V,
    pub to: V,
    /// Activation time of the frog.
    pub born: f64,
}

/// State of a run when it halted.
#[derive(Debug, Clone)]
pub struct FrogSimState<V> {
    /// `xi_t` in activation order.
    pub activated: Vec<V>,
    /// Current position of every active frog, by birth order.
    pub positions: Vec<V>,
    pub time: f64,
    pub max_norm: u64,
    pub halt: HaltStatus,
    pub jumps: u64,
}

#[derive(Debug, Clone)]
pub struct CfmRun<V> {
    pub state: FrogSimState<V>,
    pub trajectory: Vec<ActivationEvent>,
}

impl<V> CfmRun<V> {
    /// First time `M_t` reached each radius, `None` if it never did.
    pub fn times_to_radius(&self, radii: &[u64]) -> Vec<Option<f64>> {
        time_to_radius(&self.trajectory, radii)
    }
}

/// First event time at which `M_t >= r`, for each `r`.
pub fn time_to_radius(trajectory: &[ActivationEvent], radii: &[u64]) -> Vec<Option<f64>> {
    radii
        .iter()
        .map(|&r| trajectory.iter().find(|e| e.max_norm >= r).map(|e| e.time))
        .collect()
}

struct Frog<V> {
    pos: V,
    home: u64,
    index: u32,
    step: u32,
    born: f64,
}

struct Sim<'a, G: Graph> {
    graph: &'a G,
    config: &'a FrogConfig,
    p: f64,
    weights: WeightField,
    clocks: WeightField,
    directions: WeightField,
    activated: FxHashSet<G::Vertex>,
    order: Vec<G::Vertex>,
    frogs: Vec<Frog<G::Vertex>>,
    queue: BinaryHeap<Reverse<(super::Time, u32)>>,
    trajectory: Vec<ActivationEvent>,
    max_norm: u64,
    steps: Vec<Step<G::Vertex>>,
}

impl<G: Graph> Sim<'_, G> {
    /// Activates the sleeping part of the p-open cluster of `y` at time `t`:
    /// a breadth-first search over open edges that does not pass through
    /// already active vertices. On unoriented graphs that is the whole
    /// cluster; on oriented graphs the forward cluster of an active vertex is
    /// already active, so nothing is lost. Vertices beyond the horizon are
    /// activated but not expanded, and the run then halts.
    fn activate(&mut self, y: &G::Vertex, t: f64) -> Result<Option<HaltStatus>> {
        let mut fresh = vec![y.clone()];
        let mut seen: FxHashSet<G::Vertex> = FxHashSet::default();
        seen.insert(y.clone());
        let mut queue = VecDeque::from([y.clone()]);
        let mut steps = std::mem::take(&mut self.steps);
        let mut halt = None;
        let mut beyond = false;
        'bfs: while let Some(u) = queue.pop_front() {
            if self.graph.norm(&u) > self.config.horizon {
                beyond = true;
                continue;
            }
            steps.clear();
            self.graph.neighbors_into(&u, &mut steps)?;
            for s in steps.drain(..) {
                if self.weights.weight(s.edge) > self.p || self.activated.contains(&s.vertex) || seen.contains(&s.vertex) {
                    continue;
                }
                if fresh.len() >= self.config.cluster_cap {
                    halt = Some(HaltStatus::ClusterCap);
                    break 'bfs;
                }
                seen.insert(s.vertex.clone());
                fresh.push(s.vertex.clone());
                queue.push_back(s.vertex);
            }
        }
        self.steps = steps;
        if halt.is_some() {
            return Ok(halt);
        }
        let m = self.config.m as u64;
        if self.frogs.len() as u64 + m * fresh.len() as u64 > self.config.frog_cap {
            return Ok(Some(HaltStatus::FrogCap));
        }
        for v in &fresh {
            self.max_norm = self.max_norm.max(self.graph.norm(v));
            let home = self.graph.vertex_key(v);
            for j in 0..self.config.m {
                let id = self.frogs.len() as u32;
                let first = t + self.clocks.exponential(&[home, j as u64, 0]);
                self.frogs.push(Frog { pos: v.clone(), home, index: j, step: 0, born: t });
                self.queue.push(Reverse((super::Time(first), id)));
            }
            self.activated.insert(v.clone());
        }
        self.order.extend(fresh.iter().cloned());
        self.trajectory.push(ActivationEvent {
            time: t,
            vertex: format!("{y:?}"),
            cluster_size: fresh.len() as u64,
            activated: self.order.len() as u64,
            max_norm: self.max_norm,
        });
        Ok(beyond.then_some(HaltStatus::Horizon))
    }
}

/// Runs the critical frog model on `graph`, reporting every jump to
/// `on_jump`.
///
/// Frog `(v, j)` (the `j`-th frog sleeping at `v`) draws its `k`-th holding
/// time and direction from the motion streams at `(key(v), j, k)`, so runs
/// with more frogs per site contain the smaller runs' frogs unchanged.
/// Simultaneous events are ordered by birth order.
pub fn run_cfm_on<G: Graph>(
    graph: &G,
    config: &FrogConfig,
    mut on_jump: impl FnMut(&Jump<G::Vertex>),
) -> Result<CfmRun<G::Vertex>> {
    config.validate()?;
    let base = WeightField::percolation(config.seed);
    let mut sim = Sim {
        graph,
        config,
        p: config.resolved_p()?,
        clocks: base.with_stream(StreamTag::FROG_CLOCK),
        directions: base.with_stream(StreamTag::FROG_DIRECTION),
        weights: base,
        activated: FxHashSet::default(),
        order: Vec::new(),
        frogs: Vec::new(),
        queue: BinaryHeap::new(),
        trajectory: Vec::new(),
        max_norm: 0,
        steps: Vec::new(),
    };
    let root = graph.root();
    let mut time = 0.0;
    let mut jumps = 0u64;
    let mut halt = sim.activate(&root, 0.0)?;
    let mut nbrs: Vec<Step<G::Vertex>> = Vec::new();
    while halt.is_none() {
        let Some(Reverse((super::Time(t), id))) = sim.queue.pop() else { break };
        if t > config.time_budget {
            halt = Some(HaltStatus::TimeBudget);
            break;
        }
        time = t;
        let frog = &sim.frogs[id as usize];
        let words = [frog.home, frog.index as u64, frog.step as u64];
        nbrs.clear();
        graph.neighbors_into(&frog.pos, &mut nbrs)?;
        let pick = ((sim.directions.uniform(&words) * nbrs.len() as f64) as usize).min(nbrs.len() - 1);
        let to = nbrs.swap_remove(pick).vertex;
        let frog = &mut sim.frogs[id as usize];
        on_jump(&Jump { frog: id, time: t, from: frog.pos.clone(), to: to.clone(), born: frog.born });
        frog.pos = to.clone();
        frog.step += 1;
        let next = t + sim.clocks.exponential(&[frog.home, frog.index as u64, frog.step as u64]);
        sim.queue.push(Reverse((super::Time(next), id)));
        jumps += 1;
        if !sim.activated.contains(&to) {
            halt = sim.activate(&to, t)?;
        }
    }
    let halt = halt.unwrap_or(HaltStatus::TimeBudget);
    Ok(CfmRun {
        state: FrogSimState {
            positions: sim.frogs.into_iter().map(|f| f.pos).collect(),
            activated: sim.order,
            time,
            max_norm: sim.max_norm,
            halt,
            jumps,
        },
        trajectory: sim.trajectory,
    })
}
