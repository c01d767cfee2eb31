use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::dist::PassageDistribution;
use crate::error::{arg, Result};
use crate::rng::WeightField;
use crate::substrate::{Graph, Step};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

const NO_PARENT: u32 = u32::MAX;

struct Node<V> {
    vertex: V,
    time: f64,
    parent: u32,
    settled: bool,
}

/// Incremental Dijkstra search from one source. Vertices come out in
/// nondecreasing passage time, ties broken by discovery order. Edges with
/// infinite passage time are never relaxed and vertices beyond the horizon
/// never entered.
pub struct Frontier<'a, G: Graph> {
    graph: &'a G,
    field: &'a WeightField,
    dist: &'a PassageDistribution,
    horizon: u64,
    index: FxHashMap<G::Vertex, u32>,
    nodes: Vec<Node<G::Vertex>>,
    heap: BinaryHeap<Reverse<(Time, u32)>>,
    steps: Vec<Step<G::Vertex>>,
}

impl<'a, G: Graph> Frontier<'a, G> {
    pub fn new(
        graph: &'a G,
        field: &'a WeightField,
        dist: &'a PassageDistribution,
        source: &G::Vertex,
        horizon: u64,
    ) -> Result<Self> {
        graph.validate(source)?;
        dist.validate()?;
        let mut f = Frontier {
            graph,
            field,
            dist,
            horizon,
            index: FxHashMap::default(),
            nodes: Vec::new(),
            heap: BinaryHeap::new(),
            steps: Vec::new(),
        };
        f.index.insert(source.clone(), 0);
        f.nodes.push(Node { vertex: source.clone(), time: 0.0, parent: NO_PARENT, settled: false });
        f.heap.push(Reverse((Time(0.0), 0)));
        Ok(f)
    }

    /// Settles the next vertex and returns its handle, or `None` once every
    /// vertex reachable in finite time within the horizon is settled.
    pub fn settle_next(&mut self) -> Result<Option<usize>> {
        while let Some(Reverse((Time(t), i))) = self.heap.pop() {
            let i = i as usize;
            if self.nodes[i].settled || t > self.nodes[i].time {
                continue;
            }
            self.nodes[i].settled = true;
            let u = self.nodes[i].vertex.clone();
            self.steps.clear();
            self.graph.neighbors_into(&u, &mut self.steps)?;
            for s in self.steps.drain(..) {
                let w = self.dist.sample(self.field.weight(s.edge));
                if w == f64::INFINITY || self.graph.norm(&s.vertex) > self.horizon {
                    continue;
                }
                let cand = t + w;
                match self.index.get(&s.vertex) {
                    Some(&j) => {
                        let node = &mut self.nodes[j as usize];
                        if !node.settled && cand < node.time {
                            node.time = cand;
                            node.parent = i as u32;
                            self.heap.push(Reverse((Time(cand), j)));
                        }
                    }
                    None => {
                        let j = self.nodes.len() as u32;
                        self.index.insert(s.vertex.clone(), j);
                        self.nodes.push(Node { vertex: s.vertex, time: cand, parent: i as u32, settled: false });
                        self.heap.push(Reverse((Time(cand), j)));
                    }
                }
            }
            return Ok(Some(i));
        }
        Ok(None)
    }

    pub fn vertex(&self, handle: usize) -> &G::Vertex {
        &self.nodes[handle].vertex
    }

    pub fn time(&self, handle: usize) -> f64 {
        self.nodes[handle].time
    }

    /// Vertices discovered so far (settled or queued).
    pub fn discovered(&self) -> usize {
        self.nodes.len()
    }

    /// The geodesic from the source to a settled vertex.
    pub fn path(&self, handle: usize) -> Vec<G::Vertex> {
        let mut out = Vec::new();
        let mut i = handle as u32;
        while i != NO_PARENT {
            out.push(self.nodes[i as usize].vertex.clone());
            i = self.nodes[i as usize].parent;
        }
        out.reverse();
        out
    }
}

/// Result of a point-to-set passage-time search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geodesic<V> {
    /// `+inf` when no target is reachable in finite time within the horizon.
    pub time: f64,
    pub target: Option<V>,
    /// Vertices from the source to the target; empty when the source itself
    /// is a target or none is reachable.
    pub path: Vec<V>,
}

impl<V> Geodesic<V> {
    pub fn is_finite(&self) -> bool {
        self.time.is_finite()
    }
}

/// First-passage time from `source` to the nearest vertex satisfying
/// `is_target`, with the realised geodesic.
pub fn passage_time<G: Graph>(
    graph: &G,
    field: &WeightField,
    dist: &PassageDistribution,
    source: &G::Vertex,
    is_target: impl Fn(&G::Vertex) -> bool,
    horizon: u64,
) -> Result<Geodesic<G::Vertex>> {
    let mut frontier = Frontier::new(graph, field, dist, source, horizon)?;
    while let Some(h) = frontier.settle_next()? {
        let v = frontier.vertex(h);
        if is_target(v) {
            let path = if h == 0 { Vec::new() } else { frontier.path(h) };
            return Ok(Geodesic { time: frontier.time(h), target: Some(v.clone()), path });
        }
    }
    Ok(Geodesic { time: f64::INFINITY, target: None, path: Vec::new() })
}

/// Sum of sampled passage times along consecutive vertices of `path`.
pub fn path_time<G: Graph>(graph: &G, field: &WeightField, dist: &PassageDistribution, path: &[G::Vertex]) -> Result<f64> {
    let mut total = 0.0;
    for w in path.windows(2) {
        let e = graph.edge_id(&w[0], &w[1])?;
        total += dist.sample(field.weight(graph.edge_key(&e)));
    }
    Ok(total)
}

/// Outcome classes of [`rho_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoVerdict {
    PlausiblyFinite,
    PlausiblyInfinite,
    Inconclusive,
}

impl std::fmt::Display for RhoVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RhoVerdict::PlausiblyFinite => "plausibly-finite",
            RhoVerdict::PlausiblyInfinite => "plausibly-infinite",
            RhoVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// Finite-radius decision rule for `rho`.
///
/// Plausibly finite: each of the last three increments is below
/// `finite_fraction` times the time at the first radius. Plausibly
/// infinite: each of them exceeds `infinite_floor`, or some radius is not
/// reachable in finite time. Otherwise inconclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoRule {
    pub finite_fraction: f64,
    pub infinite_floor: f64,
}

impl Default for RhoRule {
    fn default() -> Self {
        RhoRule { finite_fraction: 0.05, infinite_floor: 0.05 }
    }
}

impl RhoRule {
    pub fn judge(&self, times: &[f64]) -> RhoVerdict {
        if times.iter().any(|t| !t.is_finite()) {
            return RhoVerdict::PlausiblyInfinite;
        }
        if times.len() < 4 {
            return RhoVerdict::Inconclusive;
        }
        let inc: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let last = &inc[inc.len() - 3..];
        if last.iter().all(|&d| d < self.finite_fraction * times[0]) {
            RhoVerdict::PlausiblyFinite
        } else if last.iter().all(|&d| d > self.infinite_floor) {
            RhoVerdict::PlausiblyInfinite
        } else {
            RhoVerdict::Inconclusive
        }
    }
}

/// Passage times from the root to the spheres of the given radii.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoTrace<V> {
    pub radii: Vec<u64>,
    /// `T(0, dB_n)`; `+inf` once a radius is out of finite reach.
    pub times: Vec<f64>,
    /// A geodesic to a nearest vertex of each sphere.
    pub witnesses: Vec<Vec<V>>,
    pub verdict: RhoVerdict,
    pub rule: RhoRule,
    /// Vertices discovered by the search.
    pub discovered: usize,
}

/// Nested passage times to the spheres `{||x|| = n_k}` from one Dijkstra
/// frontier. On graphs where the norm changes by at most one per edge, the
/// first settled vertex with norm at least `n_k` lies on the sphere.
pub fn rho_trace<G: Graph>(
    graph: &G,
    field: &WeightField,
    dist: &PassageDistribution,
    radii: &[u64],
    horizon: u64,
    rule: RhoRule,
) -> Result<RhoTrace<G::Vertex>> {
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(arg("radii", "must be nonempty and strictly increasing"));
    }
    let last = *radii.last().unwrap();
    if horizon < last {
        return Err(arg("horizon", format!("{horizon} is smaller than the last radius {last}")));
    }
    let root = graph.root();
    let mut frontier = Frontier::new(graph, field, dist, &root, last)?;
    let mut times = Vec::with_capacity(radii.len());
    let mut witnesses = Vec::with_capacity(radii.len());
    let mut k = 0;
    while k < radii.len() {
        let Some(h) = frontier.settle_next()? else { break };
        let norm = graph.norm(frontier.vertex(h));
        while k < radii.len() && norm >= radii[k] {
            times.push(frontier.time(h));
            witnesses.push(frontier.path(h));
            k += 1;
        }
    }
    while times.len() < radii.len() {
        times.push(f64::INFINITY);
        witnesses.push(Vec::new());
    }
    let verdict = rule.judge(&times);
    Ok(RhoTrace { radii: radii.to_vec(), times, witnesses, verdict, rule, discovered: frontier.discovered() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpp::PassageDistribution::*;
    use crate::substrate::{DAryTree, Lattice, Point, Restricted, TreeVertex};

    #[test]
    fn source_is_its_own_target() {
        let g = Lattice::full(2);
        let f = WeightField::percolation(1);
        let d = UnitExponential { p_c: 0.0 };
        let o = Point::origin(2);
        let r = passage_time(&g, &f, &d, &o, |v| *v == o, 10).unwrap();
        assert_eq!(r.time, 0.0);
        assert!(r.path.is_empty());
    }

    #[test]
    fn unit_times_give_graph_distance() {
        let g = Lattice::full(2);
        let f = WeightField::percolation(1);
        let d = BernoulliOne { p_c: 0.0 };
        for target in [[3i64, -2], [0, 5], [-4, -4]] {
            let t = Point::new(&target);
            let r = passage_time(&g, &f, &d, &Point::origin(2), |v| *v == t, 100).unwrap();
            assert_eq!(r.time, t.l1() as f64);
            assert_eq!(r.path.len() as u64, t.l1() + 1);
        }
    }

    #[test]
    fn unreachable_targets_are_infinite() {
        let g = Lattice::full(2);
        let f = WeightField::percolation(1);
        let d = CouplingOZ2 { p_c: 0.0 };
        // Finite region: some edges may be infinite, but a target outside
        // the horizon is never reached.
        let r = passage_time(&g, &f, &d, &Point::origin(2), |v| v.l1() == 9, 5).unwrap();
        assert!(!r.is_finite());
        assert!(r.target.is_none());
    }

    #[test]
    fn oriented_search_moves_outward() {
        let g = Lattice::oriented(2);
        let f = WeightField::percolation(3);
        let d = UnitExponential { p_c: 0.0 };
        let r = passage_time(&g, &f, &d, &Point::origin(2), |v| v.l1() == 20, 40).unwrap();
        assert!(r.path.windows(2).all(|w| w[1].l1() == w[0].l1() + 1));
    }

    #[test]
    fn witness_paths_resum_to_reported_times() {
        let g = Lattice::full(2);
        let d = ZhangPolynomial { a: 0.5, p_c: 0.5 };
        for s in 0..5 {
            let f = WeightField::percolation(100 + s);
            let tr = rho_trace(&g, &f, &d, &[4, 8, 16, 32], 32, RhoRule::default()).unwrap();
            assert!(tr.times.windows(2).all(|w| w[0] <= w[1]));
            for (i, w) in tr.witnesses.iter().enumerate() {
                assert_eq!(g.norm(w.last().unwrap()), tr.radii[i]);
                let t = path_time(&g, &f, &d, w).unwrap();
                assert_eq!(t, tr.times[i]);
            }
        }
    }

    #[test]
    fn tree_trace_uses_depth() {
        let g = DAryTree::new(2);
        let f = WeightField::percolation(4);
        let d = UnitExponential { p_c: 0.5 };
        let tr = rho_trace(&g, &f, &d, &[1, 2, 4, 8, 16], 16, RhoRule::default()).unwrap();
        assert!(tr.times.iter().all(|t| t.is_finite()));
        let root = TreeVertex::root();
        assert_eq!(tr.witnesses[0][0], root);
    }

    #[test]
    fn rho_trace_rejects_short_horizon() {
        let g = Lattice::full(2);
        let f = WeightField::percolation(4);
        let d = UnitExponential { p_c: 0.5 };
        assert!(rho_trace(&g, &f, &d, &[4, 8], 7, RhoRule::default()).is_err());
        assert!(rho_trace(&g, &f, &d, &[8, 4], 9, RhoRule::default()).is_err());
    }

    #[test]
    fn verdict_rule() {
        let r = RhoRule::default();
        assert_eq!(r.judge(&[1.0, 1.01, 1.02, 1.03, 1.04]), RhoVerdict::PlausiblyFinite);
        assert_eq!(r.judge(&[1.0, 1.5, 2.0, 2.5, 3.0]), RhoVerdict::PlausiblyInfinite);
        assert_eq!(r.judge(&[1.0, 1.5, 1.51, 2.5, 3.0]), RhoVerdict::Inconclusive);
        assert_eq!(r.judge(&[1.0, f64::INFINITY]), RhoVerdict::PlausiblyInfinite);
    }

    #[test]
    fn dijkstra_matches_self_avoiding_path_enumeration() {
        let g = Restricted::new(Lattice::full(2), |v: &Point| v.coords().iter().all(|&c| (0..4).contains(&c)));
        let kinds = [
            ZhangPolynomial { a: 0.5, p_c: 0.5 },
            ZhangExponential { b: 2.0, p_c: 0.5 },
            CouplingZ2 { p_c: 0.5 },
            CouplingOZ2 { p_c: 0.5 },
            UnitExponential { p_c: 0.0 },
            BernoulliOne { p_c: 0.5 },
            PassageDistribution::truncated(CouplingZ2 { p_c: 0.5 }, 1.0),
        ];
        let (s, t) = (Point::new(&[0, 0]), Point::new(&[3, 3]));
        for d in &kinds {
            for seed in 0..20 {
                let f = WeightField::percolation(seed);
                let r = passage_time(&g, &f, d, &s, |v| *v == t, 10).unwrap();
                assert_eq!(r.time, super::super::oracle::self_avoiding_minimum(&g, &f, d, &s, &t), "{d} seed {seed}");
            }
        }
    }
}
