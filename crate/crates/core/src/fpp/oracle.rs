//! Exhaustive reference for passage times on small graphs.

use super::dist::PassageDistribution;
use crate::rng::WeightField;
use crate::substrate::Graph;

/// Minimum passage time over every self-avoiding path from `s` to `t`.
/// Exponential in the graph size; meant for boxes of a dozen or so sites.
pub fn self_avoiding_minimum<G: Graph>(
    g: &G,
    field: &WeightField,
    dist: &PassageDistribution,
    s: &G::Vertex,
    t: &G::Vertex,
) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn go<G: Graph>(
        g: &G,
        f: &WeightField,
        d: &PassageDistribution,
        u: &G::Vertex,
        t: &G::Vertex,
        acc: f64,
        on_path: &mut Vec<G::Vertex>,
        best: &mut f64,
    ) {
        if u == t {
            *best = best.min(acc);
            return;
        }
        for s in g.neighbors(u).expect("oracle graphs are valid") {
            if on_path.contains(&s.vertex) {
                continue;
            }
            let w = d.sample(f.weight(s.edge));
            if w.is_infinite() {
                continue;
            }
            on_path.push(s.vertex.clone());
            go(g, f, d, &s.vertex, t, acc + w, on_path, best);
            on_path.pop();
        }
    }
    let mut best = f64::INFINITY;
    go(g, field, dist, s, t, 0.0, &mut vec![s.clone()], &mut best);
    best
}
