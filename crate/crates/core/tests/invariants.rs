//! Property tests of the structural invariants, through the public API.

use critfrog_core::embedded::{leaf_offspring, run_halfspace_chain, run_oriented_chain, run_srw_hitting, HalfspaceCaps, SrwOptions, Streams};
use critfrog_core::fpp::oracle::self_avoiding_minimum;
use critfrog_core::fpp::{passage_time, path_time, rho_trace, PassageDistribution, RhoRule};
use critfrog_core::frog::{run_cfm_on, FrogConfig, HaltStatus};
use critfrog_core::percolation::{explore_cluster, rightmost_point, Caps, Truncation};
use critfrog_core::substrate::Restricted;
use critfrog_core::{DAryTree, Graph, Lattice, Point, StreamTag, Topology, WeightField};
use proptest::prelude::*;

const KINDS: [&str; 7] = [
    "zhang-poly:a=0.5,pc=0.5",
    "zhang-exp:b=2,pc=0.5",
    "coupling-z2:pc=0.5",
    "coupling-oz2:pc=0.5",
    "unit-exp:pc=0.5",
    "bernoulli-one:pc=0.5",
    "truncated:m=0.5,zhang-poly:a=0.5,pc=0.5",
];

fn dist(i: usize) -> PassageDistribution {
    KINDS[i].parse().unwrap()
}

fn symmetric<G: Graph>(g: &G, v: &G::Vertex) -> Result<(), TestCaseError> {
    for s in g.neighbors(v).unwrap() {
        let back = g.neighbors(&s.vertex).unwrap();
        let rev = back.iter().find(|b| b.vertex == *v);
        prop_assert!(rev.is_some(), "{:?} missing from neighbours of {:?}", v, s.vertex);
        prop_assert_eq!(rev.unwrap().edge, s.edge);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn neighbours_are_symmetric_with_one_edge_key(x in -40i64..40, y in -40i64..40, z in -6i64..6, path in prop::collection::vec(0i64..3, 0..12)) {
        symmetric(&Lattice::full(2), &Point::new(&[x, y]))?;
        symmetric(&Lattice::full(3), &Point::new(&[x, y, z]))?;
        symmetric(&Lattice::half_space(2), &Point::new(&[x, y.abs()]))?;
        symmetric(&DAryTree::new(3), &critfrog_core::TreeVertex::from_path(3, &path).unwrap())?;
    }

    #[test]
    fn clusters_grow_with_p(seed in 0u64..10_000, p in 0.0f64..0.5, dp in 0.0f64..0.1) {
        let g = Lattice::full(2);
        let f = WeightField::percolation(seed);
        let caps = Caps::size_only(20_000);
        let small = explore_cluster(&g, &f, &Point::origin(2), p, caps).unwrap();
        let big = explore_cluster(&g, &f, &Point::origin(2), p + dp, caps).unwrap();
        prop_assume!(big.truncation == Truncation::None);
        let set: std::collections::HashSet<_> = big.vertices.iter().collect();
        prop_assert!(small.vertices.iter().all(|v| set.contains(v)));
        // Every edge is examined at most once from each end.
        prop_assert!(big.edge_checks <= 4 * big.size() as u64);
    }

    #[test]
    fn rightmost_point_grows_with_p(seed in 0u64..10_000, p in 0.55f64..0.8, dp in 0.0f64..0.1) {
        let f = WeightField::percolation(seed);
        if let Some(r) = rightmost_point(&f, p, 60, 120) {
            let r2 = rightmost_point(&f, p + dp, 60, 120);
            prop_assert!(r2.is_some_and(|r2| r2 >= r), "{r} {r2:?}");
        }
    }

    #[test]
    fn truncation_is_a_pointwise_coupling(i in 0usize..6, m in 0.0f64..3.0, u in 0.0f64..1.0) {
        let inner = dist(i);
        let t = PassageDistribution::truncated(inner.clone(), m);
        let (a, b) = (inner.sample(u), t.sample(u));
        prop_assert!(b <= a);
        if a <= m {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn dijkstra_matches_path_enumeration(i in 0usize..7, seed in 0u64..1_000_000, w in 2i64..5, h in 2i64..4) {
        let g = Restricted::new(Lattice::full(2), move |v: &Point| (0..w).contains(&v.coords()[0]) && (0..h).contains(&v.coords()[1]));
        let d = dist(i);
        let f = WeightField::percolation(seed);
        let (s, t) = (Point::new(&[0, 0]), Point::new(&[w - 1, h - 1]));
        let fast = passage_time(&g, &f, &d, &s, |v| *v == t, (w + h) as u64).unwrap();
        prop_assert_eq!(fast.time, self_avoiding_minimum(&g, &f, &d, &s, &t));
    }

    #[test]
    fn rho_trace_is_monotone_with_honest_witnesses(i in 0usize..7, seed in 0u64..1_000_000) {
        let g = Lattice::full(2);
        let d = dist(i);
        let f = WeightField::percolation(seed);
        let r = rho_trace(&g, &f, &d, &[2, 4, 8, 16], 16, RhoRule::default()).unwrap();
        prop_assert!(r.times.windows(2).all(|w| w[0] <= w[1]), "{:?}", r.times);
        for (t, path) in r.times.iter().zip(&r.witnesses) {
            if t.is_finite() {
                prop_assert_eq!(path_time(&g, &f, &d, path).unwrap(), *t);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn frog_runs_replay_and_conserve(seed in 0u64..100_000, m in 1u32..3, oriented in any::<bool>(), budget in 0.5f64..8.0) {
        let topology: Topology = if oriented { "oriented:2" } else { "lattice:2" }.parse().unwrap();
        let mut config = FrogConfig::new(topology, m, seed).with_p(0.55);
        config.horizon = 24;
        config.time_budget = budget;
        let g = Lattice::full(2);
        let g = if oriented { Lattice::oriented(2) } else { g };
        let mut jumps = Vec::new();
        let run = run_cfm_on(&g, &config, |j| jumps.push(j.clone())).unwrap();
        let again = run_cfm_on(&g, &config, |_| ()).unwrap();
        prop_assert_eq!(&run.trajectory, &again.trajectory);

        prop_assert_eq!(run.state.positions.len(), m as usize * run.state.activated.len());
        prop_assert!(run.trajectory.windows(2).all(|w| w[0].time <= w[1].time));
        prop_assert!(jumps.windows(2).all(|w| w[0].time <= w[1].time));
        for j in &jumps {
            prop_assert!(j.time >= j.born);
            if oriented {
                prop_assert!(g.norm(&j.to) > g.norm(&j.from));
            }
        }
        // The activated set is a union of whole open clusters. Runs halted
        // at the horizon leave the last clusters unexpanded past it.
        if run.state.halt == HaltStatus::TimeBudget {
            let field = WeightField::percolation(seed);
            let set: std::collections::HashSet<_> = run.state.activated.iter().collect();
            for v in run.state.activated.iter().take(50) {
                let c = explore_cluster(&g, &field, v, 0.55, Caps::size_only(1 << 16)).unwrap();
                prop_assert_eq!(c.truncation, Truncation::None);
                prop_assert!(c.vertices.iter().all(|u| set.contains(u)));
            }
        }
    }

    #[test]
    fn oriented_chain_jumps_ignore_the_clocks(seed in 0u64..100_000, other in 0u64..100_000) {
        let s = Streams::new(seed);
        let a = run_oriented_chain(&s, 0.6, 200, Caps::new(1 << 16, 64)).unwrap();
        let permuted = Streams { clocks: WeightField::new(other, StreamTag::FROG_CLOCK), ..s };
        let b = run_oriented_chain(&permuted, 0.6, 200, Caps::new(1 << 16, 64)).unwrap();
        prop_assert_eq!(&a.jumps, &b.jumps);
        prop_assert!(a.jumps.iter().all(|j| j.value >= 1));
        prop_assert!(a.x.windows(2).all(|w| w[1].l1() > w[0].l1()));
    }

    #[test]
    fn hitting_time_respects_the_walk_geometry(seed in 0u64..100_000) {
        let e = run_srw_hitting(&WeightField::percolation(seed), SrwOptions { step_cap: 100_000, ..SrwOptions::new(0.5, 1000) }).unwrap();
        for (y, s) in e.ys.iter().zip(&e.samples) {
            prop_assert!(s.value >= 1);
            prop_assert!(s.censored || *y == 0 || s.value > 2 * y);
        }
    }

    #[test]
    fn leaf_offspring_never_exceed_leaves(seed in 0u64..100_000, d in 2usize..4) {
        let o = leaf_offspring(&Streams::new(seed), d, 1.0 / d as f64, critfrog_core::substrate::ROOT_KEY, 0, Caps::size_only(1 << 14));
        prop_assert!(o.offspring.value <= o.leaves);
        prop_assert_eq!(o.children.len() as u64, o.offspring.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn halfspace_frontier_climbs(seed in 0u64..100_000) {
        let st = run_halfspace_chain(&Streams::new(seed), 2, 0.5, 40, HalfspaceCaps { cluster_cap: 2000, step_cap: 1 << 30 }).unwrap();
        prop_assert!(st.discoveries.windows(2).all(|w| w[1].height > w[0].height && w[1].r >= w[0].r));
        prop_assert!(st.discoveries.iter().skip(1).all(|d| d.movers <= 3));
    }
}
