use critfrog_core::embedded::{sample_leaf_gw, Streams};
use critfrog_core::percolation::Caps;
use critfrog_core::stats::median;

// Explosion of the leaf tree: beyond generation 10 the minimal clock time to
// generation g barely moves per doubling of g.
#[test]
fn leaf_tree_minimal_times_converge() {
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for seed in 0..60 {
        let t = sample_leaf_gw(&Streams::new(seed), 2, 0.5, 40, Caps::size_only(100_000), 1000).unwrap();
        if t.survived() {
            early.push(t.min_time[20] - t.min_time[10]);
            late.push(t.min_time[40] - t.min_time[20]);
        }
    }
    assert!(early.len() >= 15, "{} survivors", early.len());
    assert!(median(&early) < 0.1, "{early:?}");
    assert!(median(&late) < 0.1, "{late:?}");
}
