//! Replica-parallel execution with seed-ordered reduction.

use rayon::prelude::*;

/// Runs `f(0), f(1), ..., f(count - 1)` on the current rayon pool and returns
/// the results in index order, whatever the scheduling was.
pub fn run<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_independent_of_pool_size() {
        let work = |i: u64| crate::rng::mix64(i) % 1000;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| super::run(500, work));
        let b = four.install(|| super::run(500, work));
        assert_eq!(a, b);
    }
}
