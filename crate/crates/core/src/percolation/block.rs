use crate::error::{arg, Result};

/// Exponent `1 - lambda (1 + 1/a)` of the block-construction bound
/// `O(2^{[1 - lambda (1 + 1/a)] n})`.
pub fn block_bound_exponent(lambda: f64, a: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(arg("lambda", format!("{lambda} is not positive")));
    }
    if !(a > 0.0) {
        return Err(arg("a", format!("{a} is not positive")));
    }
    Ok(1.0 - lambda * (1.0 + 1.0 / a))
}

/// Whether a bound with this exponent is summable over `n`.
pub fn is_summable(exponent: f64) -> bool {
    exponent < 0.0
}

/// Strip parameters `p_n = p_c + 2^{-lambda n}` for `n` in `ns`.
pub fn strip_schedule(p_c: f64, lambda: f64, ns: impl IntoIterator<Item = u32>) -> Vec<(u32, f64)> {
    ns.into_iter().map(|n| (n, p_c + (-lambda * n as f64).exp2())).collect()
}
