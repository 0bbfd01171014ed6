//! Log-space numerics and deterministic parallel reduction.
//!
//! Sums over large latent sets are parallelized, but floating-point addition
//! is not associative, so a naive parallel sum would depend on the worker
//! count. [`block_reduce`] fixes the association: indices are folded
//! sequentially inside fixed-size blocks and the per-block partials are
//! combined in block order. The result is bit-identical for any number of
//! threads (including one).

use rayon::prelude::*;

use crate::scalar::Scalar;

/// Block size for deterministic reductions. Large enough to amortize
/// scheduling, small enough to load-balance a million-element scan.
pub const BLOCK: usize = 4096;

/// Deterministic fold of `f` over `0..n`.
///
/// `f` folds one index into an accumulator; `combine` merges two block
/// partials. The association is fixed by `BLOCK`, so the result does not
/// depend on how many rayon workers execute the blocks. `combine` must be
/// exact-associative *across block boundaries only* in the sense that the
/// caller accepts the block-structured association as *the* defined result.
pub fn block_reduce<A, F, G>(n: usize, init: A, f: F, combine: G) -> A
where
    A: Clone + Send + Sync,
    F: Fn(A, usize) -> A + Sync + Send,
    G: Fn(A, A) -> A,
{
    if n <= BLOCK {
        return (0..n).fold(init, f);
    }
    let blocks = n.div_ceil(BLOCK);
    let partials: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = n.min(lo + BLOCK);
            (lo..hi).fold(init.clone(), &f)
        })
        .collect();
    let mut it = partials.into_iter();
    let first = it.next().expect("n > BLOCK implies at least one block");
    it.fold(first, combine)
}

/// Deterministic sum of `f(i)` for `i` in `0..n`.
pub fn block_sum<T, F>(n: usize, f: F) -> T
where
    T: Scalar,
    F: Fn(usize) -> T + Sync + Send,
{
    block_reduce(n, T::zero(), |acc, i| acc + f(i), |a, b| a + b)
}

/// Maximum of `f(i)` for `i` in `0..n` (`-inf` when empty). Max is exactly
/// associative, so this is order-independent; NaN values are skipped.
pub fn block_max<T, F>(n: usize, f: F) -> T
where
    T: Scalar,
    F: Fn(usize) -> T + Sync + Send,
{
    block_reduce(
        n,
        T::neg_infinity(),
        |acc, i| acc.max(f(i)),
        |a, b| a.max(b),
    )
}

/// `ln Σ_i exp(f(i))`, computed with a max shift so it never overflows and
/// only underflows for terms negligibly far below the maximum.
pub fn log_sum_exp_by<T, F>(n: usize, f: F) -> T
where
    T: Scalar,
    F: Fn(usize) -> T + Sync + Send,
{
    let m = block_max(n, &f);
    if m == T::neg_infinity() || m == T::infinity() {
        // All terms are zero mass, or one is infinite; either way `m` is the
        // answer and the shifted sum would be NaN.
        return m;
    }
    let s = block_sum(n, |i| (f(i) - m).exp());
    m + s.ln()
}

/// `ln Σ_i exp(xs[i])` over a slice.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    log_sum_exp_by(xs.len(), |i| xs[i])
}

/// `ln(exp(a) + exp(b))` without materializing either exponential.
pub fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `0.5 * ln(2π)`.
pub fn half_ln_two_pi<T: Scalar>() -> T {
    T::cast(0.918_938_533_204_672_7)
}

/// Log density of N(mean, sigma²) at `x`.
pub fn normal_logpdf<T: Scalar>(x: T, mean: T, sigma: T) -> T {
    let z = (x - mean) / sigma;
    -sigma.ln() - half_ln_two_pi::<T>() - T::cast(0.5) * z * z
}

/// Standard normal CDF Φ(z), via the complementary error function.
pub fn normal_cdf<T: Scalar>(z: T) -> T {
    T::cast(0.5) * (-(z / T::SQRT_2())).erfc()
}

/// `ln C(n, k)` via log-gamma; exact enough for n up to at least 10⁹.
pub fn ln_binomial<T: Scalar>(n: u64, k: u64) -> T {
    assert!(k <= n, "ln_binomial: k={k} > n={n}");
    let lg = |m: u64| T::cast(m as f64 + 1.0).ln_gamma();
    lg(n) - lg(k) - lg(n - k)
}
