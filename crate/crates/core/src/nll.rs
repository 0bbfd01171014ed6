//! Monte Carlo estimate of the Bayes-optimal negative log likelihood: the
//! expected −log p(y | x, D) when datasets are generated by the prior itself
//! and predictions use the exact posterior predictive.
//!
//! Evaluations run sequentially against a caller-supplied RNG, so results
//! are reproducible for a fixed seed independent of thread count (the
//! posterior inside each evaluation may still use the global rayon pool).

use rand::Rng;

use crate::posterior::posterior;
use crate::ppd::ppd_log_density;
use crate::prior::{FinitePrior, LatentSampler};
use crate::scalar::Scalar;
use crate::Result;

#[derive(Clone, Copy, Debug)]
pub struct NllEstimate<T> {
    /// Mean of −log p(y | x, D) over the evaluations.
    pub nll: T,
    /// Standard error of that mean.
    pub std_error: T,
    pub n_eval: usize,
}

/// Estimate the Bayes-optimal NLL of `prior` at a fixed context size.
///
/// Each evaluation draws a latent from the prior, a context set of
/// `n_context` examples from that latent, and one held-out query example
/// from the same latent, then scores the exact PPD log density at the query.
pub fn bayes_optimal_nll<T: Scalar, R: Rng + ?Sized>(
    prior: &FinitePrior<T>,
    n_context: usize,
    n_eval: usize,
    rng: &mut R,
) -> Result<NllEstimate<T>> {
    assert!(n_eval > 0, "need at least one evaluation");
    let sampler = LatentSampler::new(prior);
    let mut scores = Vec::with_capacity(n_eval);
    for _ in 0..n_eval {
        let idx = sampler.draw(rng);
        let context = prior.sample_examples_from(idx, n_context, rng);
        let query = prior.sample_examples_from(idx, 1, rng);
        let w = posterior(prior, &context)?;
        let q = query.examples()[0];
        scores.push(-ppd_log_density(prior, &w, q.x, q.y));
    }
    let n = T::cast(n_eval as f64);
    let mut mean = T::zero();
    for &s in &scores {
        mean += s;
    }
    mean = mean / n;
    let mut ss = T::zero();
    for &s in &scores {
        let d = s - mean;
        ss += d * d;
    }
    let std_error = if n_eval > 1 {
        (ss / (n - T::one())).sqrt() / n.sqrt()
    } else {
        T::zero()
    };
    Ok(NllEstimate {
        nll: mean,
        std_error,
        n_eval,
    })
}
