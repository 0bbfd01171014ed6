//! Exact posterior weights over a finite latent set.
//!
//! `log_weights[l] = log_prior[l] + log_likelihood(l, D) − log Z`, with
//! `log Z` a max-shifted log-sum-exp over every latent. Likelihood terms are
//! computed per latent independently (embarrassingly parallel) and the
//! normalizer uses the deterministic block reduction from [`crate::math`],
//! so results are bit-identical for any worker count.

use rayon::prelude::*;

use crate::data::{Dataset, Example};
use crate::math::{log_sum_exp_by, BLOCK};
use crate::prior::FinitePrior;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Normalized posterior over the latents of one prior.
#[derive(Clone, Debug)]
pub struct PosteriorWeights<T> {
    /// Log posterior mass per latent, aligned to the prior's enumeration.
    pub log_weights: Vec<T>,
    /// Log marginal likelihood of the conditioning data, log p(D). Includes
    /// the input-density term, which is exactly 0 for the uniform-on-[0,1]
    /// input distribution; a custom input distribution would add its own
    /// constant here.
    pub evidence: T,
}

impl<T: Scalar> PosteriorWeights<T> {
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// Index of the latent with maximum posterior mass (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.log_weights.iter().enumerate() {
            if w > self.log_weights[best] {
                best = i;
            }
        }
        best
    }

    /// Total posterior mass of a contiguous index range, in linear space.
    pub fn mass_of_range(&self, range: std::ops::Range<usize>) -> T {
        let slice = &self.log_weights[range];
        crate::math::log_sum_exp(slice).exp()
    }
}

/// Exact posterior given a context dataset. Empty data returns the prior.
pub fn posterior<T: Scalar>(
    prior: &FinitePrior<T>,
    d: &Dataset<T>,
) -> Result<PosteriorWeights<T>> {
    let sorted = d.canonical();
    let unnormalized = unnormalized_log_weights(prior, prior.log_prior(), &sorted);
    normalize(unnormalized, T::zero())
}

/// Fold additional examples into an existing posterior. Equivalent to the
/// batch posterior on the concatenated dataset (within floating-point
/// tolerance: the canonical accumulation order of the union differs).
pub fn posterior_update<T: Scalar>(
    prior: &FinitePrior<T>,
    weights: &PosteriorWeights<T>,
    new_examples: &Dataset<T>,
) -> Result<PosteriorWeights<T>> {
    if weights.len() != prior.len() {
        return Err(Error::DimensionMismatch(format!(
            "posterior has {} weights but prior has {} latents",
            weights.len(),
            prior.len()
        )));
    }
    let sorted = new_examples.canonical();
    let unnormalized = unnormalized_log_weights(prior, &weights.log_weights, &sorted);
    normalize(unnormalized, weights.evidence)
}

/// Log marginal likelihood log p(D) under the prior.
pub fn marginal_evidence<T: Scalar>(prior: &FinitePrior<T>, d: &Dataset<T>) -> Result<T> {
    Ok(posterior(prior, d)?.evidence)
}

fn unnormalized_log_weights<T: Scalar>(
    prior: &FinitePrior<T>,
    base: &[T],
    sorted: &[Example<T>],
) -> Vec<T> {
    let n = prior.len();
    let mut out = vec![T::zero(); n];
    // Each entry depends only on its own latent; chunked so rayon tasks
    // amortize scheduling over the likelihood inner loop.
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(c, chunk)| {
        let offset = c * BLOCK;
        for (k, slot) in chunk.iter_mut().enumerate() {
            let l = offset + k;
            *slot = base[l] + prior.log_likelihood_canonical(l, sorted);
        }
    });
    out
}

fn normalize<T: Scalar>(
    mut log_weights: Vec<T>,
    prior_evidence: T,
) -> Result<PosteriorWeights<T>> {
    let log_z = log_sum_exp_by(log_weights.len(), |i| log_weights[i]);
    if !log_z.is_finite() {
        return Err(Error::ZeroPosteriorMass);
    }
    log_weights.par_chunks_mut(BLOCK).for_each(|chunk| {
        for w in chunk {
            *w -= log_z;
        }
    });
    Ok(PosteriorWeights {
        log_weights,
        evidence: prior_evidence + log_z,
    })
}
