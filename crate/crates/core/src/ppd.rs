//! Posterior-predictive distribution: the posterior-weighted mixture of
//! per-latent Gaussian predictives, evaluated exactly.
//!
//! Moments and the latent convex hull are computed over *all* latents in a
//! single deterministic scan (queries are processed in small tiles so the
//! latent array is streamed once per tile instead of once per query).
//!
//! Densities and quantiles use a mass-truncated latent set: latents with
//! weight below `mass_cutoff / n_latents` are dropped, bounding the ignored
//! mass by `mass_cutoff` (default 1e-10). Latents sharing a bit-identical
//! mean value at a query point collapse into one mixture component, which
//! turns ~10⁶ latents into at most a few hundred distinct components for the
//! grid families. Quantiles come from bisecting the mixture CDF — grid
//! independent — to 1e-8 in y.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::math::{block_sum, log_sum_exp_by, normal_cdf, normal_logpdf};
use crate::posterior::PosteriorWeights;
use crate::prior::FinitePrior;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Queries per latent-array sweep in the moments scan.
const QUERY_TILE: usize = 8;

/// Bisection tolerance for quantiles, in y units.
const QUANTILE_TOL: f64 = 1e-8;

/// Relative mass a latent may carry and still be dropped from density and
/// quantile computations (scaled by 1/n_latents).
pub const DEFAULT_MASS_CUTOFF: f64 = 1e-10;

/// How to build the y-grid for density evaluation.
#[derive(Clone, Debug)]
pub enum DensityGrid<T> {
    /// `points` equally spaced values spanning
    /// [min mean − 4·max sd, max mean + 4·max sd] over the query points.
    Auto { points: usize },
    Explicit(Vec<T>),
}

#[derive(Clone, Debug)]
pub struct PpdOptions<T> {
    /// Quantile levels in (0, 1); empty skips quantile computation.
    pub quantile_probs: Vec<T>,
    /// Density matrix request; `None` skips it.
    pub density: Option<DensityGrid<T>>,
    /// See [`DEFAULT_MASS_CUTOFF`].
    pub mass_cutoff: f64,
}

impl<T: Scalar> Default for PpdOptions<T> {
    fn default() -> Self {
        Self {
            quantile_probs: vec![T::cast(0.05), T::cast(0.95)],
            density: None,
            mass_cutoff: DEFAULT_MASS_CUTOFF,
        }
    }
}

impl<T: Scalar> PpdOptions<T> {
    pub fn without_quantiles(mut self) -> Self {
        self.quantile_probs.clear();
        self
    }

    pub fn with_density(mut self, points: usize) -> Self {
        self.density = Some(DensityGrid::Auto { points });
        self
    }

    pub fn with_density_grid(mut self, y_grid: Vec<T>) -> Self {
        self.density = Some(DensityGrid::Explicit(y_grid));
        self
    }
}

/// Exact PPD statistics at each query point.
#[derive(Clone, Debug)]
pub struct PpdResult<T> {
    pub query_xs: Vec<T>,
    /// Posterior-mean prediction Σ_l w_l f_l(x).
    pub mean: Vec<T>,
    /// Mixture variance Σ_l w_l (f_l(x)² + σ²) − mean²; never below σ².
    pub variance: Vec<T>,
    /// Pointwise min/max of f_l(x) over latents with nonzero prior mass.
    pub hull_min: Vec<T>,
    pub hull_max: Vec<T>,
    /// Echo of the requested quantile levels.
    pub quantile_probs: Vec<T>,
    /// `quantiles[p][i]` = level-p quantile at query i.
    pub quantiles: Vec<Vec<T>>,
    pub y_grid: Option<Vec<T>>,
    /// `density[i][j]` = mixture density at (query i, y_grid j).
    pub density: Option<Vec<Vec<T>>>,
}

/// Compute the PPD for a set of query inputs. Empty `query_xs` yields an
/// empty result.
pub fn ppd<T: Scalar>(
    prior: &FinitePrior<T>,
    weights: &PosteriorWeights<T>,
    query_xs: &[T],
    options: &PpdOptions<T>,
) -> Result<PpdResult<T>> {
    if weights.len() != prior.len() {
        return Err(Error::DimensionMismatch(format!(
            "posterior has {} weights but prior has {} latents",
            weights.len(),
            prior.len()
        )));
    }
    for &p in &options.quantile_probs {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must be in (0,1), got {p}"
            )));
        }
    }

    let n_latents = prior.len();
    let linear_w: Vec<T> = weights.log_weights.iter().map(|&lw| lw.exp()).collect();
    let total_w = block_sum(n_latents, |i| linear_w[i]);

    let (mean, variance, hull_min, hull_max) =
        moments_scan(prior, &linear_w, total_w, query_xs);

    let need_components = !options.quantile_probs.is_empty() || options.density.is_some();
    let (quantiles, y_grid, density) = if need_components {
        let retained = retained_indices(weights, options.mass_cutoff);
        let y_grid = options.density.as_ref().map(|g| match g {
            DensityGrid::Explicit(ys) => ys.clone(),
            DensityGrid::Auto { points } => auto_y_grid(&mean, &variance, *points),
        });
        let sigma = prior.noise_sigma();
        let per_x: Vec<(Vec<T>, Option<Vec<T>>)> = query_xs
            .par_iter()
            .map(|&x| {
                let comps = collapsed_components(prior, &linear_w, &retained, x);
                let qs = options
                    .quantile_probs
                    .iter()
                    .map(|&p| quantile_by_bisection(&comps, sigma, p))
                    .collect::<Vec<_>>();
                let dens = y_grid.as_ref().map(|ys| {
                    ys.iter()
                        .map(|&y| density_at(&comps, sigma, y))
                        .collect::<Vec<_>>()
                });
                (qs, dens)
            })
            .collect();
        let mut quantiles = vec![Vec::with_capacity(query_xs.len()); options.quantile_probs.len()];
        let mut density_rows = Vec::with_capacity(query_xs.len());
        for (qs, dens) in per_x {
            for (p, q) in qs.into_iter().enumerate() {
                quantiles[p].push(q);
            }
            if let Some(d) = dens {
                density_rows.push(d);
            }
        }
        let density = if y_grid.is_some() { Some(density_rows) } else { None };
        (quantiles, y_grid, density)
    } else {
        (Vec::new(), None, None)
    };

    Ok(PpdResult {
        query_xs: query_xs.to_vec(),
        mean,
        variance,
        hull_min,
        hull_max,
        quantile_probs: options.quantile_probs.clone(),
        quantiles,
        y_grid,
        density,
    })
}

/// Log PPD density log p(y | x, D) as an exact log-sum-exp over *all*
/// latents — no truncation, safe for extremely unlikely y.
pub fn ppd_log_density<T: Scalar>(
    prior: &FinitePrior<T>,
    weights: &PosteriorWeights<T>,
    x: T,
    y: T,
) -> T {
    let sigma = prior.noise_sigma();
    let latents = prior.latents();
    log_sum_exp_by(prior.len(), |l| {
        weights.log_weights[l] + normal_logpdf(y, latents[l].eval(x), sigma)
    })
}

/// Top-k posterior entries by mass (ties broken by index), plus the total
/// mass of everything not listed.
pub fn top_k_weights<T: Scalar>(
    weights: &PosteriorWeights<T>,
    k: usize,
) -> (Vec<(usize, T)>, T) {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights.log_weights[b]
            .partial_cmp(&weights.log_weights[a])
            .expect("log weights are never NaN")
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let top: Vec<(usize, T)> = order
        .into_iter()
        .map(|i| (i, weights.log_weights[i].exp()))
        .collect();
    let mut covered = T::zero();
    for &(_, w) in &top {
        covered += w;
    }
    let remaining = (T::one() - covered).max(T::zero());
    (top, remaining)
}

fn moments_scan<T: Scalar>(
    prior: &FinitePrior<T>,
    linear_w: &[T],
    total_w: T,
    query_xs: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>, Vec<T>) {
    let nq = query_xs.len();
    let latents = prior.latents();
    let sigma = prior.noise_sigma();
    let noise_var = sigma * sigma;

    #[derive(Clone, Copy)]
    struct Acc<T> {
        wf: T,
        wff: T,
        lo: T,
        hi: T,
    }

    let mut mean = vec![T::zero(); nq];
    let mut variance = vec![T::zero(); nq];
    let mut hull_min = vec![T::zero(); nq];
    let mut hull_max = vec![T::zero(); nq];

    // Tiles are independent; within a tile latents are folded serially in
    // index order, so the result is the same for any worker count.
    let tiles: Vec<(usize, Vec<Acc<T>>)> = (0..nq.div_ceil(QUERY_TILE))
        .into_par_iter()
        .map(|t| {
            let lo = t * QUERY_TILE;
            let hi = nq.min(lo + QUERY_TILE);
            let xs = &query_xs[lo..hi];
            let mut acc = vec![
                Acc {
                    wf: T::zero(),
                    wff: T::zero(),
                    lo: T::infinity(),
                    hi: T::neg_infinity(),
                };
                xs.len()
            ];
            for (latent, &w) in latents.iter().zip(linear_w) {
                for (a, &x) in acc.iter_mut().zip(xs) {
                    let f = latent.eval(x);
                    a.wf += w * f;
                    a.wff += w * f * f;
                    a.lo = a.lo.min(f);
                    a.hi = a.hi.max(f);
                }
            }
            (lo, acc)
        })
        .collect();

    for (offset, accs) in tiles {
        for (k, a) in accs.into_iter().enumerate() {
            let i = offset + k;
            let m = a.wf / total_w;
            let m2 = a.wff / total_w;
            mean[i] = m;
            variance[i] = noise_var + (m2 - m * m).max(T::zero());
            hull_min[i] = a.lo;
            hull_max[i] = a.hi;
        }
    }
    (mean, variance, hull_min, hull_max)
}

fn retained_indices<T: Scalar>(weights: &PosteriorWeights<T>, mass_cutoff: f64) -> Vec<usize> {
    let threshold = T::cast(mass_cutoff.ln() - (weights.len() as f64).ln());
    (0..weights.len())
        .filter(|&l| weights.log_weights[l] >= threshold)
        .collect()
}

/// Mixture components at one query point: distinct latent mean values with
/// their summed weights, sorted by value, normalized over the retained mass.
fn collapsed_components<T: Scalar>(
    prior: &FinitePrior<T>,
    linear_w: &[T],
    retained: &[usize],
    x: T,
) -> Vec<(T, T)> {
    let latents = prior.latents();
    let mut by_value: HashMap<u64, T> = HashMap::new();
    // Iterating retained latents in index order makes each per-key sum a
    // fixed-order fold, independent of hash iteration order.
    for &l in retained {
        let f = latents[l].eval(x);
        *by_value.entry(f.as_f64().to_bits()).or_insert_with(T::zero) += linear_w[l];
    }
    let mut comps: Vec<(T, T)> = by_value
        .into_iter()
        .map(|(bits, w)| (T::cast(f64::from_bits(bits)), w))
        .collect();
    comps.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite latent values"));
    let mut total = T::zero();
    for &(_, w) in &comps {
        total += w;
    }
    for c in &mut comps {
        c.1 = c.1 / total;
    }
    comps
}

fn density_at<T: Scalar>(comps: &[(T, T)], sigma: T, y: T) -> T {
    let mut acc = T::zero();
    for &(f, w) in comps {
        acc += w * normal_logpdf(y, f, sigma).exp();
    }
    acc
}

fn mixture_cdf<T: Scalar>(comps: &[(T, T)], sigma: T, y: T) -> T {
    let mut acc = T::zero();
    for &(f, w) in comps {
        acc += w * normal_cdf((y - f) / sigma);
    }
    acc
}

fn quantile_by_bisection<T: Scalar>(comps: &[(T, T)], sigma: T, p: T) -> T {
    let ten_sigma = T::cast(10.0) * sigma;
    let mut lo = comps.first().map(|c| c.0).unwrap_or_default() - ten_sigma;
    let mut hi = comps.last().map(|c| c.0).unwrap_or_default() + ten_sigma;
    // Widen in the (rare) case a requested level lies beyond ±10σ of the
    // extreme components.
    while mixture_cdf(comps, sigma, lo) > p {
        lo = lo - ten_sigma;
    }
    while mixture_cdf(comps, sigma, hi) < p {
        hi = hi + ten_sigma;
    }
    let tol = T::cast(QUANTILE_TOL);
    while hi - lo > tol {
        let mid = T::cast(0.5) * (lo + hi);
        if mixture_cdf(comps, sigma, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    T::cast(0.5) * (lo + hi)
}

fn auto_y_grid<T: Scalar>(mean: &[T], variance: &[T], points: usize) -> Vec<T> {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    let mut sd_max = T::zero();
    for (&m, &v) in mean.iter().zip(variance) {
        lo = lo.min(m);
        hi = hi.max(m);
        sd_max = sd_max.max(v.sqrt());
    }
    if !lo.is_finite() {
        // No query points: empty grid.
        return Vec::new();
    }
    let four = T::cast(4.0);
    crate::prior::grid(
        (lo - four * sd_max).as_f64(),
        (hi + four * sd_max).as_f64(),
        points,
    )
    .into_iter()
    .map(T::cast)
    .collect()
}

/// Convenience: posterior + PPD in one call.
pub fn condition_and_predict<T: Scalar>(
    prior: &FinitePrior<T>,
    d: &Dataset<T>,
    query_xs: &[T],
    options: &PpdOptions<T>,
) -> Result<(PosteriorWeights<T>, PpdResult<T>)> {
    let w = crate::posterior::posterior(prior, d)?;
    let p = ppd(prior, &w, query_xs, options)?;
    Ok((w, p))
}
