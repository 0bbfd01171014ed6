//! Gaussian-process regression baseline with an RBF kernel: the
//! continuous-prior counterpart to the finite-latent engine, used to show
//! how a smooth prior grows over-confident on a step function as context
//! accumulates.
//!
//! The solver is a plain symmetric-positive-definite Cholesky factorization
//! of K + σ²I with escalating diagonal jitter added only if factorization
//! fails; the jitter actually used is recorded on the posterior.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::latent::Latent;
use crate::prior::grid;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Jitter levels tried after a failed factorization, in order.
const JITTER_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

/// z-score bounding the central 95% of a Gaussian.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig<T> {
    pub lengthscale: T,
    pub outputscale: T,
    pub noise_sigma: T,
    pub constant_mean: T,
}

impl<T: Scalar> Default for GpConfig<T> {
    fn default() -> Self {
        Self {
            lengthscale: T::cast(0.4),
            outputscale: T::one(),
            noise_sigma: T::cast(0.1),
            constant_mean: T::cast(0.5),
        }
    }
}

impl<T: Scalar> GpConfig<T> {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lengthscale", self.lengthscale),
            ("outputscale", self.outputscale),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    fn kernel(&self, a: T, b: T) -> T {
        let d = a - b;
        let two = T::cast(2.0);
        self.outputscale * (-(d * d) / (two * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Fitted GP with a cached Cholesky factor of K + (σ² + jitter)·I.
#[derive(Clone, Debug)]
pub struct GpPosterior<T> {
    config: GpConfig<T>,
    train_xs: Vec<T>,
    /// Row-major lower-triangular factor L with K + σ²I = LLᵀ.
    chol: Vec<T>,
    /// (K + σ²I)⁻¹(y − m).
    alpha: Vec<T>,
    /// Diagonal jitter that was required; zero in the usual case.
    jitter: T,
}

/// Exact GP regression on a dataset.
pub fn gp_fit<T: Scalar>(config: &GpConfig<T>, d: &Dataset<T>) -> Result<GpPosterior<T>> {
    config.validate()?;
    if d.is_empty() {
        return Err(Error::InvalidParameter(
            "GP fit needs at least one context point".into(),
        ));
    }
    let n = d.len();
    let xs: Vec<T> = d.examples().iter().map(|e| e.x).collect();
    let noise_var = config.noise_sigma * config.noise_sigma;

    let mut base = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = config.kernel(xs[i], xs[j]);
            base[i * n + j] = k;
            base[j * n + i] = k;
        }
        base[i * n + i] += noise_var;
    }

    let mut attempted = Vec::new();
    for &jit in std::iter::once(&0.0).chain(JITTER_LADDER.iter()) {
        let jitter = T::cast(jit);
        let mut m = base.clone();
        for i in 0..n {
            m[i * n + i] += jitter;
        }
        if cholesky_in_place(&mut m, n) {
            let mut alpha: Vec<T> = d
                .examples()
                .iter()
                .map(|e| e.y - config.constant_mean)
                .collect();
            forward_solve(&m, n, &mut alpha);
            backward_solve(&m, n, &mut alpha);
            return Ok(GpPosterior {
                config: *config,
                train_xs: xs,
                chol: m,
                alpha,
                jitter,
            });
        }
        attempted.push(jit);
    }
    Err(Error::LinearAlgebra(format!(
        "Cholesky factorization failed at jitter levels {attempted:?}"
    )))
}

impl<T: Scalar> GpPosterior<T> {
    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn n_context(&self) -> usize {
        self.train_xs.len()
    }

    /// Predictive mean and variance (including observation noise) at one x.
    pub fn predict_one(&self, x: T) -> (T, T) {
        let n = self.train_xs.len();
        let mut k_star: Vec<T> = self
            .train_xs
            .iter()
            .map(|&xi| self.config.kernel(x, xi))
            .collect();
        let mut mean = self.config.constant_mean;
        for i in 0..n {
            mean += k_star[i] * self.alpha[i];
        }
        forward_solve(&self.chol, n, &mut k_star);
        let mut vv = T::zero();
        for &v in &k_star {
            vv += v * v;
        }
        let var = self.config.outputscale + self.config.noise_sigma * self.config.noise_sigma - vv;
        (mean, var)
    }

    /// Vectorized [`Self::predict_one`]; queries are independent so the
    /// result is identical for any worker count.
    pub fn predict(&self, query_xs: &[T]) -> (Vec<T>, Vec<T>) {
        let pairs: Vec<(T, T)> = query_xs.par_iter().map(|&x| self.predict_one(x)).collect();
        pairs.into_iter().unzip()
    }
}

/// One row of the step-coverage sweep, with the dense predictions kept for
/// plotting.
///
/// `variance` here is the *latent-function* variance (observation noise
/// removed, floored at zero): the quantity GP plotting conventions shade as
/// the confidence band. Coverage counts evaluation points where the truth
/// lies inside mean ± 1.96·√(latent variance). With the noise-inclusive
/// predictive variance the band never collapses below the assumed σ, the
/// over-confidence effect disappears, and coverage would mildly *rise* with
/// more context instead of falling.
#[derive(Clone, Debug)]
pub struct GpCoverageRow<T> {
    pub n_context: usize,
    /// Fraction of evaluation points where the true function lies inside
    /// the 95% latent-function band.
    pub coverage_95: T,
    pub mean_abs_error: T,
    pub jitter: T,
    pub eval_xs: Vec<T>,
    pub mean: Vec<T>,
    pub variance: Vec<T>,
}

/// Fit a GP to noiseless, linearly spaced samples of `target` for each
/// context size and measure 95%-band coverage of the truth on a dense
/// 1001-point grid over [0, 1].
pub fn gp_step_experiment<T: Scalar>(
    config: &GpConfig<T>,
    n_context_values: &[usize],
    target: &Latent<T>,
) -> Result<Vec<GpCoverageRow<T>>> {
    let eval_xs: Vec<T> = grid(0.0, 1.0, 1001).into_iter().map(T::cast).collect();
    let noise_var = config.noise_sigma * config.noise_sigma;
    n_context_values
        .iter()
        .map(|&n| {
            let d = Dataset::from_pairs(grid(0.0, 1.0, n).into_iter().map(|x| {
                let x = T::cast(x);
                (x, target.eval(x))
            }))?;
            let fit = gp_fit(config, &d)?;
            let (mean, predictive_var) = fit.predict(&eval_xs);
            let variance: Vec<T> = predictive_var
                .into_iter()
                .map(|v| (v - noise_var).max(T::zero()))
                .collect();
            let z = T::cast(Z_95);
            let mut inside = 0usize;
            let mut abs_err = T::zero();
            for ((&x, &m), &v) in eval_xs.iter().zip(&mean).zip(&variance) {
                let truth = target.eval(x);
                let err = (truth - m).abs();
                abs_err += err;
                if err <= z * v.sqrt() {
                    inside += 1;
                }
            }
            Ok(GpCoverageRow {
                n_context: n,
                coverage_95: T::cast(inside as f64 / eval_xs.len() as f64),
                mean_abs_error: abs_err / T::cast(eval_xs.len() as f64),
                jitter: fit.jitter,
                eval_xs: eval_xs.clone(),
                mean,
                variance,
            })
        })
        .collect()
}

/// In-place lower Cholesky of a row-major symmetric matrix; returns false if
/// the matrix is not numerically positive definite.
fn cholesky_in_place<T: Scalar>(a: &mut [T], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            let l = a[j * n + k];
            d -= l * l;
        }
        if !(d > T::zero()) || !d.is_finite() {
            return false;
        }
        let root = d.sqrt();
        a[j * n + j] = root;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / root;
        }
    }
    // Zero the strictly upper triangle so the factor is self-describing.
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = T::zero();
        }
    }
    true
}

/// Solve L·x = b in place.
fn forward_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve Lᵀ·x = b in place.
fn backward_solve<T: Scalar>(l: &[T], n: usize, b: &mut [T]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}
