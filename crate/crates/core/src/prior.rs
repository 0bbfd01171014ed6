//! Finite priors: an enumerated latent set, log prior weights, a Gaussian
//! observation-noise scale, and an input distribution.
//!
//! Built-in families
//! -----------------
//! - `step`: `Step(threshold, base, jump)` on grids threshold ∈ [-1, 1],
//!   base ∈ [-1, 1], jump ∈ [0, 2], each 101 points (step 0.02) → 101³ =
//!   1,030,301 latents.
//! - `step_extended`: same but jump ∈ [-1, 1] (negative steps allowed).
//! - `sine`: phase offsets {0, 2π/100, …, 2π}, 101 latents. The endpoints 0
//!   and 2π are physically identical; both are kept by default to match the
//!   documented cardinality, and `dedup_sine_offsets` drops the duplicate.
//! - `line`: `Line(intercept, slope)` on intercept, slope ∈ [-1, 1] → 101² =
//!   10,201 latents.
//! - `sine_line_mixture`: sine block first, then line block; each class gets
//!   half the total mass (uniform within class). A uniform prior over the
//!   union would drown the 101 sines under 10,201 lines.
//!
//! Enumeration order is lexicographic over the parameter grids (first listed
//! parameter outermost), so latent indices are stable across runs and
//! platforms. Grids are generated index-based (`lo + (hi-lo)·i/(n-1)`), which
//! hits both endpoints exactly and avoids the drift of repeated addition.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Example};
use crate::latent::Latent;
use crate::math::{half_ln_two_pi, log_sum_exp};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Observation-noise standard deviation shared by all built-in priors.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.1;

/// Points per parameter grid in the built-in families.
pub const GRID_POINTS: usize = 101;

/// Inclusive endpoint grid with `n` points: `lo + (hi-lo)·i/(n-1)`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1, "grid needs at least one point");
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 / (n - 1) as f64))
        .collect()
}

/// Input distribution for dataset sampling. The density is constant across
/// latents, so it cancels from posteriors; see
/// [`FinitePrior::log_likelihood`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InputDist<T> {
    Uniform { lo: T, hi: T },
}

impl<T: Scalar> InputDist<T> {
    pub fn unit() -> Self {
        InputDist::Uniform {
            lo: T::zero(),
            hi: T::one(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            InputDist::Uniform { lo, hi } => lo + (hi - lo) * T::unit_uniform(rng),
        }
    }
}

/// A finite prior over latent functions with Gaussian observation noise.
#[derive(Clone, Debug)]
pub struct FinitePrior<T> {
    latents: Vec<Latent<T>>,
    log_prior: Vec<T>,
    noise_sigma: T,
    input_dist: InputDist<T>,
}

/// Inclusive-range grid description used for config overrides.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        grid(self.lo, self.hi, self.n)
    }
}

const UNIT_GRID: GridSpec = GridSpec {
    lo: -1.0,
    hi: 1.0,
    n: GRID_POINTS,
};
const JUMP_GRID: GridSpec = GridSpec {
    lo: 0.0,
    hi: 2.0,
    n: GRID_POINTS,
};

impl<T: Scalar> FinitePrior<T> {
    /// Uniform prior over the given latents. `log_prior`, if provided, is
    /// normalized (its log-sum-exp subtracted) so the prior sums to one.
    pub fn custom(
        latents: Vec<Latent<T>>,
        log_prior: Option<Vec<T>>,
        noise_sigma: T,
    ) -> Result<Self> {
        if latents.is_empty() {
            return Err(Error::EmptyPrior);
        }
        if !(noise_sigma > T::zero()) || !noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be positive and finite, got {noise_sigma}"
            )));
        }
        let log_prior = match log_prior {
            None => uniform_log_prior(latents.len()),
            Some(lp) => {
                if lp.len() != latents.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} latents but {} prior weights",
                        latents.len(),
                        lp.len()
                    )));
                }
                let norm = log_sum_exp(&lp);
                if !norm.is_finite() {
                    return Err(Error::InvalidParameter(
                        "prior weights have zero or non-finite total mass".into(),
                    ));
                }
                lp.into_iter().map(|w| w - norm).collect()
            }
        };
        Ok(Self {
            latents,
            log_prior,
            noise_sigma,
            input_dist: InputDist::unit(),
        })
    }

    /// Step prior: jumps are non-negative (jump ∈ [0, 2]).
    pub fn step() -> Self {
        Self::step_with_grids(UNIT_GRID, UNIT_GRID, JUMP_GRID)
    }

    /// Extended step prior: negative steps included (jump ∈ [-1, 1]).
    pub fn step_extended() -> Self {
        Self::step_with_grids(UNIT_GRID, UNIT_GRID, UNIT_GRID)
    }

    pub fn step_with_grids(threshold: GridSpec, base: GridSpec, jump: GridSpec) -> Self {
        let latents = enumerate_step(&threshold, &base, &jump);
        let log_prior = uniform_log_prior(latents.len());
        Self {
            latents,
            log_prior,
            noise_sigma: T::cast(DEFAULT_NOISE_SIGMA),
            input_dist: InputDist::unit(),
        }
    }

    /// Sine prior: 101 phase offsets spanning a full period.
    pub fn sine(dedup_offsets: bool) -> Self {
        Self::sine_with_count(GRID_POINTS, dedup_offsets)
    }

    pub fn sine_with_count(n_offsets: usize, dedup_offsets: bool) -> Self {
        let latents = enumerate_sine::<T>(n_offsets, dedup_offsets);
        let log_prior = uniform_log_prior(latents.len());
        Self {
            latents,
            log_prior,
            noise_sigma: T::cast(DEFAULT_NOISE_SIGMA),
            input_dist: InputDist::unit(),
        }
    }

    /// Line prior: intercept and slope each on [-1, 1].
    pub fn line() -> Self {
        Self::line_with_grids(UNIT_GRID, UNIT_GRID)
    }

    pub fn line_with_grids(intercept: GridSpec, slope: GridSpec) -> Self {
        let latents = enumerate_line(&intercept, &slope);
        let log_prior = uniform_log_prior(latents.len());
        Self {
            latents,
            log_prior,
            noise_sigma: T::cast(DEFAULT_NOISE_SIGMA),
            input_dist: InputDist::unit(),
        }
    }

    /// 50/50 sine+line mixture (sine block first, uniform within each class).
    pub fn mixture() -> Self {
        Self::mixture_with_mass(0.5)
    }

    /// Mixture with `sine_mass` total mass on the sine class.
    pub fn mixture_with_mass(sine_mass: f64) -> Self {
        assert!(
            sine_mass > 0.0 && sine_mass < 1.0,
            "sine_mass must be in (0, 1), got {sine_mass}"
        );
        let sines = enumerate_sine::<T>(GRID_POINTS, false);
        let lines = enumerate_line(&UNIT_GRID, &UNIT_GRID);
        let n_sine = sines.len();
        let n_line = lines.len();
        let mut latents = sines;
        latents.extend(lines);
        let sine_w = T::cast(sine_mass.ln() - (n_sine as f64).ln());
        let line_w = T::cast((1.0 - sine_mass).ln() - (n_line as f64).ln());
        let mut log_prior = vec![sine_w; n_sine];
        log_prior.extend(std::iter::repeat_n(line_w, n_line));
        Self {
            latents,
            log_prior,
            noise_sigma: T::cast(DEFAULT_NOISE_SIGMA),
            input_dist: InputDist::unit(),
        }
    }

    pub fn with_noise_sigma(mut self, noise_sigma: T) -> Result<Self> {
        if !(noise_sigma > T::zero()) || !noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be positive and finite, got {noise_sigma}"
            )));
        }
        self.noise_sigma = noise_sigma;
        Ok(self)
    }

    pub fn with_input_dist(mut self, input_dist: InputDist<T>) -> Self {
        self.input_dist = input_dist;
        self
    }

    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }

    pub fn latents(&self) -> &[Latent<T>] {
        &self.latents
    }

    pub fn latent(&self, index: usize) -> Option<&Latent<T>> {
        self.latents.get(index)
    }

    pub fn log_prior(&self) -> &[T] {
        &self.log_prior
    }

    pub fn noise_sigma(&self) -> T {
        self.noise_sigma
    }

    pub fn input_dist(&self) -> InputDist<T> {
        self.input_dist
    }

    /// Σ_i log N(y_i; f_l(x_i), σ²), accumulated in canonical example order
    /// so the result is identical for any permutation of `d`. The constant
    /// input density p(x) is omitted: it is shared by every latent and
    /// cancels in the posterior (and contributes exactly 0 to the evidence
    /// for the uniform-on-[0,1] default).
    ///
    /// The empty dataset yields 0 (an empty product of densities).
    pub fn log_likelihood(&self, latent_index: usize, d: &Dataset<T>) -> Result<T> {
        if latent_index >= self.latents.len() {
            return Err(Error::InvalidParameter(format!(
                "latent index {latent_index} out of range ({} latents)",
                self.latents.len()
            )));
        }
        Ok(self.log_likelihood_canonical(latent_index, &d.canonical()))
    }

    /// Likelihood kernel over a pre-canonicalized example slice; shared by
    /// the posterior engine so the sort happens once per dataset, not once
    /// per latent.
    pub(crate) fn log_likelihood_canonical(&self, latent_index: usize, sorted: &[Example<T>]) -> T {
        let latent = self.latents[latent_index];
        let sigma = self.noise_sigma;
        let n = T::cast(sorted.len() as f64);
        let constant = n * (-sigma.ln() - half_ln_two_pi::<T>());
        let half_inv_var = T::cast(0.5) / (sigma * sigma);
        let mut sum_sq = T::zero();
        for e in sorted {
            let r = e.y - latent.eval(e.x);
            sum_sq += r * r;
        }
        constant - sum_sq * half_inv_var
    }

    /// Draw a latent per the prior, then `n` examples with x ~ input_dist
    /// and y = f(x) + Normal(0, σ²) noise. When `n` is `None`, the dataset
    /// size is drawn uniformly from {1, …, 100}.
    ///
    /// RNG consumption order (latent, size, then x/ε per example) is part of
    /// the determinism contract. Builds the latent sampling table on each
    /// call; use [`LatentSampler`] with [`Self::sample_dataset_with`] when
    /// sampling many datasets from the same prior.
    pub fn sample_dataset<R: Rng + ?Sized>(
        &self,
        n: Option<usize>,
        rng: &mut R,
    ) -> (usize, Dataset<T>) {
        let sampler = LatentSampler::new(self);
        self.sample_dataset_with(&sampler, n, rng)
    }

    pub fn sample_dataset_with<R: Rng + ?Sized>(
        &self,
        sampler: &LatentSampler,
        n: Option<usize>,
        rng: &mut R,
    ) -> (usize, Dataset<T>) {
        let latent_index = sampler.draw(rng);
        let n = n.unwrap_or_else(|| rng.random_range(1..=100));
        let d = self.sample_examples_from(latent_index, n, rng);
        (latent_index, d)
    }

    /// Sample `n` examples from a fixed latent.
    pub fn sample_examples_from<R: Rng + ?Sized>(
        &self,
        latent_index: usize,
        n: usize,
        rng: &mut R,
    ) -> Dataset<T> {
        let latent = self.latents[latent_index];
        let examples = (0..n)
            .map(|_| {
                let x = self.input_dist.sample(rng);
                let eps: T = T::standard_normal(rng);
                Example {
                    x,
                    y: latent.eval(x) + self.noise_sigma * eps,
                }
            })
            .collect();
        Dataset::new(examples).expect("sampled examples are finite")
    }
}

fn uniform_log_prior<T: Scalar>(n: usize) -> Vec<T> {
    vec![T::cast(-(n as f64).ln()); n]
}

fn enumerate_step<T: Scalar>(
    threshold: &GridSpec,
    base: &GridSpec,
    jump: &GridSpec,
) -> Vec<Latent<T>> {
    let ts = threshold.points();
    let bs = base.points();
    let js = jump.points();
    let mut latents = Vec::with_capacity(ts.len() * bs.len() * js.len());
    for &t in &ts {
        for &b in &bs {
            for &j in &js {
                latents.push(Latent::Step {
                    threshold: T::cast(t),
                    base: T::cast(b),
                    jump: T::cast(j),
                });
            }
        }
    }
    latents
}

fn enumerate_sine<T: Scalar>(n_offsets: usize, dedup_offsets: bool) -> Vec<Latent<T>> {
    let mut phases = grid(0.0, 2.0 * std::f64::consts::PI, n_offsets);
    if dedup_offsets && n_offsets > 1 {
        // Offsets 0 and 2π evaluate identically; drop the trailing duplicate.
        phases.pop();
    }
    phases
        .into_iter()
        .map(|p| Latent::Sine { phase: T::cast(p) })
        .collect()
}

fn enumerate_line<T: Scalar>(intercept: &GridSpec, slope: &GridSpec) -> Vec<Latent<T>> {
    let is = intercept.points();
    let ss = slope.points();
    let mut latents = Vec::with_capacity(is.len() * ss.len());
    for &i in &is {
        for &s in &ss {
            latents.push(Latent::Line {
                intercept: T::cast(i),
                slope: T::cast(s),
            });
        }
    }
    latents
}

/// Cumulative-mass table for drawing latent indices from a prior.
#[derive(Clone, Debug)]
pub struct LatentSampler {
    cumulative: Vec<f64>,
}

impl LatentSampler {
    pub fn new<T: Scalar>(prior: &FinitePrior<T>) -> Self {
        let mut cumulative = Vec::with_capacity(prior.len());
        let mut acc = 0.0f64;
        for &lw in prior.log_prior() {
            acc += lw.as_f64().exp();
            cumulative.push(acc);
        }
        // Guard against accumulated rounding: the last entry must cover u→1.
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Self { cumulative }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Declarative prior description for config files (always in `f64`; build
/// converts to the engine scalar type).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub family: PriorFamily,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    /// Drop the duplicate 2π sine offset (sine family only).
    #[serde(default)]
    pub dedup_sine_offsets: bool,
    /// Total mass on the sine class (mixture family only; default 0.5).
    #[serde(default)]
    pub sine_class_mass: Option<f64>,
    #[serde(default)]
    pub grids: GridOverrides,
    /// Inline latent list (custom family only).
    #[serde(default)]
    pub latents: Option<Vec<LatentSpec>>,
    /// CSV file with columns family,param1,param2,param3 (custom family only).
    #[serde(default)]
    pub latents_csv: Option<std::path::PathBuf>,
}

fn default_noise_sigma() -> f64 {
    DEFAULT_NOISE_SIGMA
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PriorFamily {
    Step,
    StepExtended,
    Sine,
    Line,
    SineLineMixture,
    Custom,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub threshold: Option<GridSpec>,
    pub base: Option<GridSpec>,
    pub jump: Option<GridSpec>,
    pub intercept: Option<GridSpec>,
    pub slope: Option<GridSpec>,
    pub sine_offsets: Option<usize>,
}

/// One latent in a config file: family tag plus positional parameters in the
/// same order as [`Latent::params`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LatentSpec {
    pub family: String,
    pub params: Vec<f64>,
}

impl LatentSpec {
    pub fn to_latent<T: Scalar>(&self) -> Result<Latent<T>> {
        let p = |i: usize| -> Result<T> {
            self.params
                .get(i)
                .map(|&v| T::cast(v))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "latent family '{}' needs at least {} params, got {}",
                        self.family,
                        i + 1,
                        self.params.len()
                    ))
                })
        };
        match self.family.as_str() {
            "step" => Ok(Latent::Step {
                threshold: p(0)?,
                base: p(1)?,
                jump: p(2)?,
            }),
            "sine" => Ok(Latent::Sine { phase: p(0)? }),
            "line" => Ok(Latent::Line {
                intercept: p(0)?,
                slope: p(1)?,
            }),
            other => Err(Error::Config(format!("unknown latent family '{other}'"))),
        }
    }
}

impl PriorSpec {
    pub fn family(family: PriorFamily) -> Self {
        Self {
            family,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            dedup_sine_offsets: false,
            sine_class_mass: None,
            grids: GridOverrides::default(),
            latents: None,
            latents_csv: None,
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<FinitePrior<T>> {
        let g = &self.grids;
        let prior = match self.family {
            PriorFamily::Step => FinitePrior::step_with_grids(
                g.threshold.unwrap_or(UNIT_GRID),
                g.base.unwrap_or(UNIT_GRID),
                g.jump.unwrap_or(JUMP_GRID),
            ),
            PriorFamily::StepExtended => FinitePrior::step_with_grids(
                g.threshold.unwrap_or(UNIT_GRID),
                g.base.unwrap_or(UNIT_GRID),
                g.jump.unwrap_or(UNIT_GRID),
            ),
            PriorFamily::Sine => FinitePrior::sine_with_count(
                g.sine_offsets.unwrap_or(GRID_POINTS),
                self.dedup_sine_offsets,
            ),
            PriorFamily::Line => FinitePrior::line_with_grids(
                g.intercept.unwrap_or(UNIT_GRID),
                g.slope.unwrap_or(UNIT_GRID),
            ),
            PriorFamily::SineLineMixture => {
                FinitePrior::mixture_with_mass(self.sine_class_mass.unwrap_or(0.5))
            }
            PriorFamily::Custom => {
                let mut latents: Vec<Latent<T>> = Vec::new();
                if let Some(specs) = &self.latents {
                    for s in specs {
                        latents.push(s.to_latent()?);
                    }
                }
                if let Some(path) = &self.latents_csv {
                    latents.extend(load_latents_csv::<T>(path)?);
                }
                return FinitePrior::custom(latents, None, T::cast(self.noise_sigma));
            }
        };
        prior.with_noise_sigma(T::cast(self.noise_sigma))
    }
}

/// Load latents from a CSV with header `family,param1,param2,param3`; unused
/// parameter cells may be empty. See [`crate::export::read_latents_csv`] for
/// the format.
pub fn load_latents_csv<T: Scalar>(path: &Path) -> Result<Vec<Latent<T>>> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Config(format!("cannot open latent CSV {}: {e}", path.display()))
    })?;
    crate::export::read_latents_csv(std::io::BufReader::new(file))
}
