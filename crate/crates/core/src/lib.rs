//! Exact Bayesian inference over finite sets of latent functions.
//!
//! The central object is a [`prior::Prior`]: a finite set of latent functions
//! together with a (uniform) prior weight and a Gaussian observation noise
//! model. Because the latent set is finite, the posterior over latents and the
//! posterior-predictive distribution (PPD) for new inputs are computed
//! *exactly* by enumeration — no sampling or variational approximations — with
//! all accumulation done in 64-bit log space.
//!
//! Supporting modules:
//! - [`coins`]: closed-form Bernoulli/coin-flip analogues of the same
//!   enumeration, scale-safe to millions of observations.
//! - [`gp`]: an exact Gaussian-process regression baseline.
//! - [`mlp`]: a small from-scratch MLP trainer used to study how trained
//!   networks behave away from their training data.
//!
//! Everything numerical is generic over the scalar type via [`scalar::Scalar`]
//! (`f32`/`f64`); the crate root exports [`Real`] aliases used by the
//! experiment harness.

pub mod coins;
pub mod data;
pub mod export;
pub mod gp;
pub mod latent;
pub mod math;
pub mod mlp;
pub mod nll;
pub mod posterior;
pub mod ppd;
pub mod prior;
pub mod scalar;

/// Default scalar type for the exact-enumeration engine.
pub type Real = f64;

/// Scalar type used for the MLP training sweeps, where throughput matters
/// more than the last few digits.
pub type TrainReal = f32;

/// Errors produced by the engine and its experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty latent set: a prior needs at least one latent function")]
    EmptyPrior,

    #[error("dataset and model dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("posterior mass vanished: every latent has zero likelihood for this dataset")]
    ZeroPosteriorMass,

    #[error("training diverged at step {step}: {what} became non-finite")]
    Diverged { step: usize, what: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("unknown experiment id: {0}")]
    UnknownExperiment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
