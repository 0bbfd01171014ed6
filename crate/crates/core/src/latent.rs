//! Latent mean functions: the hypotheses a finite prior enumerates.

use crate::scalar::Scalar;

/// A parametrized mean function. Evaluation is total on the reals and
/// deterministic; observation noise lives in the prior, not here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Latent<T> {
    /// Piecewise-constant: `base` for `x < threshold`, `base + jump` at and
    /// after it. The boundary point belongs to the upper branch.
    Step { threshold: T, base: T, jump: T },
    /// Fixed-amplitude, fixed-frequency sine with a phase offset:
    /// `0.2 · sin(3πx + phase)`.
    Sine { phase: T },
    /// Affine: `slope · x + intercept`.
    Line { intercept: T, slope: T },
}

/// Amplitude shared by every sine latent.
pub const SINE_AMPLITUDE: f64 = 0.2;
/// Angular frequency shared by every sine latent (3π: one and a half periods
/// per unit of x).
pub const SINE_FREQUENCY_PI: f64 = 3.0;

impl<T: Scalar> Latent<T> {
    #[inline(always)]
    pub fn eval(&self, x: T) -> T {
        match *self {
            Latent::Step {
                threshold,
                base,
                jump,
            } => {
                if x < threshold {
                    base
                } else {
                    base + jump
                }
            }
            Latent::Sine { phase } => {
                T::cast(SINE_AMPLITUDE) * (T::cast(SINE_FREQUENCY_PI) * T::PI() * x + phase).sin()
            }
            Latent::Line { intercept, slope } => slope * x + intercept,
        }
    }

    /// Family tag used in CSV exports and config files.
    pub fn family(&self) -> &'static str {
        match self {
            Latent::Step { .. } => "step",
            Latent::Sine { .. } => "sine",
            Latent::Line { .. } => "line",
        }
    }

    /// Parameters in canonical order, padded with `None` to three columns
    /// (step: threshold, base, jump; sine: phase; line: intercept, slope).
    pub fn params(&self) -> [Option<T>; 3] {
        match *self {
            Latent::Step {
                threshold,
                base,
                jump,
            } => [Some(threshold), Some(base), Some(jump)],
            Latent::Sine { phase } => [Some(phase), None, None],
            Latent::Line { intercept, slope } => [Some(intercept), Some(slope), None],
        }
    }
}
