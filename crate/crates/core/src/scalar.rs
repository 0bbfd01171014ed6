//! Scalar abstraction so the numerical code runs at `f32` or `f64`.
//!
//! `num_traits::Float` covers arithmetic and elementary functions; this trait
//! adds the special functions and RNG sampling hooks the engine needs, with
//! impls delegating to `libm` (pure-Rust, bit-reproducible across platforms)
//! and `rand_distr`.

use std::fmt::{Debug, Display};

use num_traits::float::FloatConst;
use num_traits::{Float, NumAssignOps};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub trait Scalar:
    Float
    + FloatConst
    + NumAssignOps
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` (rounds to nearest for `f32`).
    fn cast(x: f64) -> Self;

    /// Widening conversion to `f64`.
    fn as_f64(self) -> f64;

    /// Natural log of the absolute value of the gamma function.
    fn ln_gamma(self) -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from U[0, 1).
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    #[inline(always)]
    fn cast(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Scalar for f32 {
    #[inline(always)]
    fn cast(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ln_gamma_matches_factorials() {
        // ln Γ(n+1) = ln n!
        let mut ln_fact = 0.0f64;
        for n in 1..20u32 {
            ln_fact += (n as f64).ln();
            let got = <f64 as Scalar>::ln_gamma(n as f64 + 1.0);
            assert!((got - ln_fact).abs() < 1e-10 * ln_fact.max(1.0));
        }
    }

    #[test]
    fn erfc_reference_points() {
        assert_eq!(<f64 as Scalar>::erfc(0.0), 1.0);
        // erfc(1) = 0.15729920705028513...
        assert!((<f64 as Scalar>::erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
        assert!(<f64 as Scalar>::erfc(30.0) >= 0.0);
        assert!(<f64 as Scalar>::erfc(-30.0) <= 2.0);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let xa: f64 = Scalar::standard_normal(&mut a);
            let xb: f64 = Scalar::standard_normal(&mut b);
            assert_eq!(xa.to_bits(), xb.to_bits());
            let ua: f64 = Scalar::unit_uniform(&mut a);
            let ub: f64 = Scalar::unit_uniform(&mut b);
            assert_eq!(ua.to_bits(), ub.to_bits());
            assert!((0.0..1.0).contains(&ua));
        }
    }

    #[test]
    fn f32_path_agrees_with_f64_coarsely() {
        for &x in &[0.5f64, 1.0, 2.5, 7.0] {
            let wide = <f64 as Scalar>::ln_gamma(x);
            let narrow = <f32 as Scalar>::ln_gamma(x as f32) as f64;
            assert!((wide - narrow).abs() < 1e-5 * (1.0 + wide.abs()));
        }
    }
}
