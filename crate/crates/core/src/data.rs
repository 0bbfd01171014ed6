//! Context datasets: ordered lists of (x, y) examples.
//!
//! Datasets are semantically exchangeable — every consumer must produce the
//! same result for any permutation of the examples. To make that exact (not
//! just approximate), likelihood code iterates examples in a canonical order
//! obtained by sorting on (x, y); see [`Dataset::canonical`].

use crate::scalar::Scalar;
use crate::{Error, Result};

/// One observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Example<T> {
    pub x: T,
    pub y: T,
}

/// An ordered, possibly empty list of examples. Construction validates that
/// every coordinate is finite.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset<T> {
    examples: Vec<Example<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(examples: Vec<Example<T>>) -> Result<Self> {
        for (i, e) in examples.iter().enumerate() {
            if !e.x.is_finite() || !e.y.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "example {i} is not finite: ({}, {})",
                    e.x, e.y
                )));
            }
        }
        Ok(Self { examples })
    }

    pub fn empty() -> Self {
        Self { examples: Vec::new() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(x, y)| Example { x, y }).collect())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[Example<T>] {
        &self.examples
    }

    pub fn iter(&self) -> impl Iterator<Item = &Example<T>> {
        self.examples.iter()
    }

    /// Examples sorted by (x, y) under total ordering — the canonical
    /// iteration order for likelihood accumulation. Two permutations of the
    /// same dataset canonicalize to the same sequence, so downstream sums are
    /// bit-identical.
    pub fn canonical(&self) -> Vec<Example<T>> {
        let mut sorted = self.examples.clone();
        sorted.sort_by(|a, b| {
            a.x.partial_cmp(&b.x)
                .expect("finite by construction")
                .then(a.y.partial_cmp(&b.y).expect("finite by construction"))
        });
        sorted
    }

    /// Concatenation preserving the order of both operands.
    pub fn concat(&self, other: &Self) -> Self {
        let mut examples = self.examples.clone();
        examples.extend_from_slice(&other.examples);
        Self { examples }
    }
}

impl<T: Scalar> FromIterator<Example<T>> for Dataset<T> {
    /// Panics on non-finite coordinates; prefer [`Dataset::new`] for
    /// untrusted input.
    fn from_iter<I: IntoIterator<Item = Example<T>>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect()).expect("finite examples")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(Dataset::from_pairs([(0.0f64, f64::NAN)]).is_err());
        assert!(Dataset::from_pairs([(f64::INFINITY, 0.0f64)]).is_err());
        assert!(Dataset::from_pairs([(0.0f64, 0.0)]).is_ok());
    }

    #[test]
    fn empty_is_valid() {
        let d: Dataset<f64> = Dataset::empty();
        assert!(d.is_empty());
        assert_eq!(d.canonical().len(), 0);
    }

    #[test]
    fn canonical_order_is_permutation_invariant() {
        let a = Dataset::from_pairs([(0.3f64, 1.0), (0.1, 2.0), (0.3, -1.0)]).unwrap();
        let b = Dataset::from_pairs([(0.3f64, -1.0), (0.3, 1.0), (0.1, 2.0)]).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        let c = a.canonical();
        assert_eq!(c[0], Example { x: 0.1, y: 2.0 });
        assert_eq!(c[1], Example { x: 0.3, y: -1.0 });
        assert_eq!(c[2], Example { x: 0.3, y: 1.0 });
    }

    #[test]
    fn canonical_handles_negative_zero() {
        // -0.0 and 0.0 compare equal, so either order is canonical as long as
        // it is consistent; the sort must not panic and must keep both.
        let d = Dataset::from_pairs([(0.0f64, 1.0), (-0.0, 2.0)]).unwrap();
        assert_eq!(d.canonical().len(), 2);
    }

    #[test]
    fn concat_preserves_order() {
        let a = Dataset::from_pairs([(1.0f64, 1.0)]).unwrap();
        let b = Dataset::from_pairs([(0.0f64, 0.0)]).unwrap();
        let c = a.concat(&b);
        assert_eq!(c.examples()[0].x, 1.0);
        assert_eq!(c.examples()[1].x, 0.0);
        assert_eq!(c.len(), 2);
    }
}
