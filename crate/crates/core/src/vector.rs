//! Dense real vectors used for iterates, gradients and search directions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("vector must have at least one entry")]
    Empty,
    #[error("non-finite entry {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// A finite vector in R^d with d >= 1.
///
/// Every constructor and arithmetic operation rejects NaN and infinities, so a
/// `DenseVector` in hand is always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, VectorError> {
        if entries.is_empty() {
            return Err(VectorError::Empty);
        }
        check_finite(&entries)?;
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Result<Self, VectorError> {
        Self::new(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self, VectorError> {
        Self::new(vec![value; dim])
    }

    /// The `i`-th standard basis vector.
    pub fn basis(dim: usize, i: usize) -> Result<Self, VectorError> {
        let mut v = vec![0.0; dim];
        if i >= dim {
            return Err(VectorError::DimensionMismatch { left: dim, right: i + 1 });
        }
        v[i] = 1.0;
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> Result<f64, VectorError> {
        same_dim(self, other)?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// `self * s`
    pub fn scale(&self, s: f64) -> Result<Self, VectorError> {
        Self::new(self.0.iter().map(|v| v * s).collect())
    }

    /// `a * self + other`
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, VectorError> {
        same_dim(self, other)?;
        Self::new(self.0.iter().zip(&other.0).map(|(x, y)| a * x + y).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self, VectorError> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, VectorError> {
        other.axpy(-1.0, self)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl AsRef<[f64]> for DenseVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = VectorError;

    fn try_from(entries: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Self {
        v.0
    }
}

fn same_dim(a: &DenseVector, b: &DenseVector) -> Result<(), VectorError> {
    if a.dim() != b.dim() {
        return Err(VectorError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

pub(crate) fn check_finite(entries: &[f64]) -> Result<(), VectorError> {
    match entries.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(VectorError::NonFinite { index, value: entries[index] }),
        None => Ok(()),
    }
}

// Unchecked slice kernels. Callers guarantee equal lengths.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy_in_place(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(e: &[f64]) -> DenseVector {
        DenseVector::new(e.to_vec()).unwrap()
    }

    #[test]
    fn orthogonal_basis_vectors_have_zero_dot() {
        assert_eq!(v(&[1.0, 0.0]).dot(&v(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn three_four_five() {
        assert_eq!(v(&[3.0, 4.0]).norm(), 5.0);
    }

    #[test]
    fn axpy_matches_hand_arithmetic() {
        assert_eq!(v(&[1.0, 1.0]).axpy(2.0, &v(&[0.0, 1.0])).unwrap(), v(&[2.0, 3.0]));
    }

    #[test]
    fn rejects_mismatch_empty_and_non_finite() {
        assert!(matches!(
            v(&[1.0]).dot(&v(&[1.0, 2.0])),
            Err(VectorError::DimensionMismatch { left: 1, right: 2 })
        ));
        assert_eq!(DenseVector::new(vec![]), Err(VectorError::Empty));
        assert!(matches!(
            DenseVector::new(vec![0.0, f64::NAN]),
            Err(VectorError::NonFinite { index: 1, .. })
        ));
        assert!(v(&[f64::MAX]).scale(10.0).is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok: DenseVector = serde_json::from_str("[1.0,2.5]").unwrap();
        assert_eq!(ok, v(&[1.0, 2.5]));
        assert!(serde_json::from_str::<DenseVector>("[]").is_err());
    }

    proptest! {
        #[test]
        fn norm_is_sqrt_of_self_dot(entries in prop::collection::vec(-1e3f64..1e3, 1..20)) {
            let x = DenseVector::new(entries).unwrap();
            prop_assert_eq!(x.norm(), x.dot(&x).unwrap().sqrt());
        }

        #[test]
        fn sub_then_add_round_trips(
            a in prop::collection::vec(-1e3f64..1e3, 5),
            b in prop::collection::vec(-1e3f64..1e3, 5),
        ) {
            let (a, b) = (DenseVector::new(a).unwrap(), DenseVector::new(b).unwrap());
            let back = a.sub(&b).unwrap().add(&b).unwrap();
            for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }
}
