//! Symmetric linear operators accessed only through matrix-vector products,
//! plus dense helpers used for diagnostics.

use std::cell::Cell;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::vector;

/// `v -> H v` for a symmetric `H` of size `dim x dim`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// Writes `H v` into `out`. Both slices have length `dim()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);

    fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply(v, &mut out);
        out
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply(v, out)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply(v, out)
    }
}

/// Explicit dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    matrix: DMatrix<f64>,
}

impl DenseSymmetric {
    /// Symmetrizes the input as `(A + A^T) / 2`.
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square(), "operator matrix must be square");
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Self { matrix }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self { matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum();
        }
    }
}

/// `base + coef * (u u^T - w w^T)`.
pub struct RankTwoPerturbed<O> {
    base: O,
    coef: f64,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl<O: SymmetricOperator> RankTwoPerturbed<O> {
    pub fn new(base: O, coef: f64, u: Vec<f64>, w: Vec<f64>) -> Self {
        assert_eq!(u.len(), base.dim());
        assert_eq!(w.len(), base.dim());
        Self { base, coef, u, w }
    }
}

impl<O: SymmetricOperator> SymmetricOperator for RankTwoPerturbed<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.base.apply(v, out);
        let uv = vector::dot(&self.u, v);
        let wv = vector::dot(&self.w, v);
        vector::axpy_in_place(self.coef * uv, &self.u, out);
        vector::axpy_in_place(-self.coef * wv, &self.w, out);
    }
}

/// Counts `apply` calls on the wrapped operator.
pub struct CountingOperator<O> {
    inner: O,
    calls: Cell<u64>,
}

impl<O: SymmetricOperator> CountingOperator<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, calls: Cell::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }
}

impl<O: SymmetricOperator> SymmetricOperator for CountingOperator<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.calls.set(self.calls.get() + 1);
        self.inner.apply(v, out)
    }
}

/// Materializes `H` column by column. Costs `dim` products.
pub fn to_dense<O: SymmetricOperator + ?Sized>(op: &O) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn dense_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    dense_eigenvalues(m)[0]
}

/// Spectral norm of a symmetric matrix.
pub fn dense_spectral_norm(m: &DMatrix<f64>) -> f64 {
    dense_eigenvalues(m).iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// `|u^T (H v) - v^T (H u)|`, the symmetry defect on one probe pair.
pub fn symmetry_defect<O: SymmetricOperator + ?Sized>(op: &O, u: &[f64], v: &[f64]) -> f64 {
    (vector::dot(u, &op.apply_vec(v)) - vector::dot(v, &op.apply_vec(u))).abs()
}
