//! Test problems with exact derivatives and closed-form constants.

mod matrix_factorization;
mod quartic;
mod regression;

pub use matrix_factorization::{MatrixFactorization, SaddleClass};
pub use quartic::QuarticDoubleWell;
pub use regression::FiniteSumRegression;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operator::SymmetricOperator;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid problem parameter {name}: {reason}")]
    Parameter { name: &'static str, reason: String },
}

pub(crate) fn bad(name: &'static str, reason: impl Into<String>) -> ProblemError {
    ProblemError::Parameter { name, reason: reason.into() }
}

/// Constants valid on the problem's region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// L
    pub lipschitz_grad: f64,
    /// M
    pub lipschitz_hess: f64,
    pub f_bar: f64,
}

/// A smooth objective with exact value, gradient and Hessian-vector products.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64>;
    fn constants(&self) -> ProblemConstants;
    /// Whether `x` lies where [`Problem::constants`] hold.
    fn in_region(&self, x: &[f64]) -> bool;

    /// Upper bound on `||Hessian||` over the region.
    fn hessian_norm_bound(&self) -> f64 {
        self.constants().lipschitz_grad
    }

    fn dense_hessian(&self, x: &[f64]) -> DMatrix<f64> {
        crate::operator::to_dense(&HessianAt::new(self, x))
    }

    /// Uniform region sampler for spot checks; `unit` holds numbers in [0, 1).
    fn region_point(&self, unit: &[f64]) -> Vec<f64>;
}

/// Finite-sum objective `f = (1/N) sum_i f_i` with per-sample access.
pub trait FiniteSum: Problem {
    fn n_samples(&self) -> usize;
    /// `out += weight * grad f_i(x)`
    fn add_sample_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]);
    /// `out += weight * hess f_i(x) v`
    fn add_sample_hvp(&self, i: usize, x: &[f64], v: &[f64], weight: f64, out: &mut [f64]);
    /// `G(x) >= ||grad f_i(x)||` for all i.
    fn grad_bound(&self, x: &[f64]) -> f64;
    /// `K(x) >= ||hess f_i(x)||` for all i.
    fn hess_bound(&self, x: &[f64]) -> f64;

    fn sample_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.add_sample_gradient(i, x, 1.0, &mut out);
        out
    }

    fn sample_dense_hessian(&self, i: usize, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let mut col = vec![0.0; n];
            self.add_sample_hvp(i, x, &e, 1.0, &mut col);
            e[j] = 0.0;
            for (r, c) in col.into_iter().enumerate() {
                m[(r, j)] = c;
            }
        }
        m
    }
}

/// The exact Hessian of `problem` at a fixed point, as an operator.
pub struct HessianAt<'a, P: ?Sized> {
    problem: &'a P,
    x: Vec<f64>,
}

impl<'a, P: Problem + ?Sized> HessianAt<'a, P> {
    pub fn new(problem: &'a P, x: &[f64]) -> Self {
        Self { problem, x: x.to_vec() }
    }
}

impl<P: Problem + ?Sized> SymmetricOperator for HessianAt<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.problem.hvp(&self.x, v));
    }
}
