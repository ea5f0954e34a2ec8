use nalgebra::{DMatrix, DVector};

use super::{bad, FiniteSum, Problem, ProblemConstants, ProblemError};
use crate::operator::dense_eigenvalues;
use crate::rng::RngState;
use crate::vector;

/// Least squares with a nonconvex penalty:
/// `f_i(x) = 1/2 (a_i^T x - b_i)^2 + lambda sum_j x_j^2 / (1 + x_j^2)`.
///
/// The penalty `rho(t) = t^2/(1+t^2)` has `|rho'| <= 3 sqrt(3)/8`,
/// `|rho''| <= 2` and `|rho'''| <= RHO3_MAX`, so the constants below are
/// global and the region is all of R^d.
#[derive(Debug, Clone)]
pub struct FiniteSumRegression {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    lambda: f64,
    // (1/N) A^T A and (1/N) A^T b for full-batch evaluation
    gram: DMatrix<f64>,
    atb: DVector<f64>,
    btb: f64,
    row_norms: Vec<f64>,
    gram_norm: f64,
}

const RHO1_MAX: f64 = 0.649_519_052_838_329; // 3 sqrt(3) / 8

/// `max |rho'''(t)|`, attained at `t^2 = 1 - 2/sqrt(5)`.
fn rho3_max() -> f64 {
    let t2 = 1.0 - 2.0 / 5.0_f64.sqrt();
    24.0 * t2.sqrt() * (1.0 - t2) / (1.0 + t2).powi(4)
}

fn rho1(t: f64) -> f64 {
    2.0 * t / (1.0 + t * t).powi(2)
}

fn rho2(t: f64) -> f64 {
    (2.0 - 6.0 * t * t) / (1.0 + t * t).powi(3)
}

impl FiniteSumRegression {
    pub fn from_data(a: Vec<Vec<f64>>, b: Vec<f64>, lambda: f64) -> Result<Self, ProblemError> {
        let n = a.len();
        if n == 0 || n != b.len() {
            return Err(bad("data", format!("need N >= 1 rows and N targets, got {n} and {}", b.len())));
        }
        let d = a[0].len();
        if d == 0 || a.iter().any(|row| row.len() != d) {
            return Err(bad("data", "rows must share a positive dimension"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(bad("lambda", format!("must be >= 0, got {lambda}")));
        }
        let mut gram = DMatrix::zeros(d, d);
        let mut atb = DVector::zeros(d);
        for (row, bi) in a.iter().zip(&b) {
            let r = DVector::from_column_slice(row);
            gram += &r * r.transpose();
            atb += r * *bi;
        }
        gram /= n as f64;
        atb /= n as f64;
        let btb = b.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let row_norms = a.iter().map(|r| vector::norm(r)).collect();
        let gram_norm = *dense_eigenvalues(&gram).last().expect("d >= 1");
        Ok(Self { a, b, lambda, gram, atb, btb, row_norms, gram_norm })
    }

    /// `a_i ~ N(0, I/d)`, `b_i = a_i^T x* + 0.1 noise` with `x* ~ N(0, 4 I)`.
    pub fn generate(n: usize, d: usize, lambda: f64, rng: &mut RngState) -> Result<Self, ProblemError> {
        if n == 0 || d == 0 {
            return Err(bad("shape", format!("need N, d >= 1, got N={n}, d={d}")));
        }
        let scale = 1.0 / (d as f64).sqrt();
        let x_star: Vec<f64> = rng.gaussian_vec(d).into_iter().map(|v| 2.0 * v).collect();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = rng.gaussian_vec(d).into_iter().map(|v| v * scale).collect();
            b.push(vector::dot(&row, &x_star) + 0.1 * rng.standard_normal());
            a.push(row);
        }
        Self::from_data(a, b, lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Problem for FiniteSumRegression {
    fn dim(&self) -> usize {
        self.atb.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let quad = 0.5 * (xv.dot(&(&self.gram * &xv)) - 2.0 * xv.dot(&self.atb) + self.btb);
        let pen: f64 = x.iter().map(|t| t * t / (1.0 + t * t)).sum();
        quad + self.lambda * pen
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let xv = DVector::from_column_slice(x);
        let g = &self.gram * xv - &self.atb;
        g.iter().zip(x).map(|(g, t)| g + self.lambda * rho1(*t)).collect()
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let hv = &self.gram * DVector::from_column_slice(v);
        hv.iter()
            .zip(x.iter().zip(v))
            .map(|(h, (t, vj))| h + self.lambda * rho2(*t) * vj)
            .collect()
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            lipschitz_grad: self.gram_norm + 2.0 * self.lambda,
            lipschitz_hess: (self.lambda * rho3_max()).max(f64::MIN_POSITIVE),
            f_bar: 0.0,
        }
    }

    fn in_region(&self, _x: &[f64]) -> bool {
        true
    }

    fn region_point(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().map(|u| 6.0 * (2.0 * u - 1.0)).collect()
    }
}

impl FiniteSum for FiniteSumRegression {
    fn n_samples(&self) -> usize {
        self.a.len()
    }

    fn add_sample_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        let row = &self.a[i];
        let r = vector::dot(row, x) - self.b[i];
        vector::axpy_in_place(weight * r, row, out);
        for (o, t) in out.iter_mut().zip(x) {
            *o += weight * self.lambda * rho1(*t);
        }
    }

    fn add_sample_hvp(&self, i: usize, x: &[f64], v: &[f64], weight: f64, out: &mut [f64]) {
        let row = &self.a[i];
        vector::axpy_in_place(weight * vector::dot(row, v), row, out);
        for ((o, t), vj) in out.iter_mut().zip(x).zip(v) {
            *o += weight * self.lambda * rho2(*t) * vj;
        }
    }

    /// `max_i ||a_i|| (|a_i^T x| + |b_i|) + 2 lambda sqrt(d) 3 sqrt(3)/8`.
    /// The penalty term is twice the tight `lambda sqrt(d) max|rho'|`.
    fn grad_bound(&self, x: &[f64]) -> f64 {
        let data = self
            .a
            .iter()
            .zip(&self.b)
            .zip(&self.row_norms)
            .map(|((row, bi), n)| n * (vector::dot(row, x).abs() + bi.abs()))
            .fold(0.0_f64, f64::max);
        data + self.lambda * (self.dim() as f64).sqrt() * RHO1_MAX * 2.0
    }

    /// `max_i ||a_i||^2 + 2 lambda`.
    fn hess_bound(&self, _x: &[f64]) -> f64 {
        let data = self.row_norms.iter().fold(0.0_f64, |m, n| m.max(n * n));
        data + 2.0 * self.lambda
    }
}
