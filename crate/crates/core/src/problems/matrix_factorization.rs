use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{bad, Problem, ProblemConstants, ProblemError};
use crate::operator::dense_min_eigenvalue;
use crate::rng::RngState;
use crate::theory;
use crate::vector;

/// Symmetric low-rank factorization `f(U) = 1/2 ||U U^T - M*||_F^2` over
/// `U in R^{d x r}`, flattened row-major (`U[i][j] = x[i * r + j]`).
///
/// `L = 16 Gamma` and `M = 24 sqrt(Gamma)` hold on `{U : ||U||_2^2 < Gamma}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFactorization {
    d: usize,
    r: usize,
    target: DMatrix<f64>,
    sigma1: f64,
    sigma_r: f64,
    gamma: f64,
}

/// Outcome of the strict-saddle classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaddleClass {
    LargeGradient,
    NegativeCurvature,
    NearOptimum,
}

impl MatrixFactorization {
    /// `M* = Q diag(s) Q^T` for a random orthonormal `Q in R^{d x r}` and
    /// singular values spread linearly from `sigma1` down to `sigma_r`.
    pub fn planted(
        d: usize,
        r: usize,
        sigma1: f64,
        sigma_r: f64,
        gamma: f64,
        rng: &mut RngState,
    ) -> Result<Self, ProblemError> {
        if r == 0 || r >= d {
            return Err(bad("r", format!("need 1 <= r < d, got r={r}, d={d}")));
        }
        if !(sigma_r > 0.0 && sigma1 >= sigma_r && sigma1.is_finite()) {
            return Err(bad("sigma", format!("need sigma1 >= sigma_r > 0, got {sigma1}, {sigma_r}")));
        }
        let g = DMatrix::from_iterator(d, r, rng.gaussian_vec(d * r));
        let q = g.qr().q();
        let spectrum: Vec<f64> = (0..r)
            .map(|i| {
                if r == 1 {
                    sigma1
                } else {
                    sigma1 + (sigma_r - sigma1) * i as f64 / (r - 1) as f64
                }
            })
            .collect();
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&spectrum));
        let target = &q * s * q.transpose();
        Self::new(target, r, gamma)
    }

    /// Wraps a given PSD target of rank `r`.
    pub fn new(target: DMatrix<f64>, r: usize, gamma: f64) -> Result<Self, ProblemError> {
        let d = target.nrows();
        if !target.is_square() || r == 0 || r >= d {
            return Err(bad("target", format!("need square d x d target with 1 <= r < d, got r={r}")));
        }
        let target = (&target + target.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(target.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let sigma1 = ev[0];
        let sigma_r = ev[r - 1];
        let tol = 1e-9 * sigma1.abs().max(1.0);
        if !(sigma_r > tol) || ev[r..].iter().any(|v| v.abs() > tol) {
            return Err(bad("target", format!("must be PSD with rank {r}, eigenvalues {ev:?}")));
        }
        if !(gamma > sigma1 && gamma.is_finite()) {
            return Err(bad("gamma", format!("need Gamma > sigma1 = {sigma1}, got {gamma}")));
        }
        Ok(Self { d, r, target, sigma1, sigma_r, gamma })
    }

    pub fn rows(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    /// A factor `U` with `U U^T = M*`.
    pub fn global_minimizer(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.target.clone());
        let mut order: Vec<usize> = (0..self.d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut u = vec![0.0; self.d * self.r];
        for (j, &col) in order.iter().take(self.r).enumerate() {
            let s = eig.eigenvalues[col].max(0.0).sqrt();
            for i in 0..self.d {
                u[i * self.r + j] = s * eig.eigenvectors[(i, col)];
            }
        }
        u
    }

    fn factor(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.r, x)
    }

    fn residual(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        u * u.transpose() - &self.target
    }

    fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
        m.transpose().as_slice().to_vec()
    }

    /// `||U||_2^2`, the largest eigenvalue of `U^T U`.
    pub fn spectral_norm_sq(&self, x: &[f64]) -> f64 {
        let u = self.factor(x);
        let gram = u.transpose() * u;
        SymmetricEigen::new(gram).eigenvalues.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    /// Tests, in order, `||grad f(U)|| >= sigma_r^{3/2}/24`,
    /// `lambda_min(hess f(U)) <= -sigma_r/3`, and otherwise reports
    /// [`SaddleClass::NearOptimum`].
    pub fn strict_saddle_check(&self, x: &[f64]) -> SaddleClass {
        let (eps_g, eps_h) =
            theory::strict_saddle_targets(self.sigma_r).expect("sigma_r validated positive");
        if vector::norm(&self.gradient(x)) >= eps_g {
            SaddleClass::LargeGradient
        } else if dense_min_eigenvalue(&self.dense_hessian(x)) <= -eps_h {
            SaddleClass::NegativeCurvature
        } else {
            SaddleClass::NearOptimum
        }
    }
}

impl Problem for MatrixFactorization {
    fn dim(&self) -> usize {
        self.d * self.r
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(&self.factor(x)).norm_squared()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let u = self.factor(x);
        Self::flatten(&(self.residual(&u) * &u * 2.0))
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let u = self.factor(x);
        let v = self.factor(v);
        let sym = &u * v.transpose() + &v * u.transpose();
        Self::flatten(&((self.residual(&u) * &v + sym * &u) * 2.0))
    }

    fn constants(&self) -> ProblemConstants {
        let (l, m) = theory::mf_constants(self.gamma).expect("gamma validated positive");
        ProblemConstants { lipschitz_grad: l, lipschitz_hess: m, f_bar: 0.0 }
    }

    fn in_region(&self, x: &[f64]) -> bool {
        self.spectral_norm_sq(x) < self.gamma
    }

    fn region_point(&self, unit: &[f64]) -> Vec<f64> {
        // Frobenius ball of radius sqrt(Gamma) * 0.99 contains only
        // in-region points.
        let raw: Vec<f64> = unit.iter().map(|u| 2.0 * u - 1.0).collect();
        let n = vector::norm(&raw).max(1e-12);
        let scale = 0.99 * self.gamma.sqrt() * unit[0] / n;
        raw.iter().map(|v| v * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::dense_eigenvalues;
    use crate::problems::fd;

    fn toy() -> MatrixFactorization {
        MatrixFactorization::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), 1, 2.0).unwrap()
    }

    #[test]
    fn global_minimum_has_zero_gradient() {
        let p = toy();
        assert_eq!(p.value(&[1.0, 0.0]), 0.0);
        assert_eq!(p.gradient(&[1.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(p.strict_saddle_check(&[1.0, 0.0]), SaddleClass::NearOptimum);
    }

    #[test]
    fn origin_is_a_saddle() {
        let p = toy();
        assert_eq!(p.value(&[0.0, 0.0]), 0.5);
        assert_eq!(p.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        let ev = dense_eigenvalues(&p.dense_hessian(&[0.0, 0.0]));
        assert!((ev[0] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn planted_target_has_requested_spectrum() {
        let mut rng = RngState::new(5, 0);
        let p = MatrixFactorization::planted(6, 2, 2.0, 1.0, 8.0, &mut rng).unwrap();
        assert!((p.sigma1() - 2.0).abs() < 1e-12);
        assert!((p.sigma_r() - 1.0).abs() < 1e-12);
        let u = p.global_minimizer();
        assert!(p.value(&u) < 1e-24);
        assert_eq!(p.strict_saddle_check(&u), SaddleClass::NearOptimum);
        // Hessian at 0 is -2 M* (x) I_r, so lambda_min = -2 sigma1.
        let ev = dense_eigenvalues(&p.dense_hessian(&[0.0; 12]));
        assert!((ev[0] + 4.0).abs() < 1e-12);
        assert_eq!(p.strict_saddle_check(&[0.0; 12]), SaddleClass::NegativeCurvature);
        let far: Vec<f64> = u.iter().map(|v| 3.0 * v).collect();
        assert_eq!(p.strict_saddle_check(&far), SaddleClass::LargeGradient);
        let (l, m) = (p.constants().lipschitz_grad, p.constants().lipschitz_hess);
        assert_eq!((l, m), (128.0, 24.0 * 8.0_f64.sqrt()));
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut rng = RngState::new(5, 0);
        assert!(MatrixFactorization::planted(3, 3, 2.0, 1.0, 8.0, &mut rng).is_err());
        assert!(MatrixFactorization::planted(4, 2, 1.0, 2.0, 8.0, &mut rng).is_err());
        assert!(MatrixFactorization::planted(4, 2, 2.0, 1.0, 1.5, &mut rng).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(MatrixFactorization::new(indefinite, 1, 4.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = RngState::new(8, 0);
        let p = MatrixFactorization::planted(5, 2, 3.0, 1.0, 12.0, &mut rng).unwrap();
        for _ in 0..20 {
            let x = rng.gaussian_vec(10);
            let v = rng.gaussian_vec(10);
            assert!(fd::rel_err(&fd::gradient(&p, &x, 1e-5), &p.gradient(&x)) <= 1e-5);
            assert!(fd::rel_err(&fd::hvp(&p, &x, &v, 1e-5), &p.hvp(&x, &v)) <= 1e-5);
        }
    }
}
