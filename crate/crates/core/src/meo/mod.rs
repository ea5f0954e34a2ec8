//! Minimum-eigenvalue oracle.
//!
//! Randomized Lanczos with full reorthogonalization, driven only by
//! matrix-vector products. From a uniformly random unit start it returns a
//! unit vector `p_hat` and its Rayleigh quotient `lambda_hat = p_hat^T H p_hat`
//! such that, with probability at least `1 - delta`,
//! `lambda_hat <= lambda_min(H) + eps_h / 9`.
//!
//! The iteration cap
//! `min{d, 1 + max{ln(25d/delta^2)/2, 3/2 ln(25d/delta^2) sqrt(||H|| / (eps_h/9))}}`
//! needs `||H||`, which the caller does not supply. The cap is evaluated
//! with a running lower estimate of `||H||` (the largest `||H q_j||` and
//! Ritz magnitude seen so far), so the number of products never exceeds the
//! cap computed with the true norm.
//!
//! The run stops early once the minimum Ritz pair has residual
//! `||H p - lambda p|| <= eps_h / 18`, but not before
//! `1 + ln(25d/delta^2)/2` products. A small residual only shows that
//! `lambda_hat` is close to *some* eigenvalue; the floor keeps the Krylov
//! space large enough that it is the smallest one with the stated
//! probability.

mod tridiagonal;

pub use tridiagonal::{tridiagonal_eigen, TridiagonalEigen};

use thiserror::Error;

use crate::operator::SymmetricOperator;
use crate::rng::RngState;
use crate::theory;
use crate::vector::{self, DenseVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeoError {
    #[error("operator has dimension 0")]
    ZeroDimension,
    #[error("eps_h must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("failure probability must lie in (0, 1), got {0}")]
    BadProbability(f64),
    #[error("operator returned a non-finite product at Lanczos step {step}")]
    NonFinite { step: usize },
    #[error("tridiagonal eigensolver did not converge at size {0}")]
    Tridiagonal(usize),
}

/// Approximate minimum eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    pub lambda_hat: f64,
    /// Unit vector; `lambda_hat` is its Rayleigh quotient.
    pub p_hat: DenseVector,
    pub hvps_used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Residual,
    /// `beta_k = 0`: the Krylov space is invariant.
    Breakdown,
    FullDimension,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct LanczosOutcome {
    pub estimate: EigenEstimate,
    /// Smallest Ritz value after each step.
    pub ritz_min_history: Vec<f64>,
    pub residual: f64,
    /// Largest lower estimate of `||H||` seen.
    pub norm_estimate: f64,
    pub stop: StopReason,
}

/// Approximate `(lambda_min, v_min)` of `h` to additive accuracy `eps_h / 9`
/// with failure probability `delta`.
pub fn min_eigpair<O: SymmetricOperator + ?Sized>(
    h: &O,
    eps_h: f64,
    delta: f64,
    rng: &mut RngState,
) -> Result<EigenEstimate, MeoError> {
    lanczos_min_eig(h, eps_h, delta, rng).map(|o| o.estimate)
}

/// [`min_eigpair`] with the full Lanczos diagnostics.
pub fn lanczos_min_eig<O: SymmetricOperator + ?Sized>(
    h: &O,
    eps_h: f64,
    delta: f64,
    rng: &mut RngState,
) -> Result<LanczosOutcome, MeoError> {
    let d = h.dim();
    if d == 0 {
        return Err(MeoError::ZeroDimension);
    }
    if !(eps_h > 0.0 && eps_h.is_finite()) {
        return Err(MeoError::BadTolerance(eps_h));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MeoError::BadProbability(delta));
    }
    let accuracy = eps_h / 9.0;
    let residual_target = eps_h / 18.0;
    let min_steps = 1.0 + 0.5 * (25.0 * d as f64 / (delta * delta)).ln();

    let mut q = rng.unit_vector(d);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    let mut norm_est = 0.0_f64;

    loop {
        let step = basis.len();
        let mut w = h.apply_vec(&q);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(MeoError::NonFinite { step });
        }
        norm_est = norm_est.max(vector::norm(&w));
        alphas.push(vector::dot(&q, &w));
        images.push(w.clone());
        basis.push(q);

        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = vector::dot(b, &w);
                vector::axpy_in_place(-c, b, &mut w);
            }
        }
        let beta = vector::norm(&w);
        let m = basis.len();

        let eig = tridiagonal_eigen(&alphas, &betas).ok_or(MeoError::Tridiagonal(m))?;
        let theta_min = eig.values[0];
        let theta_max = eig.values[m - 1];
        history.push(theta_min);
        norm_est = norm_est.max(theta_min.abs()).max(theta_max.abs());

        let (p, hp) = ritz_pair(&basis, &images, &eig.vectors[0]);
        let lambda = vector::dot(&p, &hp);
        let residual = {
            let mut r = hp.clone();
            vector::axpy_in_place(-lambda, &p, &mut r);
            vector::norm(&r)
        };

        let cap = theory::lanczos_cap(d, delta, norm_est, accuracy);
        let stop = if m >= d {
            Some(StopReason::FullDimension)
        } else if beta == 0.0 || beta <= 1e-12 * norm_est {
            Some(StopReason::Breakdown)
        } else if residual <= residual_target && m as f64 >= min_steps {
            Some(StopReason::Residual)
        } else if (m + 1) as f64 > cap {
            Some(StopReason::IterationCap)
        } else {
            None
        };

        if let Some(stop) = stop {
            let p_hat = DenseVector::new(p).map_err(|_| MeoError::NonFinite { step })?;
            return Ok(LanczosOutcome {
                estimate: EigenEstimate { lambda_hat: lambda, p_hat, hvps_used: m as u64 },
                ritz_min_history: history,
                residual,
                norm_estimate: norm_est,
                stop,
            });
        }

        betas.push(beta);
        q = w.into_iter().map(|v| v / beta).collect();
    }
}

/// Ritz vector `p = Q y / ||Q y||` and its image `H p`, assembled from the
/// stored products so no extra operator application is needed.
fn ritz_pair(basis: &[Vec<f64>], images: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = basis[0].len();
    let mut p = vec![0.0; d];
    let mut hp = vec![0.0; d];
    for ((b, img), &c) in basis.iter().zip(images).zip(y) {
        vector::axpy_in_place(c, b, &mut p);
        vector::axpy_in_place(c, img, &mut hp);
    }
    let n = vector::norm(&p);
    p.iter_mut().for_each(|v| *v /= n);
    hp.iter_mut().for_each(|v| *v /= n);
    (p, hp)
}
