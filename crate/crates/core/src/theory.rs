//! Closed-form complexity bounds, sample sizes and tolerance presets.
//!
//! Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ToleranceConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must lie in (0, 1), got {value}")]
    NotProbability { name: &'static str, value: f64 },
    #[error("f(x0) = {f0} is below the lower bound f_bar = {f_bar}")]
    BelowLowerBound { f0: f64, f_bar: f64 },
    #[error("eta must be >= 2, got {0}")]
    Eta(u32),
}

fn positive(name: &'static str, value: f64) -> Result<f64, TheoryError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(TheoryError::NotPositive { name, value })
    }
}

fn probability(name: &'static str, value: f64) -> Result<f64, TheoryError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(TheoryError::NotProbability { name, value })
    }
}

fn gap(f0: f64, f_bar: f64) -> Result<f64, TheoryError> {
    if !(f0 >= f_bar) || !f0.is_finite() || !f_bar.is_finite() {
        return Err(TheoryError::BelowLowerBound { f0, f_bar });
    }
    Ok(f0 - f_bar)
}

/// Guaranteed per-iteration expected decrease,
/// `min(eps_g^2 / (6L), 2 eps_h^3 / (9 M^2))`.
pub fn c_eps(eps_g: f64, eps_h: f64, lipschitz_grad: f64, lipschitz_hess: f64) -> Result<f64, TheoryError> {
    let eps_g = positive("eps_g", eps_g)?;
    let eps_h = positive("eps_h", eps_h)?;
    let l = positive("L", lipschitz_grad)?;
    let m = positive("M", lipschitz_hess)?;
    Ok(gd_decrease(eps_g, l).min(nc_decrease(eps_h, m)))
}

/// Deterministic decrease of one gradient step, `eps_g^2 / (6L)`.
pub fn gd_decrease(eps_g: f64, lipschitz_grad: f64) -> f64 {
    eps_g * eps_g / (6.0 * lipschitz_grad)
}

/// Expected decrease of one Rademacher negative-curvature step,
/// `2 eps_h^3 / (9 M^2)`.
pub fn nc_decrease(eps_h: f64, lipschitz_hess: f64) -> f64 {
    2.0 * eps_h.powi(3) / (9.0 * lipschitz_hess * lipschitz_hess)
}

/// Bound on the expected stopping time, `(f0 - f_bar) / c_eps`.
pub fn expected_iter_bound(f0: f64, f_bar: f64, c_eps: f64) -> Result<f64, TheoryError> {
    let c = positive("c_eps", c_eps)?;
    Ok(gap(f0, f_bar)? / c)
}

/// Constants of the high-probability stopping-time bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighProbBound {
    /// Iteration count `n` after which the run has stopped with probability `1 - delta`.
    pub n: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
}

/// `n = 2 (f0 - f_bar) / c_eps + B K` with
/// `B = 1 + 18 alpha L / (M eps_g)`, `C = 2304 M^2 alpha^2 eps_g^2 / eps_h^6` and
/// `K = max{C ln(1/delta), 4 eta C ((f0 - f_bar)/c_eps)^(1/eta), 4 eta^2 C^(1 + 1/(eta-1)) B^(1/(eta-1))}`.
pub fn high_prob_iters(f0: f64, config: &ToleranceConfig) -> Result<HighProbBound, TheoryError> {
    let eps_g = positive("eps_g", config.eps_g)?;
    let eps_h = positive("eps_h", config.eps_h)?;
    let alpha = positive("alpha", config.alpha)?;
    let l = positive("L", config.lipschitz_grad)?;
    let m = positive("M", config.lipschitz_hess)?;
    let delta = probability("delta", config.delta)?;
    if config.eta < 2 {
        return Err(TheoryError::Eta(config.eta));
    }
    let eta = f64::from(config.eta);
    let ratio = expected_iter_bound(f0, config.f_bar, c_eps(eps_g, eps_h, l, m)?)?;

    let b = 1.0 + 18.0 * alpha * l / (m * eps_g);
    let c = 2304.0 * m * m * alpha * alpha * eps_g * eps_g / eps_h.powi(6);
    let inv = 1.0 / (eta - 1.0);
    let k = (c * (1.0 / delta).ln())
        .max(4.0 * eta * c * ratio.powf(1.0 / eta))
        .max(4.0 * eta * eta * c.powf(1.0 + inv) * b.powf(inv));
    Ok(HighProbBound { n: 2.0 * ratio + b * k, b, c, k })
}

/// Gradient/Hessian tolerance couplings analysed in the corollaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRegime {
    /// `eps_h = sqrt(eps M)`
    Sqrt,
    /// `eps_h` chosen so both terms of `c_eps` coincide.
    CubeTwoThirds,
}

/// Returns `(eps_g, eps_h)` for an underlying tolerance `eps`.
pub fn coupling_preset(
    regime: CouplingRegime,
    eps: f64,
    lipschitz_grad: f64,
    lipschitz_hess: f64,
) -> Result<(f64, f64), TheoryError> {
    let eps = positive("eps", eps)?;
    let m = positive("M", lipschitz_hess)?;
    let eps_h = match regime {
        CouplingRegime::Sqrt => (eps * m).sqrt(),
        CouplingRegime::CubeTwoThirds => {
            let l = positive("L", lipschitz_grad)?;
            // eps^2/(6L) = 2 eps_h^3/(9 M^2)
            (3.0 * m * m * eps * eps / (4.0 * l)).cbrt()
        }
    };
    Ok((eps, eps_h))
}

/// Total gradient evaluations plus Hessian-vector products, `n / sqrt(eps_h)`.
pub fn operation_complexity(n: f64, eps_h: f64) -> Result<f64, TheoryError> {
    Ok(positive("n", n)? / positive("eps_h", eps_h)?.sqrt())
}

/// Batch size for with-replacement gradient subsampling,
/// `ceil(16 (1 + sqrt(8 ln(1/xi)))^2 (G/D)^2)`.
pub fn grad_sample_size(g_bound: f64, denom: f64, xi: f64) -> Result<u64, TheoryError> {
    let g = positive("G", g_bound)?;
    let d = positive("D", denom)?;
    let xi = probability("xi", xi)?;
    let lead = 1.0 + (8.0 * (1.0 / xi).ln()).sqrt();
    Ok(ceil_count(16.0 * lead * lead * (g / d).powi(2)))
}

/// Batch size for Hessian subsampling, `ceil(484 ln(2d/xi) (K/eps_h)^2)`.
pub fn hess_sample_size(k_bound: f64, dim: usize, eps_h: f64, xi: f64) -> Result<u64, TheoryError> {
    let k = positive("K", k_bound)?;
    let eps_h = positive("eps_h", eps_h)?;
    let xi = probability("xi", xi)?;
    let d = positive("d", dim as f64)?;
    Ok(ceil_count(484.0 * (2.0 * d / xi).ln() * (k / eps_h).powi(2)))
}

fn ceil_count(x: f64) -> u64 {
    // saturates for absurd inputs rather than wrapping
    x.ceil().clamp(1.0, u64::MAX as f64) as u64
}

/// `(grad_size, hess_size)` from the two subsampling formulas.
pub fn sample_sizes(
    g_bound: f64,
    k_bound: f64,
    denom: f64,
    dim: usize,
    eps_h: f64,
    xi: f64,
) -> Result<(u64, u64), TheoryError> {
    Ok((grad_sample_size(g_bound, denom, xi)?, hess_sample_size(k_bound, dim, eps_h, xi)?))
}

/// Tolerances under which an approximate second-order point of the
/// symmetric matrix-factorization objective is near a global minimizer:
/// `(sigma_r^{3/2} / 24, sigma_r / 3)`.
pub fn strict_saddle_targets(sigma_r: f64) -> Result<(f64, f64), TheoryError> {
    let s = positive("sigma_r", sigma_r)?;
    Ok((s.powf(1.5) / 24.0, s / 3.0))
}

/// Radius of the neighbourhood of the minimizers matched with
/// [`strict_saddle_targets`], `sigma_r^{1/2} / 3`.
pub fn strict_saddle_radius(sigma_r: f64) -> Result<f64, TheoryError> {
    Ok(positive("sigma_r", sigma_r)?.sqrt() / 3.0)
}

/// `(L, M) = (16 Gamma, 24 sqrt(Gamma))` for matrix factorization on
/// `{U : ||U||^2 < Gamma}`.
pub fn mf_constants(gamma: f64) -> Result<(f64, f64), TheoryError> {
    let g = positive("Gamma", gamma)?;
    Ok((16.0 * g, 24.0 * g.sqrt()))
}

/// Iteration cap of randomized Lanczos for an additive accuracy `eps`:
/// `min{d, 1 + max{ln(25d/delta^2)/2, 3/2 ln(25d/delta^2) sqrt(||H||/eps)}}`.
pub fn lanczos_cap(dim: usize, delta: f64, h_norm: f64, eps: f64) -> f64 {
    let d = dim as f64;
    let log_term = (25.0 * d / (delta * delta)).ln();
    let inner = (0.5 * log_term).max(1.5 * log_term * (h_norm.max(0.0) / eps).sqrt());
    d.min(1.0 + inner)
}

/// Union-bound split of a total failure probability over `n` iterations,
/// `xi = delta / (2n)`.
pub fn per_iteration_failure_budget(delta: f64, n: f64) -> f64 {
    delta / (2.0 * n.max(1.0))
}

/// Every closed-form quantity for one configuration and starting value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub c_eps: f64,
    pub expected_t_bound: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
    pub n_high_prob: f64,
    pub operation_complexity: f64,
    pub lanczos_cap: f64,
    pub grad_sample_size: u64,
    pub hess_sample_size: u64,
    /// `delta / (2 n)`
    pub union_bound_xi: f64,
}

/// Problem-side inputs of a [`BoundReport`] that the config does not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub f0: f64,
    pub dim: usize,
    /// Upper bound on `||H||`, used for the Lanczos cap.
    pub hess_norm: f64,
    /// Per-sample gradient bound `G(x)`; use `1` when not applicable.
    pub grad_bound: f64,
    /// Per-sample Hessian bound `K(x)`; use `1` when not applicable.
    pub hess_bound: f64,
}

pub fn bound_report(config: &ToleranceConfig, inputs: &BoundInputs) -> Result<BoundReport, TheoryError> {
    let c_eps = c_eps(config.eps_g, config.eps_h, config.lipschitz_grad, config.lipschitz_hess)?;
    let expected = expected_iter_bound(inputs.f0, config.f_bar, c_eps)?;
    let hp = high_prob_iters(inputs.f0, config)?;
    let (grad_size, hess_size) = sample_sizes(
        inputs.grad_bound,
        inputs.hess_bound,
        config.eps_g,
        inputs.dim,
        config.eps_h,
        config.xi,
    )?;
    Ok(BoundReport {
        c_eps,
        expected_t_bound: expected,
        b: hp.b,
        c: hp.c,
        k: hp.k,
        n_high_prob: hp.n,
        operation_complexity: operation_complexity(hp.n, config.eps_h)?,
        lanczos_cap: lanczos_cap(inputs.dim, config.meo_failure_budget(), inputs.hess_norm, config.eps_h / 9.0),
        grad_sample_size: grad_size,
        hess_sample_size: hess_size,
        union_bound_xi: per_iteration_failure_budget(config.delta, hp.n),
    })
}
