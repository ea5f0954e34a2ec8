//! The second-order method.
//!
//! Each iteration queries the inexact gradient `g_k`. If `||g_k|| > eps_g` it
//! takes `x - g_k / L`. Otherwise it asks the minimum-eigenvalue oracle for
//! `(lambda_hat, p_hat)` on the inexact Hessian; if `lambda_hat < -eps_h`
//! it moves to `x + (2 alpha_k / M) sigma p_hat`, and otherwise it stops.
//! Objective values are never read by the method itself.

use thiserror::Error;

use crate::config::{ConfigError, SignPolicy, StepPolicy, ToleranceConfig};
use crate::meo::{min_eigpair, MeoError};
use crate::operator::{dense_min_eigenvalue, CountingOperator};
use crate::oracles::{OracleBundle, OracleError};
use crate::problems::Problem;
use crate::rng::RngState;
use crate::trace::{IterationRecord, RunResult, StepKind};
use crate::vector::{self, DenseVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("point has dimension {got}, oracles expect {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Meo(#[from] MeoError),
    #[error("negative-curvature step requested with lambda_hat = {lambda_hat} >= -eps_h = {neg_eps_h}")]
    NotNegativeCurvature { lambda_hat: f64, neg_eps_h: f64 },
}

/// What one iteration did: `x_next = x + scale * direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub kind: StepKind,
    /// `g_k` for gradient steps, `p_hat` for negative-curvature steps.
    pub direction: Option<DenseVector>,
    /// `-1/L`, or `2 alpha_k sigma / M`.
    pub scale: Option<f64>,
}

/// `alpha_k` in `[eps_h, min(alpha, |lambda_hat|)]` per the step policy.
pub fn choose_step_size(lambda_hat: f64, config: &ToleranceConfig) -> Result<f64, OptimizerError> {
    if !(lambda_hat < -config.eps_h) {
        return Err(OptimizerError::NotNegativeCurvature { lambda_hat, neg_eps_h: -config.eps_h });
    }
    Ok(match config.step_policy {
        StepPolicy::ShortStep => config.eps_h,
        StepPolicy::LongStep => config.alpha.min(lambda_hat.abs()),
    })
}

fn finite(v: &[f64], what: &'static str) -> Result<(), OptimizerError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(OptimizerError::NonFinite { what })
    }
}

/// One iteration from `x`. The returned record has `k = 0` and no `f_exact`;
/// [`run`] fills both in.
pub fn step<O: OracleBundle + ?Sized>(
    x: &DenseVector,
    oracles: &O,
    config: &ToleranceConfig,
    rng: &mut RngState,
) -> Result<(StepDecision, DenseVector, IterationRecord), OptimizerError> {
    if x.dim() != oracles.dim() {
        return Err(OptimizerError::Dimension { expected: oracles.dim(), got: x.dim() });
    }
    let est = oracles.gradient(x.as_slice(), rng)?;
    finite(&est.g, "gradient estimate")?;
    let g = DenseVector::new(est.g).map_err(|_| OptimizerError::NonFinite { what: "gradient estimate" })?;
    let g_norm = g.norm();
    let mut record = IterationRecord {
        k: 0,
        kind: StepKind::GradientStep,
        grad_norm_est: g_norm,
        lambda_hat: None,
        sigma: None,
        alpha_k: None,
        hvp_count: 0,
        grad_samples: est.samples,
        hess_samples: None,
        f_exact: None,
    };

    if g_norm > config.eps_g {
        let scale = -1.0 / config.lipschitz_grad;
        let next = g.axpy(scale, x).map_err(|_| OptimizerError::NonFinite { what: "iterate" })?;
        let decision = StepDecision { kind: StepKind::GradientStep, direction: Some(g), scale: Some(scale) };
        return Ok((decision, next, record));
    }

    let hess = oracles.hessian(x.as_slice(), rng)?;
    record.hess_samples = hess.samples;
    let counted = CountingOperator::new(hess.op);
    let eig = min_eigpair(&counted, config.eps_h, config.meo_failure_budget(), rng)?;
    record.hvp_count = counted.calls();
    if !eig.lambda_hat.is_finite() {
        return Err(OptimizerError::NonFinite { what: "eigenvalue estimate" });
    }
    record.lambda_hat = Some(eig.lambda_hat);

    if eig.lambda_hat < -config.eps_h {
        let alpha_k = choose_step_size(eig.lambda_hat, config)?;
        let sigma = match config.sign_policy {
            SignPolicy::Rademacher => rng.rademacher(),
            SignPolicy::DescentAligned => {
                if vector::dot(g.as_slice(), eig.p_hat.as_slice()) <= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let scale = 2.0 * alpha_k * sigma / config.lipschitz_hess;
        let next = eig.p_hat.axpy(scale, x).map_err(|_| OptimizerError::NonFinite { what: "iterate" })?;
        record.kind = StepKind::NegativeCurvatureStep;
        record.sigma = Some(sigma);
        record.alpha_k = Some(alpha_k);
        let decision = StepDecision {
            kind: StepKind::NegativeCurvatureStep,
            direction: Some(eig.p_hat),
            scale: Some(scale),
        };
        return Ok((decision, next, record));
    }

    record.kind = StepKind::Terminated;
    let decision = StepDecision { kind: StepKind::Terminated, direction: None, scale: None };
    Ok((decision, x.clone(), record))
}

/// Iterates [`step`] from `x0` until termination or `config.max_iter`
/// iterations. Hitting the cap is reported through `terminated = false`.
pub fn run<O: OracleBundle + ?Sized>(
    x0: &DenseVector,
    oracles: &O,
    config: &ToleranceConfig,
    rng: &mut RngState,
) -> Result<RunResult, OptimizerError> {
    config.validate()?;
    finite(x0.as_slice(), "starting point")?;
    let diag = oracles.diagnostics();
    let mut x = x0.clone();
    let mut trace = Vec::new();
    let (mut gd, mut nc) = (0_u64, 0_u64);
    let (mut grad_evals, mut hvps) = (0_u64, 0_u64);
    let mut region_exits = 0_u64;
    let mut first_exit = None;
    let mut terminated = false;
    let mut k = 0_u64;

    while k < config.max_iter {
        if let Some(p) = diag {
            if !p.in_region(x.as_slice()) {
                region_exits += 1;
                first_exit.get_or_insert(k);
            }
        }
        let (decision, next, mut record) = step(&x, oracles, config, rng)?;
        record.k = k;
        record.f_exact = diag.map(|p| p.value(x.as_slice()));
        grad_evals += record.grad_samples.unwrap_or(1);
        hvps += record.hvp_count;
        trace.push(record);
        match decision.kind {
            StepKind::GradientStep => gd += 1,
            StepKind::NegativeCurvatureStep => nc += 1,
            StepKind::Terminated => {
                terminated = true;
                break;
            }
        }
        x = next;
        k += 1;
    }
    if !terminated {
        if let Some(p) = diag {
            if !p.in_region(x.as_slice()) {
                region_exits += 1;
                first_exit.get_or_insert(k);
            }
        }
    }

    let final_f = diag.map(|p| p.value(x.as_slice()));
    Ok(RunResult {
        final_point: x,
        terminated,
        iterations: k,
        gd_count: gd,
        nc_count: nc,
        total_grad_evals: grad_evals,
        total_hvps: hvps,
        trace,
        final_f,
        region_exits,
        first_region_exit: first_exit,
    })
}

/// Exact stationarity measures at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub grad_norm: f64,
    pub lambda_min: f64,
    /// `||grad f|| <= 4/3 eps_g + 1e-10`
    pub grad_ok: bool,
    /// `lambda_min >= -4/3 eps_h - 1e-10`
    pub curvature_ok: bool,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.grad_ok && self.curvature_ok
    }
}

/// Checks the approximate second-order stationarity guaranteed at
/// termination, with a dense eigensolver.
pub fn certify<P: Problem + ?Sized>(problem: &P, x: &[f64], eps_g: f64, eps_h: f64) -> Certificate {
    let grad_norm = vector::norm(&problem.gradient(x));
    let lambda_min = dense_min_eigenvalue(&problem.dense_hessian(x));
    Certificate {
        grad_norm,
        lambda_min,
        grad_ok: grad_norm <= 4.0 / 3.0 * eps_g + 1e-10,
        curvature_ok: lambda_min >= -4.0 / 3.0 * eps_h - 1e-10,
    }
}
