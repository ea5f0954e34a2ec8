use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be positive and finite, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field} must lie in (0, 1), got {value}")]
    NotProbability { field: &'static str, value: f64 },
    #[error("need eps_h <= alpha <= L, got eps_h={eps_h}, alpha={alpha}, L={lipschitz_grad}")]
    AlphaOutOfRange { eps_h: f64, alpha: f64, lipschitz_grad: f64 },
    #[error("eta must be an integer >= 2, got {0}")]
    Eta(u32),
    #[error("max_iter must be positive")]
    MaxIter,
    #[error("f_bar must be finite")]
    FBar,
}

/// How the negative-curvature step length `alpha_k` is picked from
/// `[eps_h, min(alpha, |lambda_hat|)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    /// `alpha_k = eps_h`
    #[default]
    ShortStep,
    /// `alpha_k = min(alpha, |lambda_hat|)`
    LongStep,
}

/// Sense of the negative-curvature step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignPolicy {
    /// Fair coin flip. All iteration bounds assume this mode.
    #[default]
    Rademacher,
    /// Pick the sign making `sigma * g^T p <= 0`; ties go to `+1`.
    /// Comparison mode only.
    DescentAligned,
}

/// Tolerances, smoothness constants and failure budgets for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub eps_g: f64,
    pub eps_h: f64,
    /// Cap on the negative-curvature step scale, `eps_h <= alpha <= L`.
    pub alpha: f64,
    /// Gradient Lipschitz constant L.
    pub lipschitz_grad: f64,
    /// Hessian Lipschitz constant M.
    pub lipschitz_hess: f64,
    /// Lower bound on f. Only the theory bounds read it.
    pub f_bar: f64,
    pub delta: f64,
    pub xi: f64,
    pub eta: u32,
    pub max_iter: u64,
    #[serde(default)]
    pub step_policy: StepPolicy,
    #[serde(default)]
    pub sign_policy: SignPolicy,
}

impl ToleranceConfig {
    /// Short-step, Rademacher config with `alpha = eps_h`, `delta = 0.1`,
    /// `xi = 0.01`, `eta = 2`, `f_bar = 0` and a placeholder `max_iter`.
    pub fn new(eps_g: f64, eps_h: f64, lipschitz_grad: f64, lipschitz_hess: f64) -> Self {
        Self {
            eps_g,
            eps_h,
            alpha: eps_h,
            lipschitz_grad,
            lipschitz_hess,
            f_bar: 0.0,
            delta: 0.1,
            xi: 0.01,
            eta: 2,
            max_iter: 1_000_000,
            step_policy: StepPolicy::ShortStep,
            sign_policy: SignPolicy::Rademacher,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("eps_g", self.eps_g)?;
        positive("eps_h", self.eps_h)?;
        positive("alpha", self.alpha)?;
        positive("lipschitz_grad", self.lipschitz_grad)?;
        positive("lipschitz_hess", self.lipschitz_hess)?;
        probability("delta", self.delta)?;
        probability("xi", self.xi)?;
        if !(self.eps_h <= self.alpha && self.alpha <= self.lipschitz_grad) {
            return Err(ConfigError::AlphaOutOfRange {
                eps_h: self.eps_h,
                alpha: self.alpha,
                lipschitz_grad: self.lipschitz_grad,
            });
        }
        if self.eta < 2 {
            return Err(ConfigError::Eta(self.eta));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::MaxIter);
        }
        if !self.f_bar.is_finite() {
            return Err(ConfigError::FBar);
        }
        Ok(())
    }

    /// Per-call failure budget handed to the minimum-eigenvalue oracle, so
    /// that a union bound over `max_iter` calls stays below `delta / 2`.
    pub fn meo_failure_budget(&self) -> f64 {
        self.delta / (2.0 * self.max_iter as f64)
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NotPositive { field, value })
    }
}

fn probability(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::NotProbability { field, value })
    }
}
