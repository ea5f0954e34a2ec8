//! Per-iteration records and run summaries.
//!
//! The serialized field names of [`IterationRecord`] are a fixed exchange
//! format: `k, kind, grad_norm_est, lambda_hat, sigma, alpha_k, hvp_count,
//! grad_samples, hess_samples, f_exact`. Optional fields are omitted when
//! absent.

use serde::{Deserialize, Serialize};

use crate::vector::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    GradientStep,
    NegativeCurvatureStep,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: u64,
    pub kind: StepKind,
    /// `||g_k||` of the inexact gradient.
    pub grad_norm_est: f64,
    /// Present iff the minimum-eigenvalue oracle ran this iteration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_k: Option<f64>,
    pub hvp_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hess_samples: Option<u64>,
    /// Exact `f(x_k)` from the diagnostics channel. The optimizer never reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_point: DenseVector,
    pub terminated: bool,
    /// Iteration index at which the run stopped (`max_iter` when it did not terminate).
    pub iterations: u64,
    pub gd_count: u64,
    pub nc_count: u64,
    pub total_grad_evals: u64,
    pub total_hvps: u64,
    pub trace: Vec<IterationRecord>,
    /// Exact `f` at `final_point`, when diagnostics are available.
    pub final_f: Option<f64>,
    /// Number of iterates that left the region on which the problem's
    /// constants are valid.
    pub region_exits: u64,
    pub first_region_exit: Option<u64>,
}

impl RunResult {
    /// Exact objective values `f(x_0), ..., f(x_last)`, with the final point
    /// appended when it is not already the last trace entry.
    pub fn f_path(&self) -> Option<Vec<f64>> {
        let mut path = self
            .trace
            .iter()
            .map(|r| r.f_exact)
            .collect::<Option<Vec<f64>>>()?;
        if !self.terminated {
            path.push(self.final_f?);
        }
        Some(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_fields_are_omitted() {
        let r = IterationRecord {
            k: 3,
            kind: StepKind::GradientStep,
            grad_norm_est: 0.5,
            lambda_hat: None,
            sigma: None,
            alpha_k: None,
            hvp_count: 0,
            grad_samples: None,
            hess_samples: None,
            f_exact: Some(-0.25),
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"k":3,"kind":"GradientStep","grad_norm_est":0.5,"hvp_count":0,"f_exact":-0.25}"#
        );
        let back: IterationRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
