//! Inexact first- and second-order oracles.
//!
//! A bundle answers gradient queries with a vector `g` and Hessian queries
//! with a symmetric operator `H`. The contract a bundle may claim is
//!
//! ```text
//! ||g - grad f(x)|| <= max{eps_g, ||g||} / 3,    ||H - hess f(x)|| <= 2 eps_h / 9,
//! ```
//!
//! deterministically for [`ExactOracle`] and [`AdversarialOracle`] and with
//! probability at least `1 - xi` per call for [`SubsampledOracle`].

mod adversarial;
mod exact;
mod subsampled;

pub use adversarial::{adversarial_gradient, adversarial_hessian, AdversarialOracle, DirectionMode, NoiseSpec};
pub use exact::ExactOracle;
pub use subsampled::{
    sample_counts, subsampled_gradient, subsampled_hessian, SampledHessian, SubsampleMode, SubsampledOracle,
};

use thiserror::Error;

use crate::operator::SymmetricOperator;
use crate::problems::Problem;
use crate::rng::RngState;
use crate::theory::TheoryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("noise fraction {field} = {value} outside [0, 1]; enable stress mode to allow it")]
    NoiseFraction { field: &'static str, value: f64 },
    #[error("{field} must be positive and finite, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("injected gradient error {error} exceeds the allowed {allowed}")]
    GradientBound { error: f64, allowed: f64 },
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
    /// Batch size for sampled oracles.
    pub samples: Option<u64>,
    /// The batch exceeded `1000 N`.
    pub oversized: bool,
}

impl GradientEstimate {
    pub fn exact(g: Vec<f64>) -> Self {
        Self { g, samples: None, oversized: false }
    }
}

pub struct HessianEstimate<'a> {
    pub op: Box<dyn SymmetricOperator + 'a>,
    pub samples: Option<u64>,
}

/// Source of inexact gradients and Hessians for the optimizer, plus an
/// optional exact channel used only for diagnostics.
pub trait OracleBundle: Send + Sync {
    fn dim(&self) -> usize;
    fn gradient(&self, x: &[f64], rng: &mut RngState) -> Result<GradientEstimate, OracleError>;
    fn hessian<'a>(&'a self, x: &[f64], rng: &mut RngState) -> Result<HessianEstimate<'a>, OracleError>;
    fn diagnostics(&self) -> Option<&dyn Problem>;
}
