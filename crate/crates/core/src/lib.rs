//! Randomized second-order optimization with inexact oracles.
//!
//! The method in [`optimizer`] finds approximate second-order stationary
//! points, `||grad f|| <= 4/3 eps_g` and `lambda_min(hess f) >= -4/3 eps_h`,
//! using only inexact gradients and Hessian-vector products. It alternates
//! gradient steps with randomized negative-curvature steps found by the
//! Lanczos oracle in [`meo`], and never evaluates `f`.
//!
//! [`theory`] evaluates the iteration and sample-size bounds, [`oracles`]
//! provides exact, adversarial and subsampled oracles, and [`problems`]
//! holds test objectives with closed-form constants.

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod meo;
pub mod operator;
pub mod optimizer;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod theory;
pub mod trace;
pub mod vector;

pub use config::{ConfigError, SignPolicy, StepPolicy, ToleranceConfig};
pub use meo::{min_eigpair, EigenEstimate, MeoError};
pub use operator::SymmetricOperator;
pub use optimizer::{certify, choose_step_size, run, step, Certificate, OptimizerError, StepDecision};
pub use oracles::{OracleBundle, OracleError};
pub use problems::{FiniteSum, Problem, ProblemConstants, ProblemError};
pub use rng::RngState;
pub use trace::{IterationRecord, RunResult, StepKind};
pub use vector::{DenseVector, VectorError};
