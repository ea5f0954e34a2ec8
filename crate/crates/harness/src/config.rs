//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file describes a single
//! exact-oracle run on the 10-dimensional quartic from the origin.
//!
//! ```toml
//! [problem]
//! kind = "quartic"      # quartic | matrix_factorization | regression
//! dim = 10
//! b = 1.0
//! radius = 2.0
//!
//! [start]
//! value = 0.1           # x0 = value * ones, unless `point` is given
//! perturb = 0.0         # std-dev of a per-seed Gaussian added to x0
//!
//! [tolerance]
//! eps_g = 0.1
//! eps_h = 0.1           # or `preset = "sqrt" | "cube_two_thirds"`
//! delta = 0.1
//!
//! [oracle]
//! mode = "adversarial"  # exact | adversarial | subsampled
//! grad_fraction = 1.0
//! hess_fraction = 1.0
//!
//! [run]
//! seeds = 500
//! base_seed = 0
//! workers = 0           # 0 = one per core
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sosp_core::config::{SignPolicy, StepPolicy};
use sosp_core::oracles::{DirectionMode, NoiseSpec, SubsampleMode};
use sosp_core::theory::CouplingRegime;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Quartic {
        #[serde(default = "d_dim")]
        dim: usize,
        #[serde(default = "d_one")]
        b: f64,
        #[serde(default = "d_radius")]
        radius: f64,
    },
    MatrixFactorization {
        #[serde(default = "d_rows")]
        rows: usize,
        #[serde(default = "d_rank")]
        rank: usize,
        #[serde(default = "d_sigma1")]
        sigma1: f64,
        #[serde(default = "d_one")]
        sigma_r: f64,
        /// Defaults to `4 sigma1`.
        #[serde(default)]
        gamma: Option<f64>,
        /// Seed of the planted target.
        #[serde(default)]
        data_seed: u64,
    },
    Regression {
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default = "d_dim")]
        dim: usize,
        #[serde(default = "d_lambda")]
        lambda: f64,
        #[serde(default)]
        data_seed: u64,
    },
}

fn d_dim() -> usize {
    10
}
fn d_one() -> f64 {
    1.0
}
fn d_radius() -> f64 {
    2.0
}
fn d_rows() -> usize {
    6
}
fn d_rank() -> usize {
    2
}
fn d_sigma1() -> f64 {
    2.0
}
fn d_samples() -> usize {
    500
}
fn d_lambda() -> f64 {
    0.5
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Quartic { dim: d_dim(), b: d_one(), radius: d_radius() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartConfig {
    /// `x0 = value * ones`.
    pub value: f64,
    /// Explicit `x0`; overrides `value`.
    pub point: Option<Vec<f64>>,
    /// Standard deviation of a Gaussian perturbation drawn per seed.
    pub perturb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    pub eps_g: f64,
    /// Ignored when `preset` is set.
    pub eps_h: f64,
    /// Derive `eps_h` from `eps_g` and the problem constants.
    pub preset: Option<CouplingRegime>,
    /// Defaults to `eps_h`.
    pub alpha: Option<f64>,
    pub delta: f64,
    pub xi: f64,
    pub eta: u32,
    /// Defaults to `min(ceil(10 n), 10^7)` with `n` the high-probability
    /// iteration bound at the unperturbed start.
    pub max_iter: Option<u64>,
    pub step_policy: StepPolicy,
    pub sign_policy: SignPolicy,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            eps_g: 0.1,
            eps_h: 0.1,
            preset: None,
            alpha: None,
            delta: 0.1,
            xi: 0.01,
            eta: 2,
            max_iter: None,
            step_policy: StepPolicy::ShortStep,
            sign_policy: SignPolicy::Rademacher,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    #[default]
    Exact,
    Adversarial {
        #[serde(default = "d_one")]
        grad_fraction: f64,
        #[serde(default = "d_one")]
        hess_fraction: f64,
        #[serde(default)]
        direction_mode: DirectionMode,
        #[serde(default)]
        stress: bool,
    },
    /// Regression only. The failure probability is `tolerance.xi`.
    Subsampled {
        #[serde(default)]
        sampling: SubsampleMode,
    },
}

impl OracleConfig {
    pub fn noise_spec(&self) -> Option<NoiseSpec> {
        match *self {
            OracleConfig::Adversarial { grad_fraction, hess_fraction, direction_mode, stress } => {
                Some(NoiseSpec { grad_fraction, hess_fraction, direction_mode, stress })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seeds: u64,
    pub base_seed: u64,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// Write `trace_<seed>.jsonl` files.
    pub traces: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seeds: 1, base_seed: 0, workers: 0, out: None, traces: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub start: StartConfig,
    pub tolerance: ToleranceSection,
    pub oracle: OracleConfig,
    pub run: RunSection,
}

fn field(name: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { field: name.to_string(), message: message.into() }
}

fn check_positive(name: &str, v: f64) -> Result<(), HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

fn check_probability(name: &str, v: f64) -> Result<(), HarnessError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(field(name, format!("must lie in (0, 1), got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| field("<file>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Checks everything that can be checked without building the problem.
    pub fn validate(&self) -> Result<(), HarnessError> {
        match &self.problem {
            ProblemConfig::Quartic { dim, b, radius } => {
                if *dim == 0 {
                    return Err(field("problem.dim", "must be >= 1"));
                }
                check_positive("problem.b", *b)?;
                if !(*radius >= 2.0 * b.sqrt()) {
                    return Err(field("problem.radius", format!("must be >= 2 sqrt(b) = {}", 2.0 * b.sqrt())));
                }
            }
            ProblemConfig::MatrixFactorization { rows, rank, sigma1, sigma_r, gamma, .. } => {
                if *rank == 0 || rank >= rows {
                    return Err(field("problem.rank", format!("need 1 <= rank < rows = {rows}")));
                }
                check_positive("problem.sigma_r", *sigma_r)?;
                if !(sigma1 >= sigma_r) {
                    return Err(field("problem.sigma1", "must be >= sigma_r"));
                }
                if let Some(g) = gamma {
                    if !(*g > *sigma1) {
                        return Err(field("problem.gamma", format!("must exceed sigma1 = {sigma1}")));
                    }
                }
            }
            ProblemConfig::Regression { samples, dim, lambda, .. } => {
                if *samples == 0 {
                    return Err(field("problem.samples", "must be >= 1"));
                }
                if *dim == 0 {
                    return Err(field("problem.dim", "must be >= 1"));
                }
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return Err(field("problem.lambda", "must be >= 0"));
                }
            }
        }
        if let Some(p) = &self.start.point {
            if p.len() != self.dim() {
                return Err(field("start.point", format!("has length {}, problem needs {}", p.len(), self.dim())));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(field("start.point", "entries must be finite"));
            }
        }
        if !self.start.value.is_finite() {
            return Err(field("start.value", "must be finite"));
        }
        if !(self.start.perturb >= 0.0 && self.start.perturb.is_finite()) {
            return Err(field("start.perturb", "must be >= 0"));
        }
        let t = &self.tolerance;
        check_positive("tolerance.eps_g", t.eps_g)?;
        if t.preset.is_none() {
            check_positive("tolerance.eps_h", t.eps_h)?;
        }
        if let Some(a) = t.alpha {
            check_positive("tolerance.alpha", a)?;
        }
        check_probability("tolerance.delta", t.delta)?;
        check_probability("tolerance.xi", t.xi)?;
        if t.eta < 2 {
            return Err(field("tolerance.eta", format!("must be >= 2, got {}", t.eta)));
        }
        if t.max_iter == Some(0) {
            return Err(field("tolerance.max_iter", "must be >= 1"));
        }
        match &self.oracle {
            OracleConfig::Adversarial { .. } => {
                self.oracle
                    .noise_spec()
                    .expect("adversarial")
                    .validate()
                    .map_err(|e| field("oracle", e.to_string()))?;
            }
            OracleConfig::Subsampled { .. } => {
                if !matches!(self.problem, ProblemConfig::Regression { .. }) {
                    return Err(field("oracle.mode", "subsampled oracles need problem.kind = \"regression\""));
                }
            }
            OracleConfig::Exact => {}
        }
        if self.run.seeds == 0 {
            return Err(field("run.seeds", "must be >= 1"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.problem {
            ProblemConfig::Quartic { dim, .. } => *dim,
            ProblemConfig::MatrixFactorization { rows, rank, .. } => rows * rank,
            ProblemConfig::Regression { dim, .. } => *dim,
        }
    }
}
