//! Seeded ensembles of optimizer runs, bound validation and result files.

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod io;
pub mod summary;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::ExperimentConfig;
pub use experiment::{run_ensemble, EnsembleOutput, Experiment};
pub use summary::{validate, EnsembleSummary, SeedRow, ValidationReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, message: impl ToString) -> Self {
        HarnessError::Format { path: path.to_path_buf(), message: message.to_string() }
    }

    /// 2 for configuration problems, 3 for I/O and everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            _ => 3,
        }
    }
}
