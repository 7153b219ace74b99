use std::path::{Path, PathBuf};

use thiserror::Error;

/// Dataset loading, schema and encoding failures.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("empty dataset")]
    Empty,
    #[error("missing column `{column}`")]
    MissingColumn { column: String },
    #[error("row {row}, column `{column}`: {message}")]
    Schema { row: usize, column: String, message: String },
    #[error("schema mapping line {line}: {message}")]
    Mapping { line: usize, message: String },
    #[error("category `{value}` of `{field}` was not seen when the encoder was fitted")]
    UnseenCategory { field: &'static str, value: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }
}

/// Classifier training and prediction failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate training data: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver did not converge within {iterations} iterations (gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("dual objective decreased by {drop:e} at iteration {iteration}")]
    DualDecrease { iteration: usize, drop: f64 },
    #[error("non-finite value encountered in the solver")]
    NonFinite,
    #[error("model file: {0}")]
    Format(String),
}

impl SvmError {
    /// Failures of the numerical routine itself, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, SvmError::NotConverged { .. } | SvmError::DualDecrease { .. } | SvmError::NonFinite)
    }
}

/// Failures of the evasion and poisoning strategies.
#[derive(Debug, Error)]
pub enum PotError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no qualifying poison candidate found for the first protector after {attempts} batches")]
    NoProgress { attempts: usize },
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Data(#[from] DataError),
}
