use std::path::PathBuf;

use mpflow_core::MpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: syntax error at line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("{path}: schema violation at line {line}, column {column}: {message}")]
    Schema { path: PathBuf, line: usize, column: usize, message: String },

    #[error("schema violation: `{key}` {message}")]
    Constraint { key: String, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("experiment `{experiment}` does not support dimension {dim}")]
    UnsupportedDimension { experiment: &'static str, dim: usize },

    #[error(transparent)]
    Core(#[from] MpError),

    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON output failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
