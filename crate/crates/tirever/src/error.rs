//! Crate-wide error type and result alias.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by series handling, estimation, and the Monte Carlo harness.
///
/// `Optimizer` and `Numerical` indicate a numeric failure on valid input; the
/// remaining variants indicate invalid input or configuration. The CLI maps the
/// former to exit code 3 and the latter to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of the numeric machinery (exit code 3 at the CLI);
    /// false for invalid input or configuration (exit code 2).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Optimizer(_) | Error::Numerical(_))
    }
}
