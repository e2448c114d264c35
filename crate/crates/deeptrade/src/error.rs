//! Crate-wide error type.
//!
//! Errors are grouped into the classes the CLI maps to exit codes:
//! configuration (2), data (3) and numeric (4).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // --- configuration ---
    #[error("invalid configuration: {0}")]
    Config(String),

    // --- data ---
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: no data rows")]
    NoData { path: String },
    #[error("{path}:{line}: unparseable row: {reason}")]
    ParseRow {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: duplicate date {date}")]
    DuplicateDate { path: String, date: String },
    #[error("{path}: dates are not monotone (row {line})")]
    NonMonotoneDates { path: String, line: usize },
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("date misalignment between predicted and traded series: {0}")]
    DateMisalignment(String),

    // --- numeric ---
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("training diverged; last finite iteration {last_finite_iteration}")]
    Divergence { last_finite_iteration: usize },
    #[error("estimation failed: {0}")]
    Estimation(String),
}

impl Error {
    /// Process exit code contract: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. }
            | Error::NoData { .. }
            | Error::ParseRow { .. }
            | Error::DuplicateDate { .. }
            | Error::NonMonotoneDates { .. }
            | Error::InsufficientHistory(_)
            | Error::InsufficientData(_)
            | Error::DateMisalignment(_) => 3,
            Error::ShapeMismatch(_)
            | Error::NonFinite(_)
            | Error::Divergence { .. }
            | Error::Estimation(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
