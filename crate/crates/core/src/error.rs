use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Integrity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: required column `{column}` is missing")]
    MissingColumn { path: String, column: String },

    #[error("{path}: malformed row {row}: {reason}")]
    MalformedRow { path: String, row: u64, reason: String },

    #[error("{path}: row {row}: bad timestamp `{value}` in `{column}`")]
    BadTimestamp { path: String, row: u64, column: String, value: String },

    #[error("duplicate {key_name} {key}")]
    DuplicateKey { key_name: &'static str, key: i64 },

    #[error("unknown ICD version {0}")]
    UnknownVersion(u8),

    #[error("value {value} of `{variable}` falls outside every band of {score}")]
    NoBand { score: String, variable: String, value: f64 },

    #[error("triage acuity {0} outside 1..=5")]
    BadAcuity(i64),

    #[error("variable `{0}` has no observed training values")]
    AllMissingColumn(String),

    #[error("non-finite loss while training {model} at iteration {iteration}")]
    NonFiniteLoss { model: &'static str, iteration: usize },

    #[error("feature manifest mismatch: model expects {expected}, got {actual}")]
    ManifestMismatch { expected: String, actual: String },

    #[error("operation needs a random forest model, got {0}")]
    WrongKind(String),

    #[error("metric needs both classes present")]
    OneClassOnly,

    #[error("metric needs at least one positive label")]
    NoPositives,

    #[error("bootstrap could not draw {wanted} usable resamples in {attempts} attempts")]
    ResampleExhausted { wanted: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Io { .. } => ErrorCategory::Config,
            Error::DuplicateKey { .. } | Error::Integrity(_) | Error::ManifestMismatch { .. } => {
                ErrorCategory::Integrity
            }
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
