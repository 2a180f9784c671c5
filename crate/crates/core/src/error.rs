use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("mask has no observed entries")]
    FullyMissing,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("propensity {value} at ({row}, {col}) lies outside [0, 1]")]
    PropensityOutOfRange { row: usize, col: usize, value: f64 },
    #[error("intercept calibration failed: target {target} unreachable in [{lo}, {hi}]")]
    CalibrationFailed { target: f64, lo: f64, hi: f64 },
    #[error("pattern `{pattern}` produced a degenerate mask after {attempts} attempts")]
    ResampleExhausted { pattern: String, attempts: usize },
    #[error("unknown tag `{0}`")]
    UnknownTag(String),
    #[error("linear system is singular; retry with a positive ridge penalty")]
    Singular,
    #[error("missing index set is empty")]
    EmptyOmega,
    #[error("need at least {needed} methods, got {got}")]
    TooFewMethods { needed: usize, got: usize },
    #[error("{method} produced no fitted values at observed cells")]
    MissingFitted { method: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("loss probe failed for pattern `{pattern}`: {reason}")]
    ProbeFailed { pattern: String, reason: String },
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("dataset `{name}` has pre-existing missing cells at {cells:?}")]
    PreexistingMissing {
        name: String,
        cells: Vec<(usize, usize)>,
    },
    #[error("report contains no groups")]
    EmptyReport,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
