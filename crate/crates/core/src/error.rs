use std::path::PathBuf;

use crate::calibrator::CalibrationTrace;

/// Errors produced by solvers, the calibrator, and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("exact matching solver supports at most {limit} nodes, got {nodes}")]
    TooManyNodes { nodes: usize, limit: usize },

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("fixed set of rule `{rule_id}` is infeasible for problem {problem}")]
    InfeasibleFixedSet { rule_id: String, problem: String },

    #[error("rule `{rule_id}` is not applicable to problem {problem}")]
    UnsupportedRule { rule_id: String, problem: String },

    #[error("duplicate rule id `{id}` in rule family")]
    DuplicateRuleId { id: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "exact-mode calibration did not converge within {t_max} iterations; \
         this contradicts the iteration bound and indicates a misconfigured cap or a bug"
    )]
    ExactModeStalled {
        t_max: usize,
        trace: Box<CalibrationTrace>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
