use thiserror::Error;

use crate::engine::StepTrace;

pub type Result<T, E = PbssError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PbssError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mixing matrix is singular")]
    SingularMixing,

    #[error("current {current_ma} mA on ring {ring} is outside [{min_ma}, {max_ma}] mA")]
    CurrentOutOfRange {
        ring: usize,
        current_ma: f64,
        min_ma: f64,
        max_ma: f64,
    },

    #[error("ring has no zero-weight current (a = {a} must be < 1)")]
    NoZeroCrossing { a: f64 },

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("sampling plan invalid: {0}")]
    InvalidPlan(String),

    #[error("optimizer start point is invalid: {0}")]
    InvalidStart(String),

    #[error("sphere domain is over-constrained: {constraints} constraints in {dim} dimensions")]
    OverConstrained { constraints: usize, dim: usize },

    #[error("whitening matrix is singular: {0}")]
    SingularWhitening(String),

    #[error("pbss step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<PbssError>,
        traces: Vec<StepTrace>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PbssError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        PbssError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
