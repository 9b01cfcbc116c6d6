use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum KppError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure has zero total mass; the wave speed is undefined")]
    ZeroMass,

    #[error("no finite box exists: lambda^2/2 = {half_lambda_sq} >= c_lower - eps = {budget}")]
    InfeasibleBox { half_lambda_sq: f64, budget: f64 },

    #[error("particle cap {cap} exceeded at t = {time} ({count} particles)")]
    CapExceeded { cap: usize, time: f64, count: f64 },

    #[error("operation requires particle positions but the system is counts-only")]
    CountsOnly,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("front position undefined (no level crossing) at t = {0}")]
    MissingFront(f64),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = KppError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> KppError {
    KppError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
