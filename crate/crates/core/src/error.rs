use thiserror::Error;

/// Errors raised by the simulator, the learners and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// Aggregated validation failures, one entry per offending field path.
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("action {index} is not in the feasible action list (size {count})")]
    InvalidAction { index: usize, count: usize },

    #[error("training diverged at episode {episode}, step {step}: {reason}")]
    Diverged {
        episode: usize,
        step: usize,
        reason: String,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("unknown {what}: {name}")]
    Unknown { what: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::Infeasible(_) => "infeasible",
            Error::InvalidAction { .. } => "invalid_action",
            Error::Diverged { .. } => "diverged",
            Error::Calibration(_) => "calibration",
            Error::Checkpoint(_) => "checkpoint",
            Error::Unknown { .. } => "unknown",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
