use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("vector is not normalized (intensity {intensity})")]
    NotNormalized { intensity: f64 },

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("parameter `{name}` = {value} outside {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("fidelity undefined: both analyzed intensities are zero")]
    UndefinedFidelity,

    #[error("incident intensity must be positive, got {0}")]
    NonPositiveIncident(f64),

    #[error("trigger times not strictly increasing at index {index}")]
    TriggersNotIncreasing { index: usize },

    #[error("jitter produced non-increasing trigger times at index {index}")]
    JitterCollision { index: usize },

    #[error("calibration failed: {reason}; residuals {residuals:?}")]
    CalibrationFailed {
        reason: String,
        residuals: Vec<(String, f64)>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
