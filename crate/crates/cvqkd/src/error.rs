use thiserror::Error;

/// Errors surfaced by the simulation pipeline.
///
/// Precondition violations are `InvalidArgument`; everything else maps to a
/// stage of the link that can legitimately fail on bad data.
#[derive(Debug, Error)]
pub enum CvqkdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("band plan violation: {0}")]
    BandPlan(String),

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("synchronization failed: peak-to-sidelobe ratio {psr:.2} below {threshold:.1}")]
    SyncFailure { psr: f64, threshold: f64 },

    #[error("pilot tone below usable SNR: estimated pilot power {pilot_power:.3e} vs noise floor {noise_floor:.3e}")]
    LowSnrPilot { pilot_power: f64, noise_floor: f64 },

    #[error("phase tracker diverged: {0}")]
    UkfDivergence(String),

    #[error("unphysical parameter combination: {0}")]
    Unphysical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CvqkdError>;

impl CvqkdError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CvqkdError::InvalidArgument(msg.into())
    }
}
