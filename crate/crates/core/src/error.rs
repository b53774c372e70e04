use thiserror::Error;

/// Failures of the estimation, evolution, filtering and prediction routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("target is {rho:e} m from the curvature center; radius is degenerate")]
    DegenerateRadius { rho: f64 },

    #[error("timestamp {t} is not after the previous timestamp {last}")]
    NonMonotoneTime { t: f64, last: f64 },

    #[error("need at least {needed} samples, have {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("all position increments are below the degeneracy threshold")]
    DegenerateIncrements,

    #[error("sampling interval varies by {jitter:.3e} relative, exceeding the allowed 1%")]
    NonUniformSampling { jitter: f64 },

    #[error("bad covariance: {0}")]
    BadCovariance(String),

    #[error("filter used before initialization")]
    NotInitialized,

    #[error("innovation covariance R + P is singular")]
    SingularInnovation,

    #[error("measurement time {measurement_t} does not match filter time {filter_t}")]
    TimeMismatch { measurement_t: f64, filter_t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value produced: {0}")]
    NonFinite(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
