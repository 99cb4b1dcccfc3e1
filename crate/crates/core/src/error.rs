use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A linear solve hit a pivot below the singularity tolerance.
    #[error("singular matrix in {context}: pivot {pivot:.3e} below tolerance {tolerance:.3e}")]
    SingularMatrix {
        context: &'static str,
        pivot: f64,
        tolerance: f64,
    },

    /// Euler-summation partial sums failed to stabilize.
    #[error("laplace inversion did not stabilize at t={t}: |delta|={delta:.3e} > {tolerance:.3e}")]
    InversionDiverged { t: f64, delta: f64, tolerance: f64 },

    /// A uniformization or generator-build rate is below its admissible minimum.
    #[error("rate {rate} too small: must be at least {minimum}")]
    RateTooSmall { rate: f64, minimum: f64 },

    /// MAP parameter validation failed; the message names the violated invariant.
    #[error("invalid MAP parameters: {0}")]
    InvalidMap(String),

    /// Generator-matrix validation failed.
    #[error("invalid generator matrix: {0}")]
    InvalidGenerator(String),

    /// A query time fell outside a path's horizon.
    #[error("time {t} outside horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    /// A required arrival index was truncated by the family horizon.
    #[error("arrival {index} at level {level} beyond horizon (only {available} arrivals)")]
    IndexBeyondHorizon {
        level: usize,
        index: usize,
        available: usize,
    },

    /// Statistical estimation received no usable observations.
    #[error("no observations")]
    NoObservations,

    /// A correlation left [-1, 1] beyond the clipping tolerance.
    #[error("correlation {value} outside [-1, 1] beyond tolerance")]
    RangeViolation { value: f64 },

    /// Generic input validation failure.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
