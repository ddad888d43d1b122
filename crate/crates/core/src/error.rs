use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two points are too close for the range-bearing model to be linearized.
    #[error("degenerate geometry: distance {distance} m is below {min} m")]
    DegenerateGeometry { distance: f64, min: f64 },

    /// Innovation covariance is singular or too badly conditioned to invert.
    #[error("numerical degeneracy: innovation covariance condition number {condition:e}")]
    NumericalDegeneracy { condition: f64 },

    /// Configuration failed validation; every violated invariant is listed.
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
