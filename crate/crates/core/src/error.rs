//! Crate-wide error type.

use num_complex::Complex64;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "operating point is not an equilibrium: residual {residual:e} in state `{state}` \
         exceeds tolerance {tolerance:e}"
    )]
    NotAnEquilibrium {
        state: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("Newton iteration did not converge; final residual norm {residual:e}")]
    ConvergenceFailure { residual: f64 },

    #[error("system is not in deviation form: drift row `{state}` has constant term {value:e}")]
    NotDeviationForm { state: String, value: f64 },

    #[error("resolvent is singular near partial sum {partial_sum} (condition estimate {condition:e})")]
    PoleHit {
        partial_sum: Complex64,
        condition: f64,
    },

    #[error("polynomial is not separable: {0}")]
    NotSeparable(String),

    #[error("ambiguous root assignment; candidates: {candidates:?}")]
    AmbiguousRoots { candidates: Vec<Complex64> },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("plant has right-half-plane poles; unstable plants are not supported")]
    UnstablePlant,

    #[error(
        "controller is improper (numerator degree {num_deg} > denominator degree {den_deg}); \
         increase the filter order"
    )]
    ImproperController { num_deg: usize, den_deg: usize },

    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
