use thiserror::Error;

use crate::mpc::AxisFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient vertical authority: vertical thrust share {available} cannot hold hover against g = {gravity}")]
    InsufficientVerticalAuthority { available: f64, gravity: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("hessian is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("vehicle is at the loiter circle center; intercept selection undefined")]
    DegenerateCenter,

    #[error("path sampling too coarse: chord {chord} exceeds lookahead/4 = {limit}")]
    SamplingTooCoarse { chord: f64, limit: f64 },

    #[error("controller step failed: {}", describe_failures(.0))]
    ControllerFailed(Vec<AxisFailure>),
}

fn describe_failures(failures: &[AxisFailure]) -> String {
    failures
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
