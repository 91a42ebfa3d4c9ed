use thiserror::Error;

use crate::Q;

/// Errors raised across the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("weight {weight} leaves the truncation window")]
    OutOfWindow { weight: Q },

    #[error("level block at weight {weight} has an eigenvalue other than the level weight")]
    NotGeneralizedEigen { weight: Q },

    #[error("missing action: {0}")]
    MissingAction(String),

    #[error("search bound {0} exceeded")]
    BoundExceeded(usize),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("axiom violation: {0}")]
    AxiomViolation(String),

    #[error("relation violated: {0}")]
    RelationViolated(String),

    #[error("family is not L(-1)-nilpotent within bound {0}")]
    NotNilpotent(usize),

    #[error("invalid donor data: {0}")]
    InvalidDonor(String),

    #[error("mode does not commute with the action: {0}")]
    NonCommutingMode(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }
}
