use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Validation failures (bad shapes, parameters, lookups) are distinguished
/// from numerical failures (singular elements, systems that are not frames)
/// so front ends can map them onto different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("coefficient sequence is not supported on the expected lattice")]
    LatticeMismatch,

    #[error("weight table has no entry for ({0}, {1})")]
    Lookup(i64, i64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("element is not invertible (smallest singular value {smallest_singular_value:e})")]
    NotInvertible { smallest_singular_value: f64 },

    #[error("system is not a frame (lower frame bound {lower_bound:e})")]
    NotAFrame { lower_bound: f64 },
}

impl Error {
    /// True for failures caused by the numbers rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotInvertible { .. } | Error::NotAFrame { .. })
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
