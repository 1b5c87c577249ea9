use thiserror::Error;

/// Errors raised by model construction, lattice sizing and pricing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model family has no jump component")]
    NoJumpComponent,

    #[error("Levy density is singular at z = {0}")]
    SingularPoint(f64),

    #[error("invalid jump truncation level {0} (must be > 0)")]
    InvalidTruncation(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A stability, positivity or sizing constraint of the lattice is violated.
    #[error("grid infeasible: constraint `{constraint}` violated ({detail})")]
    GridInfeasible {
        constraint: &'static str,
        detail: String,
    },

    #[error("value surfaces were computed on different grids")]
    GridMismatch,

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn infeasible(constraint: &'static str, detail: impl Into<String>) -> Self {
        Error::GridInfeasible {
            constraint,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
