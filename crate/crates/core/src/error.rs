use thiserror::Error;

use crate::data::ParseError;
use crate::theory::Regime;

/// Errors raised by the library. Censoring of SGD runs is never an error;
/// it is reported in the run result instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires the {expected:?} regime but the model is in the {found:?} regime")]
    RegimeMismatch { expected: Regime, found: Regime },

    #[error("theta {0} the target set")]
    TargetSet(&'static str),

    #[error("class {0} absent from the centering sample after resampling")]
    MissingClass(u8),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
