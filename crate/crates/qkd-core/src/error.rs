use thiserror::Error;

/// Errors reported by every module of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid bit character {0:?} (expected '0' or '1')")]
    InvalidBit(char),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exhaustive evaluation: {0}")]
    TooLarge(String),

    #[error("zero-probability conditioning branch: {0}")]
    ZeroProbability(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("attack operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
