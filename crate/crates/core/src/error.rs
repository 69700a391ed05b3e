use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid modulation order {0}: must be an even power of two >= 4")]
    InvalidModulation(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("value {0} is not a constellation point")]
    NotAConstellationPoint(String),
    #[error("matrix has no nonzero entry")]
    AllZeroMatrix,
    #[error("off-diagonal quantization range is degenerate")]
    NoOffDiagonalEntries,
    #[error("quantization plan mismatch: {0}")]
    PlanMismatch(String),
    #[error("problem size {n} exceeds exhaustive limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("empty sample set")]
    EmptySample,
    #[error("linear system is singular")]
    SingularSystem,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
