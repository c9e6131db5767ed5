use thiserror::Error;

/// Errors raised by codes, constructions and the analytics layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("expected {expected} symbols, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("node position {position} out of range 1..={n}")]
    PositionOutOfRange { position: usize, n: usize },

    #[error("node position {0} given more than once")]
    DuplicatePosition(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid helper set: {0}")]
    InvalidHelpers(String),

    #[error("construction too large: {0}")]
    Capacity(String),

    #[error("singular decoding matrix")]
    Singular,

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
