use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a path needs at least one step")]
    EmptyPath,

    #[error("leg {index} has zero length")]
    ZeroLengthLeg { index: usize },

    #[error("legs {index} and {next} point the same way", next = index + 1)]
    NonAlternatingLegs { index: usize },

    #[error("invalid path character {found:?} at position {position} (expected '+' or '-')")]
    ParsePath { position: usize, found: char },

    /// An enumeration-backed operation was asked for more than it can afford.
    #[error("{what}: {requested} exceeds the enumeration limit of {limit}")]
    Guard {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("paths are not orthogonal twins")]
    NotTwins,

    #[error("cannot merge lattices from different configurations")]
    ConfigMismatch,

    #[error("slice t={t} is outside 1..={max}")]
    SliceOutOfRange { t: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
