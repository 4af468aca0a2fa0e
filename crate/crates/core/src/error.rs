use thiserror::Error;

/// Errors raised by the laboratory's models, statistics and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("parameter entry {index} = {value} lies outside the compact set [{lo}, {hi}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("statistic is not invariant under the sampled group elements")]
    NotInvariant,

    #[error("{reps} replicates are too few for an upper {level} quantile (need reps * level >= 20)")]
    TooFewReplicates { reps: usize, level: f64 },

    #[error("exhaustive permutation averaging supports n <= 8, got n = {0}")]
    TooLargeForExhaustive(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
