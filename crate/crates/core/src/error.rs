use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name}_{index} is zero; off-diagonal coefficients must be nonzero")]
    ZeroCoefficient { name: &'static str, index: usize },

    #[error("malformed tail: {0}")]
    MalformedTail(String),

    #[error("coefficient index {index} is beyond the explicit list (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operator spec has no tail rule, so no norm bound can be certified")]
    UnboundedSpec,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gamma recovery is ill-conditioned (window weight {weight:e})")]
    IllConditionedGamma { weight: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("moment sequence is degenerate at level {level}")]
    Degenerate { level: usize, partial_b: Vec<[f64; 2]> },

    #[error("finite section is singular at pivot {pivot}")]
    SingularTruncation { pivot: usize },

    #[error("invalid scan region: {0}")]
    InvalidRegion(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
