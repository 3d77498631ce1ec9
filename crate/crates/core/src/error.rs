use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot fit {k} centroids to {samples} samples")]
    TooFewSamples { k: usize, samples: usize },

    #[error("non-finite coordinate in sample {index}")]
    NonFinite { index: usize },

    #[error("k too small for admissible truncation point: a* = {a_star} exceeds a0 = {a0}")]
    Inadmissible { a_star: f64, a0: f64 },

    #[error("quadrature did not converge: estimate {estimate}, residual {residual}")]
    Quadrature { estimate: f64, residual: f64 },

    #[error("grid too deep for trial budget: {usable} usable grid points, need at least {required}")]
    GridTooDeep { usable: usize, required: usize },

    #[error("log-log fit needs at least {required} points in range, got {got}")]
    TooFewPoints { got: usize, required: usize },

    #[error("non-positive value {value} at k = {k} in log-log fit")]
    NonPositiveValue { k: f64, value: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed results CSV at row {row}: {reason}")]
    MalformedCsv { row: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub(crate) fn check(cond: bool, name: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.into(),
        })
    }
}
