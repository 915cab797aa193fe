use std::io;

use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps these onto exit codes: configuration and I/O problems exit
/// with 1, violated frame or theorem hypotheses exit with 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("not a frame: lower bound {lower:e} is numerically zero against upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },

    #[error("misuse: {0}")]
    Misuse(String),

    /// A hypothesis of the stability/Lipschitz guarantees does not hold
    /// (upper frame bound above one, inadmissible deformation, ...).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures caused by violated mathematical hypotheses rather
    /// than bad input files or parameters.
    pub fn is_hypothesis(&self) -> bool {
        matches!(self, Error::NotAFrame { .. } | Error::Hypothesis(_))
    }
}
