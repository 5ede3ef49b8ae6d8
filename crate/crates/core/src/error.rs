//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape bugs fail fast instead of broadcasting.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Invalid parameter or step-size configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A solver variant was asked to handle a problem outside its contract.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An iterate picked up a non-finite entry.
    #[error("diverged at iteration {iteration}: non-finite {what}")]
    Diverged { iteration: usize, what: &'static str },

    /// Malformed PGM input; `offset` is the byte position of the problem.
    #[error("PGM parse error at byte {offset}: {msg}")]
    PgmParse { offset: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            what,
            expected,
            got,
        }
    }
}
