use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps these onto exit codes: input/parse problems are usage errors
/// (exit 1), solver and numerical problems are numerical failures (exit 2).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed user input rather than by the
    /// numerics themselves.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Parse(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
