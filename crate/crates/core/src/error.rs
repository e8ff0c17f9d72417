use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller violated a documented precondition.
    #[error("usage error: {0}")]
    Usage(String),
    /// The growth bound is not negative, so the distinguished evolution
    /// system of measures does not exist.
    #[error("no entrance law: growth bound estimate {omega0} is not negative")]
    NoEntranceLaw { omega0: f64 },
    /// A matrix that must be invertible (or positive definite) is not.
    #[error("singular matrix: {0}")]
    Singular(String),
    /// The observable variant has no closed form for the requested action.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Requested truncation is numerically ill conditioned.
    #[error("ill conditioned: {0}")]
    IllConditioned(String),
    /// Quadrature did not converge under order doubling.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    /// An internal consistency check failed.
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
