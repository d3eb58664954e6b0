use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller supplied arguments outside the documented domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// A numerical routine could not reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The request is well-formed but outside the regime the estimator is
    /// allowed to answer for.
    #[error("refused: {0}")]
    Refused(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
