use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("rejected input: {0}")]
    Input(String),
    #[error("grid mismatch: {0}")]
    Structure(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
