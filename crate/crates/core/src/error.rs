use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not a separation: {0}")]
    NotASeparation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("refused: {0}")]
    Refusal(String),
    #[error("structural error: {0}")]
    Structure(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("soundness failure: {0}")]
    Soundness(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
