use thiserror::Error;

/// Coarse error category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },
    #[error("empty sequence: {0}")]
    EmptySequence(String),
    #[error("no blockage: {0}")]
    NoBlockage(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("stale forward cache: {0}")]
    StaleCache(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Numeric(_) => ErrorKind::Numeric,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
