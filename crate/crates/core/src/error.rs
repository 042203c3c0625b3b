use thiserror::Error;

/// Malformed text input (grid specs, chain files, boundary files, configs).
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error: {message}")]
pub struct ParseError {
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cell count {count} exceeds the limit {limit}")]
    CellLimit { count: u64, limit: u64 },

    #[error("cell {0} is not in the complex")]
    UnknownCell(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0}")]
    Contract(String),

    #[error("not a cycle: boundary is nonzero on {} cells, e.g. {}", offending.len(), offending.first().map(String::as_str).unwrap_or("?"))]
    NotACycle { offending: Vec<String> },

    #[error("degenerate boundary: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("LP certification failed: {0}")]
    Certification(String),

    #[error("region verification failed: {0}")]
    RegionVerification(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
