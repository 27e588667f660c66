use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported parameters: {0}")]
    Parameter(String),
    #[error("degenerate element: |det J| = {det:e} below tolerance {tol:e}")]
    DegenerateElement { det: f64, tol: f64 },
    #[error("degenerate cell {cell}: {source}")]
    DegenerateCell { cell: usize, source: Box<Error> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("tensor kind mismatch: expected {expected}, got {got}")]
    KindMismatch { expected: &'static str, got: &'static str },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("unknown backend `{0}`")]
    UnknownBackend(String),
    #[error("malformed document: {0}")]
    Format(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
