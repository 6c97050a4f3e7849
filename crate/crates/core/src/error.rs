use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("ragged row at line {line}: expected {expected} values, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid weights: weights sum {sum}")]
    WeightSum { sum: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("problem too large for exact solve ({rows}x{cols} > {limit} entries); use the entropic solver")]
    SizeGuard {
        rows: usize,
        cols: usize,
        limit: usize,
    },
    #[error("covariance factorization failed even with jitter {jitter:e}")]
    Factorization { jitter: f64 },
    #[error("graph is disconnected: vertex {to} unreachable from vertex {from}")]
    Disconnected { from: usize, to: usize },
    #[error("malformed image: {0}")]
    Image(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
