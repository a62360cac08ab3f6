use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported matrix market header: {0}")]
    UnsupportedFormat(String),

    #[error("dimension overflow: {rows}x{cols} does not fit in memory")]
    DimensionOverflow { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{context}: matrix is singular to working precision (condition estimate {condition:e})")]
    Singular { context: String, condition: f64 },

    #[error("{0} is rank deficient")]
    RankDeficient(String),

    #[error("input basis is not orthonormal: ||Q^T Q - I||_F = {deviation:e} exceeds {tolerance:e}")]
    NotOrthonormal { deviation: f64, tolerance: f64 },

    #[error("SVD failed to converge on a {rows}x{cols} matrix")]
    NoConvergence { rows: usize, cols: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
