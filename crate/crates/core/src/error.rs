use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: value {value:?} is not in the domain of attribute {attribute:?}")]
    Domain {
        row: usize,
        attribute: String,
        value: String,
    },

    #[error("attribute {attribute:?}: value {value:?} falls outside every bin")]
    Binning { attribute: String, value: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("individuals are not comparable: {left} vs {right} attributes")]
    Comparability { left: usize, right: usize },

    #[error("pool holds {available} candidate neighbors but k = {k}")]
    InsufficientPool { available: usize, k: usize },

    #[error("training set contains a single class ({0})")]
    DegenerateTraining(String),

    #[error("missing attribute {0:?}")]
    MissingAttribute(String),

    #[error("label coverage: {0}")]
    Coverage(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("queried individual is classified {found}, but the audit targets {expected} classifications")]
    PolarityMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("no convergence after {iterations} iterations (last step moved {last_delta:e})")]
    NonConvergence {
        iterations: usize,
        last_delta: f64,
        last: Vec<f64>,
    },

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
