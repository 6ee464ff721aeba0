use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TdError {
    #[error("pooled variance is zero; the t statistic is undefined")]
    DegenerateVariance,

    #[error("invalid grouping: {0}")]
    InvalidGroups(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot split samples for the adaptive procedure: need at least {min_n2} cases and controls in each part, have n1 = {n1}, n0 = {n0}")]
    InvalidSplit { n1: usize, n0: usize, min_n2: usize },

    #[error("dataset has no usable rows")]
    EmptyDataset,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl TdError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TdError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, TdError>;
