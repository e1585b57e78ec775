use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample has {got} features, expected at least {expected}")]
    FeatureCount { expected: usize, got: usize },

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("only {available} distinct rules available, {requested} requested")]
    NotEnoughRules { requested: usize, available: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
