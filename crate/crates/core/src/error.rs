use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("sweep error: {0}")]
    Sweep(String),

    #[error("inference error: {0}")]
    Inference(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn fit(msg: impl Into<String>) -> Self {
        Error::Fit(msg.into())
    }
}
