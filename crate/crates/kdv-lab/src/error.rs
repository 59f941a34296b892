use kdv_core::KdvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] KdvError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{excluded} of {paths} paths excluded, above the 1% cap (first: {first})")]
    TooManyExclusions { excluded: usize, paths: u64, first: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
