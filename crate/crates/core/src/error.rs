//! Shared error type for the core library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value range is degenerate: {0}")]
    DegenerateRange(String),

    #[error("window out of bounds: {0}")]
    Range(String),

    #[error("ingestion error: {0}")]
    Ingest(String),

    #[error("dataset too small: {0}")]
    Size(String),

    #[error("codec error: {0}")]
    Codec(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("experiment plan error: {0}")]
    Plan(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("hdf5 error: {0}")]
    Hdf5(#[from] hdf5::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
