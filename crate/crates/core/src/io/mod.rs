//! Run configuration, IDX ingestion and result persistence.

pub mod commands;
pub mod config;
pub mod idx;
pub mod results;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("IDX: {0}")]
    Idx(String),
    #[error("{}: {source}", path.display())]
    Path { path: PathBuf, source: std::io::Error },
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config key `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("serialization: {0}")]
    Serialize(String),
}
