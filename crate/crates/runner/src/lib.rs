//! Parallel evaluation, the session server and the `uavnh` command line.

pub mod cli;
pub mod run;
pub mod server;
pub mod store;

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("manifest contains no episodes")]
    EmptyManifest,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("metrics: {0}")]
    Metrics(String),
    #[error("{0}")]
    Failed(String),
}

impl RunError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        RunError::Io(format!("{}: {e}", path.display()))
    }
}
