//! The `roomsmith` command line and HTTP service.

pub mod commands;
pub mod config;
pub mod remote;
pub mod server;

use roomsmith::compose::ComposeError;
use roomsmith::retrieval::RetrievalError;

pub use config::{RunConfig, Services};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => commands::EXIT_CONFIG,
            _ => commands::EXIT_ERROR,
        }
    }
}
