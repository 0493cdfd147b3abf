use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema violation; the message carries the line number.
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] loewner_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("bad --tol `{0}`: expected name=value with a positive number")]
    TolSyntax(String),

    #[error("unknown tolerance `{name}` for {command}; known: {known}")]
    UnknownTol {
        name: String,
        command: String,
        known: String,
    },

    #[error("BL_THREADS: {0}")]
    Threads(String),
}

pub type CliResult<T> = Result<T, CliError>;
