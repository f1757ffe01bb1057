use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}:{line}:{column}: at `{path}`: {message}")]
    Schema { origin: String, path: String, line: usize, column: usize, message: String },

    /// A well-formed config whose contents do not resolve (unknown names,
    /// invalid parameters).
    #[error("at `{path}`: {message}")]
    Invalid { path: String, message: String },

    #[error("cannot read config {}: {message}", path.display())]
    Unreadable { path: PathBuf, message: String },

    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },

    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Invalid { .. } | CliError::Unreadable { .. } => EXIT_CONFIG,
            CliError::Output { .. } | CliError::Pool(_) => EXIT_RUNTIME,
        }
    }

    pub(crate) fn invalid(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        CliError::Invalid { path: path.into(), message: message.to_string() }
    }
}
