use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: parse error at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{context}: {source}")]
    Runtime {
        context: String,
        #[source]
        source: collapse_lab::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Validation {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn runtime(context: impl Into<String>) -> impl FnOnce(collapse_lab::Error) -> Self {
        let context = context.into();
        move |source| Self::Runtime { context, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// 2 for anything wrong with the config, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse { .. } | Self::Validation { .. } => 2,
            Self::Runtime { .. } | Self::Io { .. } | Self::Output(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
