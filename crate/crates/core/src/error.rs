use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A primitive, transform or configuration value is out of its domain.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("size error: requested {requested} of {available} available ({what})")]
    Size {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("generation failed for program seed {seed:#018x}: {reason}")]
    Degenerate { seed: u64, reason: String },

    #[error("generation failed for shape {shape_index} after {attempts} attempts: {reason}")]
    Generation {
        shape_index: u64,
        attempts: u32,
        reason: String,
    },

    #[error("corrupt file {}: {reason}", path.display())]
    Corruption { path: PathBuf, reason: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Corruption {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line surface: 2 for configuration
    /// and parameter errors, 3 for I/O and corruption, 4 for generation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Validation(_) | Error::Size { .. } => 2,
            Error::Corruption { .. } | Error::Io { .. } | Error::Json { .. } => 3,
            Error::Degenerate { .. } | Error::Generation { .. } => 4,
        }
    }
}
