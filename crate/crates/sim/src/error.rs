use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("schema error at `{path}`: {reason}")]
    Schema { path: String, reason: String },
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{module}: {message}")]
    Planner { module: &'static str, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl SimError {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn planner(module: &'static str, err: impl std::fmt::Display) -> Self {
        Self::Planner {
            module,
            message: err.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SimError::Schema { .. } => "schema",
            SimError::MissingFile(_) => "missing_file",
            SimError::Invalid { .. } => "invalid",
            SimError::Planner { .. } => "planner",
            SimError::Io(_) => "io",
        }
    }

    /// Process exit code: 2 for scenario problems, 1 for run failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Schema { .. } | SimError::MissingFile(_) | SimError::Invalid { .. } => 2,
            SimError::Planner { .. } | SimError::Io(_) => 1,
        }
    }

    pub fn block(&self) -> ErrorBlock {
        ErrorBlock {
            kind: self.kind(),
            module: match self {
                SimError::Planner { module, .. } => Some(module),
                _ => None,
            },
            path: match self {
                SimError::Schema { path, .. } => Some(path.clone()),
                SimError::Invalid { field, .. } => Some(field.clone()),
                SimError::MissingFile(p) => Some(p.display().to_string()),
                _ => None,
            },
            message: self.to_string(),
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

/// Machine-readable error record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBlock {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub module: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}
