use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown action '{action}' at {path}:{line}")]
    UnknownAction {
        path: PathBuf,
        line: usize,
        action: String,
    },

    #[error("entity '{name}' is a {existing} but was used as a {requested}")]
    KindConflict {
        name: String,
        existing: String,
        requested: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("{0}")]
    Numeric(String),

    #[error("entity {0} has no neighbors in the graph")]
    IsolatedSeed(u32),

    #[error("unknown {kind}: {id}")]
    Unknown { kind: &'static str, id: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite {component} loss at {at}")]
    NonFiniteLoss { component: &'static str, at: String },

    #[error("corrupt {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable code for the error family.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::UnknownAction { .. } => "unknown-action",
            Error::KindConflict { .. } => "kind-conflict",
            Error::Config(_) => "config",
            Error::Shape { .. } => "shape",
            Error::Numeric(_) => "numeric",
            Error::IsolatedSeed(_) => "isolated-seed",
            Error::Unknown { .. } => "unknown",
            Error::Empty(_) => "empty",
            Error::NonFiniteLoss { .. } => "non-finite",
            Error::Format { .. } => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
