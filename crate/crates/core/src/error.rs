use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("{0}")]
    Usage(String),

    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape { op: &'static str, expected: String, got: String },

    /// Too few frames to emit the label sequence under CTC.
    #[error("infeasible alignment: {frames} frames cannot carry {labels} labels ({required} frames required)")]
    Infeasible { frames: usize, labels: usize, required: usize },

    #[error("{0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Ingest(String),

    #[error("{0}")]
    Checkpoint(String),

    #[error("non-finite loss {loss} at {context}")]
    NonFinite { loss: f64, context: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Shape { .. } => "shape",
            Error::Infeasible { .. } => "infeasible",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Ingest(_) => "ingest",
            Error::Checkpoint(_) => "checkpoint",
            Error::NonFinite { .. } => "non-finite",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
