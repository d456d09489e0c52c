use std::io;

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("corrupt file at byte offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no tokens in input text")]
    NoTokens,

    #[error("zero-norm vector")]
    ZeroVector,

    #[error(
        "graph too sink-heavy: no {steps}-step forward walk found after {retries} start retries"
    )]
    SinkHeavy { steps: usize, retries: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("training diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("no start nodes for query")]
    NoStartNodes,

    #[error("mismatched embedder: checkpoint was trained with config hash {expected:#018x}, got {found:#018x}")]
    EmbedderMismatch { expected: u64, found: u64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn corrupt(offset: u64, reason: impl Into<String>) -> Self {
        Error::Corrupt {
            offset,
            reason: reason.into(),
        }
    }
}
