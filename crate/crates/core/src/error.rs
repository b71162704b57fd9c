use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: duplicate record id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("record {id:?}: {field} sequence is empty")]
    EmptySequence { id: String, field: &'static str },

    #[error("record {id:?}: invalid chord token {token:?}")]
    InvalidToken { id: String, token: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("record {id:?} has {len} chords, fewer than the {needed} requested")]
    SegmentTooShort { id: String, len: usize, needed: usize },

    #[error("unknown chord token {0:?}")]
    UnknownToken(String),

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("cannot draw negatives for node {target}: no candidate remains after exclusion")]
    NoNegativeCandidates { target: usize },

    #[error("training diverged at epoch {epoch}: mean loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("node {node} has non-positive neighbour weight sum {sum}")]
    NonPositiveWeightSum { node: usize, sum: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that arise while computing rather than from bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::NonPositiveWeightSum { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
