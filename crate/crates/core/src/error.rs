use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: malformed line {line}: {reason}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("node id {id} out of range for a graph with {num_nodes} nodes")]
    NodeIdOutOfRange { id: usize, num_nodes: usize },
    #[error("self-loop on node {node} (line {line})")]
    SelfLoop { node: usize, line: usize },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("sensitive attribute of node {node} is {value}, expected 0 or 1")]
    NonBinarySensitive { node: usize, value: i64 },
    #[error("checksum mismatch for {file}")]
    ChecksumMismatch { file: String },

    #[error("split fractions must be positive and sum to 1, got {0:?}")]
    FractionSumInvalid([f64; 3]),
    #[error("class {class} has {count} nodes, too few for a stratified three-way split")]
    ClassTooSmall { class: usize, count: usize },
    #[error("split `{0}` would be empty")]
    EmptySplit(&'static str),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("node {0} has no neighbors")]
    NoNeighbors(usize),
    #[error("walk corpus is empty")]
    EmptyCorpus,

    #[error("cannot form {k} clusters from {n} points")]
    KTooLarge { k: usize, n: usize },

    #[error("training split is empty")]
    EmptyTrainingSplit,

    #[error("loss mask is empty")]
    EmptyMask,

    #[error("metric scope is empty")]
    EmptyScope,
    #[error("scope contains a single class, AUC is undefined")]
    SingleClassScope,
    #[error("sensitive group {0} missing from scope")]
    MissingGroup(u8),
    #[error("sensitive group {0} has no positive labels in scope")]
    MissingPositives(u8),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Internal,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            ConfigInvalid(_) | FractionSumInvalid(_) | KTooLarge { .. } => ErrorCategory::Config,
            MalformedLine { .. }
            | NodeIdOutOfRange { .. }
            | SelfLoop { .. }
            | DimensionMismatch { .. }
            | NonBinarySensitive { .. }
            | ChecksumMismatch { .. }
            | ClassTooSmall { .. }
            | EmptySplit(_)
            | EmptyCorpus
            | EmptyTrainingSplit
            | EmptyMask
            | EmptyScope
            | SingleClassScope
            | MissingGroup(_)
            | MissingPositives(_)
            | Io(_)
            | Json(_) => ErrorCategory::Data,
            NoNeighbors(_) => ErrorCategory::Internal,
        }
    }
}
