use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown attribute type `{kind}` for attribute `{name}` (line {line})")]
    UnknownAttributeType {
        name: String,
        kind: String,
        line: usize,
    },

    #[error("label attribute `{0}` does not have a binary {{0,1}} domain")]
    NonBinaryLabel(String),

    #[error("label `{0}` listed in the label specification is not declared in the data header")]
    MissingLabel(String),

    #[error("invalid label specification: {0}")]
    LabelSpec(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("the target column is also one of the conditioning columns")]
    TargetInConditions,

    #[error("graph contains a directed cycle")]
    Cycle,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid label order: {0}")]
    InvalidOrder(String),

    #[error("feature arity mismatch: model expects {expected} inputs, got {actual}")]
    ArityMismatch { expected: usize, actual: usize },

    #[error("non-finite value in features")]
    NonFinite,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown method `{0}` (expected one of br, cc_random, ecc, bncc)")]
    UnknownMethod(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
