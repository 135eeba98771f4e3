// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, mapped one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {msg}")]
    MalformedRecord { path: PathBuf, line: usize, msg: String },

    #[error("{context}: {msg}")]
    InvalidCorpus { context: String, msg: String },

    #[error("{path}: {msg}")]
    AttentionFormat { path: PathBuf, msg: String },

    #[error("attention store {path}: {msg}")]
    Store { path: PathBuf, msg: String },

    #[error("missing attention record for {} document(s): {}", .0.len(), .0.join(", "))]
    MissingAttention(Vec<String>),

    #[error("document {doc_id}: every subword is a special token")]
    NoWords { doc_id: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("head index (l={layer}, h={head}) out of range for L={num_layers}, H={num_heads}")]
    HeadOutOfRange {
        layer: usize,
        head: i32,
        num_layers: usize,
        num_heads: usize,
    },

    #[error("word index {index} out of range for {len} words")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("document {doc_id}: zero attention column for to-head at word {word}")]
    ZeroColumn { doc_id: String, word: usize },

    #[error("document {doc_id}: subword row {row} at l={layer} h={head} has no mass on word tokens")]
    DegenerateRow {
        doc_id: String,
        layer: usize,
        head: usize,
        row: usize,
    },

    #[error("cannot exclude the trigger from a one-word document")]
    TriggerOnlyDocument,

    #[error("no training instances for role {role}")]
    EmptyTrainingSet { role: String },

    #[error("no cross-sentence support: all words lie in the trigger sentence")]
    NoCrossSentenceSupport,

    #[error("occluded distribution has no mass outside the trigger sentence")]
    ZeroOccludedMass,

    #[error("no cross-sentence training instances for role {role}")]
    NoCrossSentenceInstances { role: String },

    #[error("baseline undefined: {0}")]
    BaselineUndefined(String),

    #[error("non-finite gradient on instance {instance}")]
    NonFiniteGradient { instance: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("report has no results")]
    EmptyReport,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::NonFiniteGradient { .. }
            | Error::ZeroColumn { .. }
            | Error::DegenerateRow { .. }
            | Error::ZeroOccludedMass => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }
}
