use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("I/O error: {0}")]
    Stream(#[from] io::Error),

    #[error("line {line}: {source}")]
    AtLine { line: u64, source: Box<Error> },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid relation inventory: {0}")]
    InvalidInventory(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("empty choice list")]
    EmptyChoices,

    #[error("`none` cannot be combined with other relations")]
    ExclusiveNone,

    #[error("duplicate annotation for worker `{worker}` on sentence `{sentence}`")]
    DuplicatePair { worker: String, sentence: String },

    #[error("annotation matrix is empty")]
    EmptyMatrix,

    #[error("unknown sentence `{0}`")]
    UnknownSentence(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncated vector file: header declares {declared} vectors, found {found}")]
    TruncatedVectors { declared: usize, found: usize },

    #[error("vector file has more vectors than the {declared} declared in its header")]
    ExcessVectors { declared: usize },

    #[error("invalid sentence `{id}`: {reason}")]
    InvalidSentence { id: String, reason: String },

    #[error("labeled set is empty")]
    EmptyLabeledSet,

    #[error("query vector is empty")]
    EmptyQuery,

    #[error("relation inventory mismatch: {0}")]
    InventoryMismatch(String),

    #[error("no sentence-relation scores for crowd sentence `{0}`")]
    MissingSrs(String),

    #[error("sentence `{sentence}` has no score for relation `{relation}`")]
    MissingRelation { sentence: String, relation: String },

    #[error("duplicate scored pair ({sentence}, {relation})")]
    DuplicateScoredPair { sentence: String, relation: String },

    #[error("no gold positives at threshold {0}; AUC is undefined")]
    NoGoldPositives(f64),

    #[error(
        "prediction/gold join mismatch: {missing_in_gold} prediction ids absent from gold, \
         {missing_in_predictions} gold ids absent from predictions; first orphans: {}",
        orphans.join(", ")
    )]
    JoinMismatch {
        missing_in_gold: usize,
        missing_in_predictions: usize,
        orphans: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_line(self, line: u64) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }

    /// True when the failure came from the filesystem rather than from the
    /// content of an input.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Stream(_) => true,
            Error::AtLine { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
