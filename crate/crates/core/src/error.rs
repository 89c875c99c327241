use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),

    #[error("noun phrase length {0} is outside the supported range {min}..={max}", min = crate::np::MIN_PHRASE_LEN, max = crate::np::MAX_PHRASE_LEN)]
    PhraseLength(usize),

    #[error("structure length {0} is outside the supported range 1..=6")]
    StructureLength(usize),

    #[error("malformed bracketing: {0}")]
    MalformedTree(String),

    #[error("phrase {phrase:?} has zero probability under every structure (log-likelihood is -inf)")]
    ZeroProbability { phrase: String },

    #[error("pair ({modifier}, {head}) is unseen and the smoothing floor is zero")]
    UnseenPair { modifier: String, head: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid training configuration: {0}")]
    Config(String),

    #[error("smoothing would drop all {0} seen pairs")]
    DropAll(usize),

    #[error("smoothing needs a vocabulary of at least two words, got {0}")]
    VocabTooSmall(usize),

    #[error("no parameter tables to merge")]
    NothingToMerge,

    #[error("parameter table invariant violated: {0}")]
    Normalization(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {0:?}")]
    DuplicateDoc(String),

    #[error("index must contain at least one document")]
    EmptyIndex,

    #[error("query {0:?} has no terms")]
    EmptyQuery(String),

    #[error("query {0:?} has no relevance judgments")]
    MissingQrels(String),

    #[error("training chunk {index} (from line {first_line}): {source}")]
    Chunk {
        index: usize,
        first_line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    RawIo(#[from] std::io::Error),

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

    pub(crate) fn format(path: impl AsRef<str>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_string(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's inputs (malformed data, bad
    /// configuration, unreadable or unwritable paths) rather than internal
    /// failures.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Chunk { source, .. } => source.is_data_error(),
            Error::RawIo(_) => false,
            _ => true,
        }
    }
}
