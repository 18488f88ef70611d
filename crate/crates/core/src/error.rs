use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("duplicate patent id `{id}` (line {line})")]
    DuplicateId { id: String, line: usize },

    #[error("duplicate embedding key `{0}`")]
    DuplicateKey(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("entity key `{0}` is used both as an inventor and as a patent")]
    EntityKeyCollision(String),

    #[error("no negative found for triple ({head}, {relation}, {tail}) after {attempts} draws")]
    ExhaustedRetries {
        head: usize,
        relation: usize,
        tail: usize,
        attempts: usize,
    },

    #[error("loss diverged at epoch {epoch}: {value}")]
    DivergedLoss { epoch: usize, value: f64 },

    #[error("text is empty")]
    EmptyText,

    #[error("no `{block}` embedding for patent `{patent_id}`")]
    MissingEmbedding { patent_id: String, block: char },

    #[error("need at least {needed} examples, got {got}")]
    TooFewExamples { needed: usize, got: usize },

    #[error("zero vector for `{0}`")]
    ZeroVector(String),

    #[error("empty score list")]
    EmptyScores,

    #[error("unknown seed `{0}`")]
    UnknownSeed(String),

    #[error("holdout ids not in universe: {}", .0.join(", "))]
    HoldoutNotInUniverse(Vec<String>),

    #[error("curve length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("bad embedding file {path}: {reason}")]
    BadEmbeddingFile { path: PathBuf, reason: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code printed by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IO",
            Error::MalformedRow { .. } => "MALFORMED_ROW",
            Error::DuplicateId { .. } => "DUPLICATE_ID",
            Error::DuplicateKey(_) => "DUPLICATE_KEY",
            Error::DimMismatch { .. } => "DIM_MISMATCH",
            Error::EmptyGraph => "EMPTY_GRAPH",
            Error::EntityKeyCollision(_) => "ENTITY_KEY_COLLISION",
            Error::ExhaustedRetries { .. } => "EXHAUSTED_RETRIES",
            Error::DivergedLoss { .. } => "DIVERGED_LOSS",
            Error::EmptyText => "EMPTY_TEXT",
            Error::MissingEmbedding { .. } => "MISSING_EMBEDDING",
            Error::TooFewExamples { .. } => "TOO_FEW_EXAMPLES",
            Error::ZeroVector(_) => "ZERO_VECTOR",
            Error::EmptyScores => "EMPTY_SCORES",
            Error::UnknownSeed(_) => "UNKNOWN_SEED",
            Error::HoldoutNotInUniverse(_) => "HOLDOUT_NOT_IN_UNIVERSE",
            Error::LengthMismatch(..) => "LENGTH_MISMATCH",
            Error::BadEmbeddingFile { .. } => "BAD_EMBEDDING_FILE",
            Error::Invalid(_) => "INVALID_INPUT",
            Error::Config(_) => "CONFIG",
        }
    }

    /// Process exit status: 1 data error, 2 usage error, 3 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DivergedLoss { .. } => 3,
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}
