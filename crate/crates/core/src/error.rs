use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by corpus handling, inference, training, augmentation and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("document `{doc}`: unknown label `{label}`")]
    UnknownLabel { doc: String, label: String },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("document `{id}`: {labels} labels for {sentences} sentences")]
    LabelCountMismatch {
        id: String,
        sentences: usize,
        labels: usize,
    },

    #[error("document `{0}` has no sentences")]
    EmptyDocument(String),

    #[error("document `{0}` has no gold labels")]
    MissingGold(String),

    #[error("label sequence is empty")]
    EmptyLabels,

    #[error("invalid label set: {0}")]
    InvalidLabelSet(String),

    #[error("embedding file: {0}")]
    Semb(String),

    #[error("no embeddings for document `{0}`")]
    MissingEmbeddings(String),

    #[error("document `{id}`: expected {expected} sentence rows, found {found}")]
    SentenceCountMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("span ({a}, {b}) out of range for {m} sentences")]
    IndexOutOfRange { a: usize, b: usize, m: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("gold span of length {len} exceeds maximum span length {lmax}")]
    SpanTooLong { len: usize, lmax: usize },

    #[error("segmentation is not contiguous and exhaustive over {m} sentences")]
    InvalidSegmentation { m: usize },

    #[error("segmentations cover different lengths: gold {gold}, predicted {pred}")]
    CoverageMismatch { gold: usize, pred: usize },

    #[error("sequence length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("no prediction for document `{0}`")]
    MissingPrediction(String),

    #[error("prediction for unknown document `{0}`")]
    UnknownDocument(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("translation failed: {0}")]
    Translation(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("non-finite gradient in parameter block `{0}`")]
    NonFiniteGradient(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that indicate a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::NonFiniteGradient(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
