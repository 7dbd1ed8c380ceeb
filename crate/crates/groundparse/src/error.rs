use std::path::PathBuf;

use crate::types::Span;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty caption at line {line}")]
    EmptyCaption { line: usize },

    #[error("token {token:?} is empty or contains whitespace")]
    BadToken { token: String },

    #[error("POS sidecar has {got} lines, caption file has {expected}")]
    PosLineCount { expected: usize, got: usize },

    #[error("POS line {line} has {got} tags for {expected} tokens")]
    PosMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("caption has no POS tags")]
    MissingPos,

    #[error("treebank line {line}, offset {offset}: {msg}")]
    Treebank {
        line: usize,
        offset: usize,
        msg: String,
    },

    #[error("tree line {line}: {msg}")]
    TreeFormat { line: usize, msg: String },

    #[error("span [{i},{j}] out of bounds for sentence of length {n}")]
    SpanBounds { i: usize, j: usize, n: usize },

    #[error("spans [{},{}] and [{},{}] cross", a.start, a.end, b.start, b.end)]
    Crossing { a: Span, b: Span },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty vocabulary")]
    EmptyVocab,

    #[error("out-of-vocabulary token {token:?}")]
    OovToken { token: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("tau must be positive, got {tau}")]
    NonPositiveTau { tau: f64 },

    #[error("sampling temperature must be positive and finite, got {t}")]
    BadTemperature { t: f64 },

    #[error("degenerate sum in L2 combine{}", match span { Some(s) => format!(" at span [{},{}]", s.start, s.end), None => String::new() })]
    DegenerateSum { span: Option<Span> },

    #[error("invalid configuration: {}", problems.join("; "))]
    ConfigInvalid { problems: Vec<String> },

    #[error("checkpoint format version {found}, this build reads version {expected}")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("correlation undefined for constant input")]
    ConstantInput,

    #[error("need at least {need} model parse sets, got {got}")]
    ModelSetTooSmall { got: usize, need: usize },

    #[error("reward batch must contain at least 2 items, got {size}")]
    BatchTooSmall { size: usize },

    #[error("visual-match reward requires a scene feature")]
    MissingScene,

    #[error("visual-match reward requires a full-dimension span embedding")]
    MissingFullEmbedding,

    #[error("oracle reward requires a concreteness table")]
    MissingOracleTable,

    #[error("non-finite gradient (seed {seed}, step {step})")]
    NonFiniteGradient { seed: u64, step: u64 },

    #[error("checkpoint stream for seed index {index} is empty")]
    EmptyStream { index: usize },

    #[error("operation requires scalar (d=1) embeddings, model has d={dim}")]
    NotScalarModel { dim: usize },

    #[error("operation requires d in {{1,2}}, model has d={dim}")]
    NotLowDim { dim: usize },

    #[error("only {overlap} tokens overlap with the norms table (need at least 2)")]
    InsufficientOverlap { overlap: usize },

    #[error("no noun-tagged tokens available to choose a replacement from")]
    NoNouns,

    #[error("gold trees are required but the corpus has none")]
    MissingGold,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
