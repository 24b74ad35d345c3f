use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by corpus handling, model training, decoding and scoring.
#[derive(Debug, Error)]
pub enum Error {
    #[error("source length is zero{}", segment_suffix(.segment))]
    ZeroSourceLength { segment: Option<usize> },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("empty {side} sentence in pair {index}")]
    EmptySentence { side: &'static str, index: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("source and target language must differ (both {lang:?})")]
    SameLanguage { lang: String },

    #[error("vocabulary format version {found} is not supported (expected {expected})")]
    VocabVersion { found: u32, expected: u32 },

    #[error("vocabulary hash mismatch: checkpoint was trained with {expected}, got {found}")]
    VocabHashMismatch { expected: String, found: String },

    #[error("sequence of length {len} exceeds the maximum of {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NanLoss { epoch: u32, step: u64 },

    #[error("non-finite value in tensor {tensor} after optimizer step {step}")]
    NonFiniteParam { tensor: String, step: u64 },

    #[error("gradient check failed for tensor {tensor}: relative error {rel_err:.3e}")]
    GradientCheck { tensor: String, rel_err: f64 },

    #[error("n-best list is empty")]
    EmptyNBest,

    #[error("hypothesis/reference count mismatch: {hyps} vs {refs}")]
    CountMismatch { hyps: usize, refs: usize },

    #[error("unknown rating label {label:?} at line {line}")]
    UnknownRating { label: String, line: usize },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn segment_suffix(segment: &Option<usize>) -> String {
    match segment {
        Some(i) => format!(" at segment {i}"),
        None => String::new(),
    }
}

impl Error {
    /// Coarse category used by callers that map errors to exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidConfig(_) | Error::SameLanguage { .. } => ErrorCategory::Config,
            Error::NanLoss { .. }
            | Error::NonFiniteParam { .. }
            | Error::GradientCheck { .. } => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
}
