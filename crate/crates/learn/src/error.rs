use thiserror::Error;

/// Errors raised by the classifiers and their training loops.
#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("validation set is empty")]
    EmptyValidationSet,

    #[error("need at least {k} training samples, got {available}")]
    TooFewSamples { k: usize, available: usize },

    #[error("sample has {got} features, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("samples are not homogeneous: sample {index} has {got} features, expected {expected}")]
    RaggedSamples {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("label {label} is not a binary class (expected 0 or 1)")]
    NonBinaryLabel { label: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent network shape: {0}")]
    InconsistentShape(String),

    #[error("train and validation sets share subject {subject}")]
    SubjectOverlap { subject: u32 },

    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { what: &'static str, epoch: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LearnError>;
