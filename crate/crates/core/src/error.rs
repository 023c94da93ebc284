use std::io;
use std::path::PathBuf;

use thiserror::Error;
use topoeeg_learn::LearnError;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("layout line {line}: {message}")]
    LayoutParse { line: usize, message: String },
    #[error("layout has {found} electrodes, expected {expected}")]
    LayoutCount { found: usize, expected: usize },
    #[error("electrodes {first} and {second} share pixel ({row}, {col})")]
    DuplicatePixel {
        first: String,
        second: String,
        row: usize,
        col: usize,
    },
    #[error("electrode name {0} appears twice")]
    DuplicateName(String),
    #[error("electrode {name} at ({row}, {col}) lies outside the {height}x{width} grid")]
    OutOfRange {
        name: String,
        row: i64,
        col: i64,
        height: usize,
        width: usize,
    },

    #[error("recording is missing channel {0}")]
    MissingChannel(String),
    #[error("recording has unknown channel {0}")]
    UnknownChannel(String),
    #[error("channel {channel} has {got} samples, expected {expected}")]
    RaggedChannel {
        channel: String,
        expected: usize,
        got: usize,
    },
    #[error("sampling rate {got} Hz does not match expected {expected} Hz")]
    SamplingRate { expected: f64, got: f64 },
    #[error("recording of {len} samples is shorter than one {window}-sample window")]
    RecordingTooShort { len: usize, window: usize },
    #[error("{path}: row {row}: {message}")]
    RecordingParse {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("manifest: {0}")]
    Manifest(String),

    #[error("invalid band [{lo_hz}, {hi_hz}) Hz at sampling rate {fs_hz} Hz")]
    InvalidBand { lo_hz: f64, hi_hz: f64, fs_hz: f64 },
    #[error("band edge {edge_hz} Hz is not a multiple of the {leaf_hz} Hz leaf width")]
    MisalignedBand { edge_hz: f64, leaf_hz: f64 },
    #[error("signal length {len} is not divisible by 2^{depth}")]
    NonDivisibleLength { len: usize, depth: u32 },
    #[error("unknown wavelet {0}")]
    UnknownWavelet(String),
    #[error("unknown interpolation method {0}")]
    UnknownMethod(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid cohort specification: {0}")]
    InvalidCohort(String),
    #[error("cannot aggregate an empty prediction list")]
    EmptyPredictions,
    #[error("cannot build {k} folds from {subjects} subjects")]
    TooManyFolds { k: usize, subjects: usize },
    #[error("subject {subject} appears in more than one role in trial {fold}")]
    Leakage { fold: usize, subject: u32 },
    #[error("trial {fold} failed")]
    Trial {
        fold: usize,
        #[source]
        source: Box<CoreError>,
    },
    #[error("feature cache: {0}")]
    FeatureCache(String),

    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Broad failure classes, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The request itself is malformed (bad configuration or specification).
    Usage,
    /// Inputs on disk are missing, unreadable or inconsistent.
    Data,
    /// Training diverged or produced non-finite values.
    Numerical,
}

impl CoreError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            CoreError::InvalidConfig(_)
            | CoreError::InvalidCohort(_)
            | CoreError::UnknownWavelet(_)
            | CoreError::UnknownMethod(_)
            | CoreError::InvalidBand { .. }
            | CoreError::MisalignedBand { .. }
            | CoreError::TooManyFolds { .. } => ErrorClass::Usage,
            CoreError::Trial { source, .. } => source.class(),
            CoreError::Learn(LearnError::NonFinite { .. }) => ErrorClass::Numerical,
            CoreError::Learn(LearnError::InvalidConfig(_)) => ErrorClass::Usage,
            CoreError::Leakage { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
