use std::path::PathBuf;

use thiserror::Error;

use crate::command::Command;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("data length {len} bytes is not a whole number of {channels}-channel f32 frames")]
    DataLength { len: usize, channels: usize },

    #[error("marker out of range: marker {marker} at sample {sample_index} on a {n_samples}-sample recording")]
    MarkerOutOfRange {
        marker: usize,
        sample_index: u64,
        n_samples: usize,
    },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("invalid event code {0} (expected 1..=4)")]
    InvalidEventCode(i64),

    #[error("epoch window out of range: marker {marker} needs samples [{start}, {end}) but recording has {n_samples}")]
    WindowOutOfRange {
        marker: usize,
        start: usize,
        end: usize,
        n_samples: usize,
    },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("unstable filter: largest pole magnitude {max_pole}")]
    UnstableFilter { max_pole: f64 },

    #[error("signal too short for filtfilt: {len} samples, need more than {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("degenerate trial: covariance trace is zero")]
    DegenerateTrial,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rank-deficient covariance: smallest composite eigenvalue {min_eigenvalue:e}")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("singular pooled covariance at shrinkage {shrinkage}; use shrinkage > 0")]
    SingularCovariance { shrinkage: f64 },

    #[error("class {class} has {count} training trials, need at least {needed}")]
    MissingClass {
        class: Command,
        count: usize,
        needed: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("arena too small: {0}")]
    ArenaTooSmall(String),

    #[error("arena too crowded: gave up after {attempts} attempts")]
    ArenaTooCrowded { attempts: u64 },

    #[error("config fingerprint mismatch: {expected} vs {found} ({subject})")]
    FingerprintMismatch {
        expected: String,
        found: String,
        subject: String,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
