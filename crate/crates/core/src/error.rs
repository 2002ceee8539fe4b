use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input, unknown labels, invalid configuration.
    Validation,
    /// Degenerate statistics (zero variance, empty selections, ...).
    Computation,
    /// Filesystem or encoding failures.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate {kind} label {label:?}")]
    DuplicateLabel { kind: &'static str, label: String },

    #[error("unknown {kind} {label}")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("empty matrix: {0}")]
    EmptyMatrix(String),

    #[error("non-finite score for model {model:?}, task {task:?}")]
    NonFinite { model: String, task: String },

    #[error("missing score for model {model:?}, task {task:?}")]
    MissingCell { model: String, task: String },

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("need at least {needed} values, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid stage: expected {expected}, found {found}")]
    InvalidStage { expected: &'static str, found: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("no tasks retained: {0}")]
    EmptySelection(String),

    #[error("round {round}: every sampled subset was degenerate after {attempts} attempts ({last})")]
    RetriesExhausted { round: usize, attempts: usize, last: Box<Error> },

    #[error("task {task}: {source}")]
    Task { task: String, source: Box<Error> },

    #[error("stage {stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ZeroVariance(_)
            | Error::InsufficientLength { .. }
            | Error::EmptySelection(_)
            | Error::RetriesExhausted { .. } => ErrorClass::Computation,
            Error::Task { source, .. } | Error::Stage { source, .. } => source.class(),
            Error::Io { .. } => ErrorClass::Io,
            Error::Csv(e) if e.is_io_error() => ErrorClass::Io,
            Error::Json(e) if e.is_io() => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Pipeline stage that failed, if this error came from `run_all`.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub(crate) fn for_task(task: impl Into<String>, source: Error) -> Self {
        Error::Task { task: task.into(), source: Box::new(source) }
    }
}
