//! Crate-wide error type.
//!
//! One enum covers the whole library: shape/usage violations at API
//! boundaries, numeric failures (non-finite values with the offending
//! coordinate), configuration problems, and I/O or parse errors from the
//! persistence layer.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty batch: {0}")]
    EmptyBatch(&'static str),

    #[error("non-finite value in {context} at coordinate {index}")]
    NonFinite {
        context: &'static str,
        index: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("particle {particle} produced a non-finite loss")]
    NonFiniteLoss { particle: usize },

    #[error("optimizer failed: every candidate evaluated to an invalid objective")]
    AllCandidatesInvalid,

    #[error("task '{task}' does not match environment '{env}'")]
    TaskEnvMismatch { task: String, env: String },

    #[error("unknown task id '{0}'")]
    UnknownTask(String),

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("experiment aborted at episode {episode} during {phase}: {source}")]
    Experiment {
        episode: usize,
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
