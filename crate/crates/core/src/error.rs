use std::path::PathBuf;

use thiserror::Error;

use crate::schedule::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: digest mismatch (stored {stored}, recomputed {computed})")]
    DigestMismatch {
        path: PathBuf,
        line: usize,
        stored: String,
        computed: String,
    },

    #[error("duplicate instance digest {0} in generated batch")]
    DuplicateDigest(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("placement of job {job} op {op} at [{start}, {end}) conflicts with {resource} busy interval [{busy_start}, {busy_end})")]
    Constraint {
        job: usize,
        op: usize,
        start: u32,
        end: u32,
        resource: Resource,
        busy_start: u32,
        busy_end: u32,
    },

    #[error("invalid action {action}: {reason}")]
    InvalidAction { action: usize, reason: String },

    #[error("policy `{policy}` chose invalid action {action}")]
    PolicyAction { policy: String, action: usize },

    #[error("no valid action: mask is all false")]
    NoValidAction,

    #[error("instance has {tasks} tasks, exceeding the oracle limit of {limit}")]
    TooLarge { tasks: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite loss at update {update}: {detail}")]
    NonFinite { update: usize, detail: String },

    #[error("unsupported model format `{found}` (expected `{expected}`)")]
    ModelVersion { found: String, expected: String },

    #[error("model file truncated: {0}")]
    ModelTruncated(String),

    #[error("unknown method `{name}`; valid methods: {valid}")]
    UnknownMethod { name: String, valid: String },

    #[error("schedule is invalid: {}", .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidSchedule(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    Machine(usize),
    Tool(usize),
    Job(usize),
}

impl std::fmt::Display for Resource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resource::Machine(m) => write!(f, "machine {m}"),
            Resource::Tool(t) => write!(f, "tool {t}"),
            Resource::Job(j) => write!(f, "job {j} predecessor"),
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
