use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} exceeds the supported limit of {limit}")]
    ScaleLimit { what: String, limit: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("leaf set mismatch: {0}")]
    LeafSetMismatch(String),
    #[error("subtrees intersect")]
    SubtreeIntersection,
    #[error("invalid swap move: {0}")]
    InvalidMove(String),
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("flow is not a unit flow: {0}")]
    NonUnitFlow(String),
    #[error("vertex {0} is not green")]
    NotGreen(usize),
    #[error("no test pair with a distance gap below vertex {0}")]
    NoTestPair(usize),
    #[error("battery has not been validated")]
    UnvalidatedBattery,
    #[error("unsupported state space: {0}")]
    StateSpace(String),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn tree(msg: impl Into<String>) -> Self {
        Error::InvalidTree(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn limit(what: impl Into<String>, limit: usize) -> Self {
        Error::ScaleLimit {
            what: what.into(),
            limit,
        }
    }
}
