use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{message}, line {line}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: u64, n: usize },

    #[error("unknown node id {0:?}")]
    UnknownNode(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("non-finite vector component")]
    NonFinite,

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("missing vector for id {0:?}")]
    MissingVector(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty ratings table")]
    EmptyRatings,

    #[error("objective identically zero: no positive or negative nodes")]
    EmptyObjective,

    #[error("k exceeds node count (k = {k}, n = {n})")]
    KExceedsN { k: usize, n: usize },

    #[error("enumeration budget exceeded: {0}; use Monte Carlo estimation instead")]
    BudgetExceeded(String),

    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),

    #[error("malformed pool file: {0}")]
    PoolFormat(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn node_out_of_range(node: NodeId, n: usize) -> Self {
        Error::NodeOutOfRange {
            node: node as u64,
            n,
        }
    }
}
