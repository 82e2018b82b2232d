use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node index {index} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("unknown id {0:?}")]
    UnknownId(String),

    #[error("node {0} has no neighbours; random walks cannot leave it")]
    IsolatedNode(usize),

    #[error("source and target are the same node ({0})")]
    SameNode(usize),

    #[error("node {target} is unreachable from node {from}")]
    Unreachable { from: usize, target: usize },

    #[error("graph has {nodes} nodes, above the guard of {limit}")]
    TooLarge { nodes: usize, limit: usize },

    #[error("unknown author {0:?}")]
    UnknownAuthor(String),

    #[error("author {0:?} has no papers in first or last position within the window")]
    EmptyProfile(String),

    #[error("need at least one positive and one negative pair")]
    SingleClass,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("node {0} has a zero embedding vector")]
    ZeroVector(usize),

    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad files, ids, or parameters supplied by the caller.
    Input,
    /// The request is well formed but cannot be computed (size guards, solver failure,
    /// unreachable pairs, not enough data to sample from).
    Infeasible,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::InvalidParameter(_)
            | Error::NodeOutOfRange { .. }
            | Error::UnknownId(_)
            | Error::SameNode(_)
            | Error::UnknownAuthor(_)
            | Error::SingleClass
            | Error::Snapshot(_) => ErrorKind::Input,
            Error::IsolatedNode(_)
            | Error::Unreachable { .. }
            | Error::TooLarge { .. }
            | Error::EmptyProfile(_)
            | Error::InsufficientData(_)
            | Error::ZeroVariance(_)
            | Error::Degenerate(_)
            | Error::ZeroVector(_)
            | Error::NoConvergence { .. } => ErrorKind::Infeasible,
        }
    }
}
