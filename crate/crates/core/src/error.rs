use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("transitions only go forward in time (from node {from} to node {to})")]
    BackwardTransition { from: usize, to: usize },

    #[error("node index {index} out of range for a grid with {len} nodes")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("norms increase between nodes {earlier} and {later}: {detail}")]
    Monotonicity {
        earlier: usize,
        later: usize,
        detail: String,
    },

    #[error("tolerance {requested:e} is below the grid resolution floor; achievable bound is {achievable:e}")]
    Resolution { requested: f64, achievable: f64 },

    #[error("averaging window of width {width} at node {node} leaves the grid")]
    WindowOutsideGrid { node: usize, width: f64 },

    #[error("problem with {n} nodes exceeds the oracle limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("mesh {mesh} is too coarse, at least {required} points are needed")]
    MeshTooCoarse { mesh: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sections belong to different families ({0} vs {1})")]
    FamilyMismatch(String, String),

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("unknown {kind} `{name}`; registered: {registered}")]
    Unknown {
        kind: &'static str,
        name: String,
        registered: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}, column {column}: {message}")]
    Json {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn json(context: impl Into<String>, err: &serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
