use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("self-loop on node {node} (line {line})")]
    SelfLoop { line: usize, node: usize },

    #[error("cannot infer node count: no edges and no node-count header")]
    EmptyGraph,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("no feasible matching: {side} vertices {vertices:?} have only {neighbours} allowed partners")]
    InfeasibleMatching {
        side: &'static str,
        vertices: Vec<usize>,
        neighbours: usize,
    },

    #[error("mapping is not one-to-one: node {node} on side {side} used twice")]
    NotOneToOne { side: u8, node: usize },

    #[error("dense alignment matrix needs {entries} entries, above the cap of {cap}; use the implicit operator")]
    TooLarge { entries: usize, cap: usize },

    #[error("brute force refused: n = {n} exceeds the limit of {limit}")]
    BruteForceLimit { n: usize, limit: usize },
}
