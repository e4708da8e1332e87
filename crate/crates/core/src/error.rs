use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("malformed matrix: {0}")]
    Malformed(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("zero pivot in row {row} of the incomplete factorization")]
    ZeroPivot { row: usize },

    #[error("edge weight undefined for pair ({i}, {j}): a_ii w_i^2 + a_jj w_j^2 = 0")]
    DegenerateEdge { i: usize, j: usize },

    #[error("test vector vanishes on aggregate {aggregate}")]
    ZeroTestVector { aggregate: usize },

    #[error("smoothed prolongator is identically zero (D^-1 A = I); the matrix is diagonal")]
    ZeroProlongator,

    #[error("breakdown at iteration {iteration}: p^T A p = {value:e}")]
    Breakdown { iteration: usize, value: f64 },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("matrix structure changed since halo discovery (fingerprint {expected:#018x} != {found:#018x})")]
    StructureChanged { expected: u64, found: u64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
