use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank {requested} requested but only {available} eigenvalues are numerically nonzero")]
    RankDeficient { requested: usize, available: usize },

    #[error("eigengap between components {d} and {next} is degenerate ({gap:e})", next = d + 1)]
    DegenerateGap { d: usize, gap: f64 },

    #[error("reduced set carries no data-to-center assignment")]
    MissingAssignment,

    #[error("cardinality mismatch: {left} vs {right}")]
    CardinalityMismatch { left: usize, right: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dataset has no labels")]
    MissingLabels,

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("zero-duration denominator in {0} speedup")]
    ZeroDuration(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
