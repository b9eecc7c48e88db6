use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {found}")]
    EntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: dimension {dim} overflows the addressable size")]
    DimensionOverflow { op: &'static str, dim: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e} relative to scale {scale:e})")]
    NotSymmetric { asymmetry: f64, scale: f64 },

    #[error("matrix is not positive definite: factorization failed at pivot {pivot} (value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("kappa0 = {kappa0:e} must be positive for the a-priori iteration bound; rely on the residual stopping rule instead")]
    KappaNotPositive { kappa0: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hidden output matrix is identically zero")]
    ZeroHiddenMatrix,

    #[error("iteration diverged with step delta = {delta:e} (objective became {objective})")]
    Diverged { delta: f64, objective: f64 },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("need at least two classes, found {0}")]
    TooFewClasses(usize),

    #[error("class {class:?} has {count} sample(s), too few to place in both partitions")]
    ClassTooSmall { class: String, count: usize },

    #[error("{path}: row {row}, column {col}: cannot parse {cell:?} as a number")]
    ParseCell {
        path: PathBuf,
        row: usize,
        col: usize,
        cell: String,
    },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: label column {column} not found")]
    MissingLabelColumn { path: PathBuf, column: String },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Schema {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}
