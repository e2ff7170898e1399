use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by any operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed edge list line: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: node id {id} out of range (n = {n})")]
    Index {
        path: PathBuf,
        line: usize,
        id: i64,
        n: usize,
    },
    #[error("knowledge depth {0} is unsupported (expected 1 or 2)")]
    DepthUnsupported(u32),
    #[error("edge ({0}, {1}) is absent")]
    EdgeAbsent(usize, usize),
    #[error("ratio undefined: the graph has no edges")]
    DivisionUndefined,
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),
    #[error("expected adjacency is rank deficient (sigma_{k} = {sigma:.3e})")]
    RankDeficient { k: usize, sigma: f64 },
    #[error("quadratic eigenproblem produced complex roots (max imaginary part {0:.3e})")]
    ComplexRoots(f64),
    #[error("root {0} has more valid roots than numerical null directions")]
    NullspaceAmbiguous(usize),
    #[error("expected {expected} positive and negative roots each, found {pos} / {neg}")]
    RootSignImbalance {
        expected: usize,
        pos: usize,
        neg: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("k-means needs at least {k} points, got {m}")]
    TooFewPoints { m: usize, k: usize },
    #[error("the {0} group has fewer than {1} members")]
    GroupTooSmall(&'static str, usize),
    #[error("k = {0} is too large for exhaustive permutation search (max 10)")]
    KTooLarge(usize),
    #[error("label {label} out of range for k = {k}")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("unknown anchor {0:?}")]
    UnknownAnchor(String),
    #[error("anchor {0} is outside the largest connected component")]
    AnchorOutsideLcc(usize),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("invalid experiment grid: {0}")]
    InvalidGrid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
