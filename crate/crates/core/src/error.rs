use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vectors must have at least one entry")]
    EmptyVector,

    #[error("non-finite entry {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("half-space normal must be nonzero")]
    ZeroNormal,

    #[error("a polyhedron needs at least one constraint")]
    EmptyPolyhedron,

    #[error("inconsistent subgradient: f(x) = {value:e} > 0 but the subgradient is zero")]
    InconsistentSubgradient { value: f64 },

    #[error("relaxation parameter {0} outside (0, 2]")]
    InvalidRelaxation(f64),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("operator list must not be empty")]
    EmptyOperatorList,

    #[error("index block must not be empty")]
    EmptyBlock,

    #[error("index {index} outside 1..={m}")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("divergence at iteration {iteration}: non-finite iterate")]
    Divergence { iteration: usize },

    #[error("Dykstra projection did not converge after {sweeps} sweeps (last change {change:e})")]
    NoConvergence { sweeps: usize, change: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("misaligned trace grids for method {method}")]
    MisalignedGrids { method: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed problem document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("seed {seed}, method {method}: {source}")]
    Run {
        seed: u64,
        method: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
