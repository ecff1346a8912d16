use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot renormalize a zero vector")]
    ZeroNorm,

    #[error("grid must have at least 3 nodes, got {nodes}")]
    GridTooSmall { nodes: usize },

    #[error("sample length {found} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("sweep seed nearly parallel to target at node {node}")]
    DegenerateSweepSeed { node: usize },

    #[error("rotation field carries no derivative matrices")]
    MissingDerivativeField,

    #[error("profile off the unit sphere at node {node}: |v| = {norm}")]
    OffSphere { node: usize, norm: f64 },

    #[error("matrix at node {node} is not a rotation (defect {defect:.3e})")]
    NotARotation { node: usize, defect: f64 },

    #[error("degenerate state at step {step}, node {node}: step size far too large")]
    DegenerateState { step: u64, node: usize },

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
}

pub type Result<T> = std::result::Result<T, Error>;
