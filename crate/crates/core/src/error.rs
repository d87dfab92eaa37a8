use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh is empty after cleanup (all faces removed)")]
    EmptyMesh,

    #[error("vertex {0} has no incident face")]
    IsolatedVertex(usize),

    #[error("atom set is empty")]
    EmptyAtomSet,

    #[error("atom count mismatch: header declares {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("non-finite cotangent weight in face {face}")]
    NonFiniteCotangent { face: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigensolver did not converge: {converged} of {requested} pairs after Krylov dimension {dimension}")]
    NonConvergence {
        converged: usize,
        requested: usize,
        dimension: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("field belongs to mesh {field} but basis belongs to mesh {basis}")]
    HashMismatch { field: String, basis: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("empty interface: no vertex within {threshold} of the other surface")]
    EmptyInterface { threshold: f64 },

    #[error("interface too small: {size} vertices (need at least {min})")]
    InterfaceTooSmall { size: usize, min: usize },

    #[error("optimization diverged (non-finite loss at step {step})")]
    Divergence { step: usize },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse category used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. }
            | Error::IndexOutOfRange { .. }
            | Error::CountMismatch { .. }
            | Error::Unsupported(_)
            | Error::EmptyAtomSet => "parse",
            Error::Factorization(_) | Error::NonConvergence { .. } => "solve",
            Error::EmptyInterface { .. } => "empty_interface",
            _ => "input",
        }
    }
}
