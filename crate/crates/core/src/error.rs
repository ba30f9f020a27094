use thiserror::Error;

/// Errors raised by the quantum-graph toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph is disconnected: vertex `{0}` is unreachable")]
    DisconnectedGraph(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdgeId(String),
    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    UnknownVertexReference { edge: String, vertex: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("sample arrays do not match the mesh (expected {expected} samples per edge, found {found})")]
    MeshMismatch { expected: usize, found: usize },
    #[error("requested {requested} eigenpairs but the discretization has only {dof} degrees of freedom")]
    MeshTooCoarse { requested: usize, dof: usize },
    #[error("eigensolver failed: {0}")]
    SolverFailure(String),
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("eigenfunction is not mass-normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("eigenvalue index {index} sits on an ambiguous cluster boundary (gap {gap:e})")]
    ClusterAmbiguous { index: usize, gap: f64 },
    #[error("finite-difference step {step:e} leaves the positive cone")]
    StepTooLarge { step: f64 },
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("computed spectrum ends at {top} which does not reach {needed}")]
    SpectrumRangeTooSmall { top: f64, needed: f64 },
    #[error("|F|² is not constant (sup deviation {0:e}); 4λ is in the spectrum")]
    NonConstantNorm(f64),
    #[error("curve is not parametrized by arclength (speed deviation {0:e})")]
    NotUnitSpeed(f64),
    #[error("optimizer did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
