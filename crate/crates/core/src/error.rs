use thiserror::Error;

/// Errors produced anywhere in the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold edge {edge} ({a}, {b}) is shared by {count} faces")]
    NonManifoldEdge {
        edge: usize,
        a: usize,
        b: usize,
        count: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("projection of node {node} onto the level set did not converge (|phi| = {residual:e})")]
    Projection { node: usize, residual: f64 },

    #[error("degenerate element {element}: det(J^T J) = {det:e}")]
    DegenerateElement { element: usize, det: f64 },

    #[error("invalid state at node {node}: {reason}")]
    InvalidState { node: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("conjugate gradients stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("invalid flow law: {0}")]
    InvalidFlow(String),

    #[error("time {t} is not below the maximal existence time {t_max}")]
    BeyondMaximalTime { t: f64, t_max: f64 },

    #[error("singular level-set gradient at ({0}, {1}, {2})")]
    SingularGradient(f64, f64, f64),

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
