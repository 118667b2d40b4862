use thiserror::Error;

/// Errors produced while building meshes, spaces, or solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-manifold primal edge {edge} ({a}-{b}) is shared by {count} polygons")]
    NonManifold {
        edge: usize,
        a: usize,
        b: usize,
        count: usize,
    },

    #[error("geometry error in polygon {polygon}: {message}")]
    Geometry { polygon: usize, message: String },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("linear solve failed: relative residual {residual:e} ({message})")]
    LinearSolve { residual: f64, message: String },

    #[error("Picard iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    PicardNonConvergence { iterations: usize, increment: f64 },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
