//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by mesh handling, assembly, solvers and steppers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The connectivity or vertex data do not describe a valid closed mesh.
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// An element has (numerically) vanishing measure.
    #[error("degenerate element {index} (measure {measure:e}, threshold {threshold:e})")]
    DegenerateElement {
        index: usize,
        measure: f64,
        threshold: f64,
    },

    /// Two fields or operators have incompatible sizes.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A user-supplied parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A pivot fell below the singularity tolerance during factorization.
    #[error("matrix is singular within tolerance at pivot {pivot} (|pivot| = {value:e})")]
    Singular { pivot: usize, value: f64 },

    /// An iterative method exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// Conjugate gradients met a direction of non-positive curvature.
    #[error("operator is not positive definite (breakdown at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize },

    /// The vertex normals violate the span or non-vanishing condition.
    #[error("vertex-normal condition violated: {0}")]
    VertexNormals(String),

    /// A linear solve inside a scheme failed.
    #[error("{context} failed: {source}; check that the vertex normals span the ambient space")]
    Solve {
        context: String,
        #[source]
        source: Box<Error>,
    },

    /// The Lagrange-multiplier system of the constrained Willmore scheme is singular.
    #[error("singular multiplier system: {0}")]
    SingularMultiplier(String),

    /// A requested combination of options is not available.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A time step could not be completed.
    #[error("step {step} aborted: {source}")]
    StepAborted {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// File-system failure.
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed text input.
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },
}

impl Error {
    /// Wraps a solver failure with the name of the system being solved.
    pub fn solve(context: impl Into<String>, source: Error) -> Self {
        Error::Solve {
            context: context.into(),
            source: Box::new(source),
        }
    }

    /// Attaches a step index to a stepper failure.
    pub fn at_step(step: usize, source: Error) -> Self {
        Error::StepAborted {
            step,
            source: Box::new(source),
        }
    }

    /// Returns the innermost error, looking through the solve and step wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Solve { source, .. } | Error::StepAborted { source, .. } => source.root(),
            other => other,
        }
    }
}
