use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A `.bsm` or config file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An element is inverted, degenerate or tangled.
    #[error("geometry error in element {element}: {message}")]
    Geometry { element: usize, message: String },

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// The requested computation exceeds a size cap (memory or dense-solver limits).
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("step {step} failed in {substep}: {source}")]
    Step {
        step: usize,
        substep: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn geometry(element: usize, msg: impl Into<String>) -> Self {
        Error::Geometry {
            element,
            message: msg.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True for failures of the numerics (solver breakdown or tangled geometry),
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Geometry { .. } | Error::NonConvergence { .. } | Error::NotPositiveDefinite { .. } => true,
            Error::Step { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
