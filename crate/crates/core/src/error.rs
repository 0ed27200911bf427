use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("point outside the domain: {0}")]
    OutsideDomain(String),
    #[error("empty subdifferential at the given point")]
    EmptySubdifferential,
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("iterative solve did not converge after {iterations} iterations ({context})")]
    NotConverged { iterations: usize, context: String },
    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
    #[error("trajectory left the bounding box at t = {time}")]
    UnboundedTrajectory { time: f64 },
    #[error("Lyapunov function increased by {increase} along the trajectory")]
    DecreaseViolation { increase: f64 },
    #[error("distance to an empty set is undefined")]
    UndefinedDistance,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub(crate) fn dim(expected: usize, found: usize, context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected,
            found,
            context: context.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
