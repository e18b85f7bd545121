use thiserror::Error;

/// Errors surfaced by the solvers and model types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The LP handed to the kernel is inconsistent. Always a caller bug.
    #[error("malformed problem: {0}")]
    MalformedProblem(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("deception norm {norm} exceeds budget {budget}")]
    BudgetViolation { norm: f64, budget: f64 },

    #[error("invalid interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("level {0} is not inducible")]
    InfeasibleLevel(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
