use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum JelError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data failed validation (sizes, dimensions, finiteness).
    #[error("validation error: {0}")]
    Validation(String),

    /// The pseudo-values leave no room for a feasible `theta`.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// `theta` lies outside the open range of a pseudo-value vector.
    #[error("infeasible theta {theta}: must lie strictly inside ({min}, {max})")]
    InfeasibleTheta { theta: f64, min: f64, max: f64 },

    /// A weight or log argument became non-positive at a supposed solution.
    #[error("feasibility violation: {0}")]
    Feasibility(String),

    /// A root search ran out of iterations or could not meet its tolerance.
    #[error("no convergence after {iterations} iterations: {detail} (last bracket [{lo}, {hi}])")]
    NonConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        detail: String,
    },

    /// A line-oriented input (dataset or config) could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl JelError {
    /// True for solver-side failures as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(self, JelError::NonConvergence { .. } | JelError::Feasibility(_))
    }
}

pub type Result<T> = std::result::Result<T, JelError>;
