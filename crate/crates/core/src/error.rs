use alloc::string::String;

/// Errors raised by envelope evaluation and the solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),
    /// The label constraints (or a node of the search) admit no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A root or minimizer could not be located.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The loss, regularizer and decomposition combination has no evaluator.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// Malformed input such as mismatched dimensions or non-positive weights.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = core::result::Result<T, Error>;
