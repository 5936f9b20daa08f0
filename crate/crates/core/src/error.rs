use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates a structural invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("linear system is numerically singular at column {0}")]
    Singular(usize),

    /// The joint chain is too large to enumerate.
    #[error("joint state space has {size} {what}, limit is {limit}; use the simulator instead")]
    StateSpaceTooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },
}
