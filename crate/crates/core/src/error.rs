use thiserror::Error;

/// Errors raised by the index computations and experiment harnesses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The instance violates one of the model invariants.
    #[error("invalid instance: {0}")]
    Invalid(String),

    /// A transition matrix row does not sum to one (row is 1-based).
    #[error("row {row} of {matrix} sums to {sum}, expected 1")]
    RowSum {
        matrix: &'static str,
        row: usize,
        sum: f64,
    },

    /// An enumeration would exceed the configured size guard.
    #[error("size guard exceeded: {what} is {actual}, limit is {limit}")]
    SizeGuard {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    /// The adaptive-greedy scheme needed a marginal productivity rate whose
    /// marginal work vanishes. `state` is 0-based; the message prints it 1-based.
    #[error("zero marginal work at state {} for active set {set}", .state + 1)]
    ZeroMarginalWork { state: usize, set: String },

    /// A set system does not satisfy the boundary requirements.
    #[error("set system violation: {0}")]
    SetSystem(String),

    /// A numerical routine failed in a way the model rules out.
    #[error("internal numerical error: {0}")]
    Numerical(String),

    /// An iterative method hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
