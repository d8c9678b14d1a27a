use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    /// Input values violate an operation's preconditions (non-finite entries,
    /// zero state vectors, Bloch vectors outside the unit ball, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A density matrix with non-positive trace, which has no Bloch image.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// A malformed passage, integrator, or ensemble description.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Propagation produced a non-finite value at time `t`.
    #[error("numerical failure at t = {t}")]
    NumericalFailure { t: f64 },

    /// The operation is not defined for the given inputs (e.g. the exact
    /// orbit for a non-integer passage index).
    #[error("unsupported: {0}")]
    Unsupported(String),
}
