//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error enum. Evaluators are pure, so every failure mode is a
/// data problem: bad parameters, inputs outside an operation's domain, or a
/// quantity that is genuinely undefined for the given configuration.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input (empty sample, non-finite value, kind mismatch).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Parameter outside its documented range.
    #[error("domain error: {0}")]
    DomainError(String),

    /// Input is valid but collapses the operation (e.g. a density with no
    /// mass left after truncation).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The requested quantity is undefined at this configuration
    /// (zero derivative of the utility, zero density at the quantile).
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// A stated precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// The quantile function is a step function at the requested level, so no
    /// derivative exists; supply one explicitly or use the numeric path.
    #[error("derivative unavailable: quantile function is piecewise constant at the requested level")]
    MissingDerivative,

    /// A loss integral did not evaluate to a finite number.
    #[error("non-integrable: {0}")]
    NonIntegrable(String),

    /// Exponential utility would overflow f64. Reported, never saturated.
    #[error("exponential utility overflow: beta*x = {arg:.3e} exceeds 700 ({context})")]
    Overflow { arg: f64, context: String },

    /// Brute-force dual search rejected the input size.
    #[error("support too large: {0}")]
    TooLarge(String),

    /// Too many Monte-Carlo replications failed.
    #[error("experiment failed: {0}")]
    ExperimentFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
