use thiserror::Error;

/// Errors surfaced by the channel, power-allocation, analysis and
/// simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// The opportunism threshold sits at or above the fading support, so
    /// the selection probability is zero and no user is ever scheduled.
    #[error("degenerate policy: selection probability is zero (threshold {kappa} at or above the fading support)")]
    DegeneratePolicy { kappa: f64 },

    /// Requested a mean delay below one slot, which no slotted policy can
    /// provide.
    #[error("unattainable delay: target {target} is below one slot")]
    UnattainableDelay { target: f64 },

    /// Malformed operand (length mismatch, non-positive gain, negative
    /// rate, parameter out of range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exhaustive-enumeration oracle was asked for more users than its
    /// combinatorial budget allows.
    #[error("too large: {what} supports at most {limit} users, got {got}")]
    TooLarge {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    /// The prefix-sum dominance precondition of the rate-transfer
    /// construction does not hold.
    #[error("dominance violation: prefix rate sums are not ordered at index {index}")]
    DominanceViolation { index: usize },

    /// An iterative numeric routine (quadrature or quantile inversion)
    /// exhausted its budget before reaching the requested tolerance.
    #[error("no convergence: {what} (estimated error {estimate:.3e}, tolerance {tolerance:.3e})")]
    NoConvergence {
        what: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    /// A bound that requires a compactly supported fading law was asked
    /// of a law with unbounded support.
    #[error("unbounded support: {0} requires a fading law with a finite supremum")]
    UnboundedSupport(&'static str),

    /// Rejected experiment configuration.
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
