use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Design coefficients violate Σ k·|z_k| ≤ 1.
    #[error("coefficients outside the Kapteyn convergence domain: Σ k|z_k| = {weighted_sum}")]
    ConvergenceDomain { weighted_sum: f64 },

    /// An iterative routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A sidelobe metric has no meaningful value for the input.
    #[error("metric undefined: {0}")]
    MetricUndefined(String),
}
