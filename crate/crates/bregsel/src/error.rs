use thiserror::Error;

/// Errors produced across the estimation and selection pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sample was too small for the requested operation.
    #[error("sample too small: need at least {need}, got {got}")]
    SampleTooSmall { need: usize, got: usize },

    /// An estimator collapsed (zero sample variance, zero log-variance, ...).
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// The iterative shape update left the parameter space.
    #[error("estimation step failed: {0}")]
    StepFailure(String),

    /// Quadrature hit its depth limit; carries the best available value.
    #[error("quadrature failed to converge (partial estimate {partial:e})")]
    QuadratureNonConvergence { partial: f64 },

    /// No quadrature node survived truncation, so the plug-in estimate
    /// is identically zero by construction rather than by data.
    #[error("degenerate estimate: the truncation region contains no quadrature node")]
    DegenerateEstimate,

    /// The bootstrap spread collapsed or too few resamples survived.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// The family/method combination has no implemented estimator.
    #[error("unsupported fit: {0}")]
    UnsupportedFit(String),
}
