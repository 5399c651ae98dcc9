//! Error taxonomy for model evaluation, estimation, bootstrap, and simulation.
//!
//! Every variant carries a stable machine-readable code (see [`Error::code`])
//! so front ends can branch on failure kinds without string matching.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments or data that violate a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The exponential tilt diverges: for the Gamma family the moment
    /// generating function only exists when `gamma * lambda(x) < 1`.
    #[error("tilt divergence at row {row}: gamma = {gamma:.6}, scale lambda = {lambda:.6} (need gamma * lambda < 1)")]
    TiltDivergence { row: usize, gamma: f64, lambda: f64 },

    /// All outcomes observed or all missing; the propensity model is not
    /// estimable.
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    /// The likelihood was not finite at the optimizer's starting point.
    #[error("initialization failure: {0}")]
    Initialization(String),

    /// The estimated information matrix is numerically singular, so the
    /// plug-in variance cannot be assembled.
    #[error("ill-conditioned variance: {0}")]
    IllConditionedVariance(String),

    /// Too many bootstrap refits failed to converge for the resampling
    /// distribution to be trusted.
    #[error("unstable bootstrap: {n_failed} of {b} replicates failed to converge (limit 10%)")]
    UnstableBootstrap { n_failed: usize, b: usize },

    /// A simulation scenario produced a covariate draw at which the
    /// requested tilt does not exist.
    #[error("scenario infeasible at simulated row {row}: {detail}")]
    ScenarioInfeasible { row: usize, detail: String },

    /// Too many per-replication failures inside a simulation study.
    #[error("study failure: {n_failed} of {reps} replications failed (limit 10%)")]
    StudyFailure { n_failed: usize, reps: usize },
}

impl Error {
    /// Stable machine-readable code for this error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::TiltDivergence { .. } => "tilt-divergence",
            Error::DegenerateDesign(_) => "degenerate-design",
            Error::Initialization(_) => "initialization",
            Error::IllConditionedVariance(_) => "ill-conditioned-variance",
            Error::UnstableBootstrap { .. } => "unstable-bootstrap",
            Error::ScenarioInfeasible { .. } => "scenario-infeasible",
            Error::StudyFailure { .. } => "study-failure",
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
