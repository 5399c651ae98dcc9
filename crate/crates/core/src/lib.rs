//! Goodness-of-fit testing for logistic propensity models when outcomes are
//! missing not at random.
//!
//! The response indicator R is modeled as P(R=1|x,y) = 1/(1+exp(α+β⊤r(x)+γy)),
//! jointly with a parametric outcome law f(y|x;ξ). Integrating y out gives a
//! marginal propensity π(x;θ) = 1/(1+exp(α+β⊤r(x)+c(x;γ,ξ))) where c is the
//! cumulant (log moment generating function) of f at γ — the exponential-tilting
//! identity this crate is built around. The fit of that propensity is checked
//! by the standardized residual statistic
//!
//! T_n = n^{−1/2} Σ_i [ (r_i − π̂_i)² − π̂_i(1−π̂_i) ],
//!
//! with a plug-in normal calibration and a parametric bootstrap calibration.
//!
//! Module map: [`data`] holds datasets and the packed design, [`family`] the
//! outcome laws and their tilts, [`estimate`] the full-likelihood MLE,
//! [`gof`] the residual statistic and plug-in test, [`bootstrap`] the
//! parametric bootstrap, and [`sim`] the Monte-Carlo study harness.

pub mod bootstrap;
pub mod data;
pub mod error;
pub mod estimate;
pub mod family;
pub mod gof;
pub mod model;
mod newton;
pub mod numeric;
pub mod rng;
pub mod sim;
pub mod stats;

pub use bootstrap::{boot_null_variance_diag, bootstrap_sample, bootstrap_test, BootstrapResult};
pub use data::{Dataset, Design, Observation};
pub use error::{Error, Result};
pub use estimate::{fit_mle, log_likelihood, score, FitOptions, FitResult};
pub use family::OutcomeFamily;
pub use gof::{compute_tn, plugin_test, plugin_variance, residual_h_grad, GofReport, PluginVariance};
pub use model::{gamma_feasible_range, param_names, propensity, residual_h, Theta};
pub use sim::{
    draw_complete, draw_covariates, draw_joint, run_study, scenario, CovFn, RejectionSummary, Scenario,
    ScenarioSpec,
};
