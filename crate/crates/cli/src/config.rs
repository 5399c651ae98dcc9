//! Run configuration: everything one test run needs, validated up front.

use std::fmt;
use std::path::PathBuf;

use nmar_gof::{Error, OutcomeFamily, Result};
use serde::{Deserialize, Serialize};

/// Which calibration of the residual statistic to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Normal approximation with the plug-in variance only.
    Plugin,
    /// Parametric bootstrap only.
    Bootstrap,
    /// Both calibrations in one run.
    Both,
}

impl Method {
    /// True when the run includes the bootstrap calibration.
    pub fn wants_bootstrap(&self) -> bool {
        matches!(self, Method::Bootstrap | Method::Both)
    }

    /// True when the run includes the plug-in calibration.
    pub fn wants_plugin(&self) -> bool {
        matches!(self, Method::Plugin | Method::Both)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Plugin => f.write_str("plugin"),
            Method::Bootstrap => f.write_str("bootstrap"),
            Method::Both => f.write_str("both"),
        }
    }
}

/// Configuration for one test run against a CSV file.
///
/// Columns are referenced by header name; the covariate matrix handed to the
/// model is the union of `propensity_cols` and `outcome_cols` in header
/// order. The outcome column may contain missing cells (empty or `NA`); the
/// response indicator is always derived from those cells, never read from a
/// user column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// CSV file with a header row.
    pub data_path: PathBuf,
    /// Header name of the outcome column.
    pub outcome_col: String,
    /// Header names entering the propensity linear predictor r(x).
    pub propensity_cols: Vec<String>,
    /// Header names entering the outcome regression (besides the intercept).
    pub outcome_cols: Vec<String>,
    /// Parametric family for the observed-outcome law.
    pub family: OutcomeFamily,
    /// Which calibration(s) to run.
    pub method: Method,
    /// Significance level of the decision.
    #[serde(rename = "a")]
    pub alpha: f64,
    /// Bootstrap replicates.
    #[serde(rename = "B")]
    pub boot_reps: usize,
    /// Root seed; all randomness flows from it through named child streams.
    pub seed: u64,
    /// Where to write the JSON report; `None` prints the summary only.
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    /// Check the internal invariants that do not need the CSV header.
    ///
    /// Header-dependent checks (the named columns actually exist) happen in
    /// [`crate::csv_io::load_csv`].
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "significance level must be in (0,1), got {}",
                self.alpha
            )));
        }
        if self.boot_reps == 0 {
            return Err(Error::InvalidInput(
                "bootstrap replicate count must be at least 1".into(),
            ));
        }
        for name in self.propensity_cols.iter().chain(&self.outcome_cols) {
            if *name == self.outcome_col {
                return Err(Error::InvalidInput(format!(
                    "outcome column '{}' cannot also be a covariate column",
                    self.outcome_col
                )));
            }
        }
        for (list, label) in [
            (&self.propensity_cols, "propensity"),
            (&self.outcome_cols, "outcome-model"),
        ] {
            for (i, name) in list.iter().enumerate() {
                if list[..i].contains(name) {
                    return Err(Error::InvalidInput(format!(
                        "{label} column '{name}' is listed twice"
                    )));
                }
            }
        }
        Ok(())
    }
}
