//! Versioned JSON reports and human-readable text summaries.
//!
//! Every numeric field in the JSON report is either finite or explicitly
//! `null` with a warning saying what was dropped — consumers never see NaN
//! or infinities. Reports carry a schema tag so files can be validated
//! against the schema shipped with the crate.

use nmar_gof::sim::RejectionSummary;
use nmar_gof::stats::two_sided_p;
use nmar_gof::{BootstrapResult, Dataset, GofReport, OutcomeFamily};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Schema identifier written into every report.
pub const SCHEMA_VERSION: &str = "nmar-gof/1";

/// One coefficient row of the fit table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRow {
    /// Parameter name (alpha, beta:\<col\>, gamma, then family parameters).
    pub name: String,
    /// Point estimate.
    pub estimate: Option<f64>,
    /// Wald standard error.
    pub se: Option<f64>,
    /// Wald statistic estimate/se.
    pub wald_z: Option<f64>,
    /// Two-sided normal p-value of the Wald statistic.
    pub p: Option<f64>,
}

/// Full JSON report of one fit or test run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonReport {
    /// Schema identifier, always [`SCHEMA_VERSION`].
    pub schema: String,
    /// Echo of the run configuration.
    pub config: RunConfig,
    /// Coefficient table of the maximum-likelihood fit.
    pub fit: Vec<FitRow>,
    /// Whether the fit met its convergence criterion.
    pub converged: bool,
    /// Maximized log-likelihood.
    pub loglik: Option<f64>,
    /// Residual statistic T_n (null unless a test ran).
    pub t_n: Option<f64>,
    /// Plug-in standard deviation of T_n.
    pub sigma_hat: Option<f64>,
    /// Plug-in two-sided p-value.
    pub plugin_p: Option<f64>,
    /// Plug-in decision at the configured level.
    pub plugin_reject: Option<bool>,
    /// Bootstrap p-value.
    pub boot_p: Option<f64>,
    /// Bootstrap critical value (empirical (1−a)-quantile of |T*|).
    pub q_star: Option<f64>,
    /// Bootstrap replicates that refit successfully.
    pub b_eff: Option<usize>,
    /// Bootstrap decision at the configured level.
    pub boot_reject: Option<bool>,
    /// Rows in the data file.
    pub n: usize,
    /// Rows with a missing outcome.
    pub n_missing: usize,
    /// n_missing / n.
    pub missing_rate: f64,
    /// Everything the run wants the reader to know about degraded fields.
    pub warnings: Vec<String>,
}

/// Keep a number only if it is finite; otherwise null it out with a warning.
fn finite_or_null(value: f64, label: &str, warnings: &mut Vec<String>) -> Option<f64> {
    if value.is_finite() {
        Some(value)
    } else {
        warnings.push(format!("{label} was not finite ({value}) and is reported as null"));
        None
    }
}

/// Build the coefficient table from a converged (or best-effort) fit.
fn fit_table(
    data: &Dataset,
    fam: OutcomeFamily,
    report: &GofReport,
    warnings: &mut Vec<String>,
) -> Vec<FitRow> {
    let names = nmar_gof::param_names(data, fam);
    let estimates = report.fit.theta_hat.pack();
    let mut rows = Vec::with_capacity(names.len());
    for (k, name) in names.into_iter().enumerate() {
        let estimate = finite_or_null(estimates[k], &format!("estimate of {name}"), warnings);
        let se_raw = report.fit.se.get(k).copied().unwrap_or(f64::NAN);
        // A zero standard error only happens on degenerate input; keep the
        // estimate but drop the derived columns.
        let se = match finite_or_null(se_raw, &format!("se of {name}"), warnings) {
            Some(s) if s > 0.0 => Some(s),
            Some(_) => {
                warnings.push(format!("se of {name} is zero; Wald columns are reported as null"));
                None
            }
            None => None,
        };
        let wald_z = match (estimate, se) {
            (Some(e), Some(s)) => finite_or_null(e / s, &format!("wald_z of {name}"), warnings),
            _ => None,
        };
        let p = wald_z.map(two_sided_p);
        rows.push(FitRow { name, estimate, se, wald_z, p });
    }
    rows
}

/// Assemble the JSON report for one fit or test run.
///
/// `gof` carries the fit and (when a test ran) the statistic and plug-in
/// calibration; `boot` is present when the bootstrap ran. `tested` is false
/// for a fit-only run, which leaves every test field null.
pub fn build_report(
    cfg: &RunConfig,
    data: &Dataset,
    gof: &GofReport,
    boot: Option<&BootstrapResult>,
    tested: bool,
) -> JsonReport {
    let mut warnings = Vec::new();
    if let Some(w) = data.instrument_warning() {
        warnings.push(w);
    }
    if !gof.fit.converged {
        warnings.push(format!(
            "maximum-likelihood fit did not converge in {} steps (score norm {:.3e})",
            gof.fit.iterations, gof.fit.score_inf_norm
        ));
    }
    if gof.fit.ill_conditioned {
        warnings.push("observed information was ill-conditioned; standard errors are approximate".into());
    }
    let fit = fit_table(data, cfg.family, gof, &mut warnings);
    let loglik = finite_or_null(gof.fit.loglik, "loglik", &mut warnings);

    let t_n = tested.then(|| finite_or_null(gof.t_n, "t_n", &mut warnings)).flatten();
    let wants_plugin = tested && cfg.method.wants_plugin();
    let sigma_hat = (wants_plugin && gof.sigma_hat.is_some())
        .then(|| finite_or_null(gof.sigma_hat.unwrap(), "sigma_hat", &mut warnings))
        .flatten();
    if wants_plugin && gof.sigma_hat.is_none() {
        warnings.push(
            "plug-in variance was unavailable (singular score outer product); plug-in fields are null"
                .into(),
        );
    }
    let plugin_p = (wants_plugin && gof.plugin_p.is_some())
        .then(|| finite_or_null(gof.plugin_p.unwrap(), "plugin_p", &mut warnings))
        .flatten();
    let plugin_reject = if wants_plugin { gof.plugin_reject } else { None };

    let boot_p = boot.and_then(|b| finite_or_null(b.boot_p, "boot_p", &mut warnings));
    let q_star = boot.and_then(|b| finite_or_null(b.q_star, "q_star", &mut warnings));
    let b_eff = boot.map(|b| b.t_star.len());
    let boot_reject = boot.map(|b| b.reject);
    if let Some(b) = boot {
        if b.n_failed > 0 {
            warnings.push(format!(
                "{} of {} bootstrap replicates failed to refit and were discarded",
                b.n_failed, cfg.boot_reps
            ));
        }
    }

    JsonReport {
        schema: SCHEMA_VERSION.to_string(),
        config: cfg.clone(),
        fit,
        converged: gof.fit.converged,
        loglik,
        t_n,
        sigma_hat,
        plugin_p,
        plugin_reject,
        boot_p,
        q_star,
        b_eff,
        boot_reject,
        n: data.n(),
        n_missing: data.n_missing(),
        missing_rate: data.missing_rate(),
        warnings,
    }
}

/// Serialize a report as pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "--".to_string(),
    }
}

fn decision_word(reject: Option<bool>) -> &'static str {
    match reject {
        Some(true) => "reject",
        Some(false) => "fail to reject",
        None => "no decision",
    }
}

/// Render the human-readable summary printed to standard output.
pub fn human_summary(rep: &JsonReport) -> String {
    let mut out = String::new();
    let cfg = &rep.config;
    out.push_str(&format!(
        "n = {} ({} missing, rate {:.3})\n",
        rep.n, rep.n_missing, rep.missing_rate
    ));
    out.push_str(&format!(
        "family = {}, method = {}, a = {}, B = {}, seed = {}\n",
        cfg.family, cfg.method, cfg.alpha, cfg.boot_reps, cfg.seed
    ));
    out.push_str(&format!(
        "fit: converged = {}, loglik = {}\n",
        rep.converged,
        fmt_opt(rep.loglik)
    ));
    let name_w = rep.fit.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    out.push_str(&format!(
        "  {:name_w$}  {:>10}  {:>10}  {:>8}  {:>7}\n",
        "name", "estimate", "se", "wald_z", "p"
    ));
    for row in &rep.fit {
        out.push_str(&format!(
            "  {:name_w$}  {:>10}  {:>10}  {:>8}  {:>7}\n",
            row.name,
            fmt_opt(row.estimate),
            fmt_opt(row.se),
            match row.wald_z {
                Some(z) => format!("{z:.3}"),
                None => "--".into(),
            },
            match row.p {
                Some(p) => format!("{p:.3}"),
                None => "--".into(),
            },
        ));
    }
    if let Some(t) = rep.t_n {
        out.push_str(&format!("t_n = {t:.4}\n"));
        if rep.config.method.wants_plugin() {
            out.push_str(&format!(
                "plugin:    sigma_hat = {}, p = {} -> {} at a = {}\n",
                fmt_opt(rep.sigma_hat),
                fmt_opt(rep.plugin_p),
                decision_word(rep.plugin_reject),
                cfg.alpha
            ));
        }
        if rep.config.method.wants_bootstrap() {
            out.push_str(&format!(
                "bootstrap: B_eff = {}, q* = {}, p = {} -> {} at a = {}\n",
                rep.b_eff.map_or("--".to_string(), |b| b.to_string()),
                fmt_opt(rep.q_star),
                fmt_opt(rep.boot_p),
                decision_word(rep.boot_reject),
                cfg.alpha
            ));
        }
    }
    for w in &rep.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

/// Configuration echo for a simulation study run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Example number (1 Bernoulli, 2 Normal, 3 Gamma).
    pub example: u8,
    /// Scenario label I–V.
    pub scenario: String,
    /// Sample size per replication.
    pub n: usize,
    /// Replications.
    pub reps: usize,
    /// Bootstrap replicates per replication.
    #[serde(rename = "B")]
    pub boot_reps: usize,
    /// Significance level.
    #[serde(rename = "a")]
    pub alpha: f64,
    /// Root seed.
    pub seed: u64,
}

/// JSON payload written by the simulate command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    /// Schema identifier, always [`SCHEMA_VERSION`].
    pub schema: String,
    /// Echo of the study configuration.
    pub config: StudyConfig,
    /// The rejection-rate summary.
    pub summary: RejectionSummary,
}

/// Render the aligned text table for one study cell.
pub fn study_table(rep: &StudyReport) -> String {
    let s = &rep.summary;
    let mut out = String::new();
    out.push_str(&format!(
        "example {} ({}), scenario {}: n = {}, reps = {}, B = {}, a = {}, seed = {}\n",
        rep.config.example,
        s.scenario.outcome,
        rep.config.scenario,
        rep.config.n,
        rep.config.reps,
        rep.config.boot_reps,
        rep.config.alpha,
        rep.config.seed
    ));
    out.push_str(&format!(
        "  {:>10}  {:>10}  {:>10}  {:>8}  {:>16}\n",
        "boot_rate", "plugin", "mc_se", "failed", "plugin_skipped"
    ));
    out.push_str(&format!(
        "  {:>10.3}  {:>10.3}  {:>10.4}  {:>8}  {:>16}\n",
        s.boot_rate, s.plugin_rate, s.mc_se, s.failed_reps, s.plugin_skipped
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonfinite_values_become_null_with_a_warning() {
        let mut warnings = Vec::new();
        assert_eq!(finite_or_null(1.5, "x", &mut warnings), Some(1.5));
        assert!(warnings.is_empty());
        assert_eq!(finite_or_null(f64::NAN, "t_n", &mut warnings), None);
        assert_eq!(finite_or_null(f64::INFINITY, "sigma_hat", &mut warnings), None);
        assert_eq!(warnings.len(), 2);
        assert!(warnings[0].contains("t_n"));
    }
}
