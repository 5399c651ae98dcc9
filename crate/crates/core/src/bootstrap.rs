//! Parametric bootstrap calibration of the residual statistic.
//!
//! Under the fitted null model the bootstrap regenerates data as
//!
//! 1. draw covariate rows X* with replacement from the observed rows,
//! 2. draw R* ~ Bernoulli(π(X*;θ̂)) from the fitted marginal propensity,
//! 3. draw Y* from the fitted outcome law f(·|X*;ξ̂) only where R* = 1,
//! 4. refit θ̂* on the pseudo data and recompute T*_n,
//!
//! giving the conditional null law of T_n. The decision compares |T_n| to the
//! empirical (1−a)-quantile of |T*| (the ⌈(1−a)(B+1)⌉-th order statistic),
//! and the p-value uses the add-one convention (1 + #{|T*_b| ≥ |T_n|})/(B+1)
//! so it is never exactly zero. Replicates are drawn from per-index RNG
//! streams, so the result is bit-identical for a fixed seed regardless of
//! thread count, and enlarging B never changes earlier replicates.

use rand::Rng;
use rayon::prelude::*;

use crate::data::{Dataset, Design, Observation};
use crate::error::{Error, Result};
use crate::estimate::{fit_design, FitOptions, FitResult};
use crate::family::OutcomeFamily;
use crate::gof::{design_propensities, report_from_fit, tn_design, GofReport};
use crate::model::propensity;
use crate::rng::{child_rng, STREAM_BOOTSTRAP};

/// Outcome of a parametric-bootstrap calibration.
#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// Statistics from the replicates that refit successfully, in replicate
    /// order (length B − n_failed).
    pub t_star: Vec<f64>,
    /// Replicates discarded because the refit failed to converge.
    pub n_failed: usize,
    /// Empirical (1−a)-quantile of |t_star|.
    pub q_star: f64,
    /// Add-one bootstrap p-value in (0, 1].
    pub boot_p: f64,
    /// Sample variance of t_star (NaN when fewer than 2 replicates survive).
    pub sigma2_boot_diag: f64,
    /// Decision |T_n| > q_star.
    pub reject: bool,
}

/// One pseudo dataset drawn from the fitted null model.
///
/// Covariate rows are resampled with replacement from the data; the response
/// indicator and outcome are regenerated from the fitted model. Sampling is
/// always feasible because every resampled row already passed the tilt
/// constraint at θ̂ during the fit.
pub fn bootstrap_sample<R: Rng + ?Sized>(
    data: &Dataset,
    fit: &FitResult,
    fam: OutcomeFamily,
    rng: &mut R,
) -> Dataset {
    let n = data.n();
    let theta = &fit.theta_hat;
    let mut z = vec![0.0; data.out_cols.len() + 1];
    let rows: Vec<Observation> = (0..n)
        .map(|_| {
            let idx = rng.random_range(0..n);
            let x = data.rows[idx].x.clone();
            let pi = propensity(&x, theta, fam, &data.prop_cols, &data.out_cols)
                .expect("resampled rows are feasible at the fitted parameters");
            let observed = rng.random_bool(pi);
            let y = observed.then(|| {
                z[0] = 1.0;
                for (k, &c) in data.out_cols.iter().enumerate() {
                    z[1 + k] = x[c];
                }
                fam.sample(&z, &theta.xi, rng)
            });
            Observation { x, y }
        })
        .collect();
    Dataset::new(rows, data.prop_cols.clone(), data.out_cols.clone(), data.names.clone())
        .expect("resampled rows inherit validity from the source dataset")
}

/// Internal fast sampler: propensities precomputed in original row order.
fn sample_with_propensities<R: Rng + ?Sized>(
    data: &Dataset,
    pis: &[f64],
    theta: &crate::model::Theta,
    fam: OutcomeFamily,
    rng: &mut R,
    z: &mut [f64],
) -> Dataset {
    let n = data.n();
    let rows: Vec<Observation> = (0..n)
        .map(|_| {
            let idx = rng.random_range(0..n);
            let x = data.rows[idx].x.clone();
            let observed = rng.random_bool(pis[idx]);
            let y = observed.then(|| {
                z[0] = 1.0;
                for (k, &c) in data.out_cols.iter().enumerate() {
                    z[1 + k] = x[c];
                }
                fam.sample(z, &theta.xi, rng)
            });
            Observation { x, y }
        })
        .collect();
    Dataset::new(rows, data.prop_cols.clone(), data.out_cols.clone(), data.names.clone())
        .expect("resampled rows inherit validity from the source dataset")
}

/// Quantile and p-value conventions over the surviving replicates.
///
/// Returns (q_star, boot_p): q_star is the ⌈(1−a)(B_eff+1)⌉-th order
/// statistic of |t_star| (the maximum when that index overflows), and
/// boot_p = (1 + #{|t*_b| ≥ |t_n|})/(B_eff+1).
pub(crate) fn boot_summary(t_star: &[f64], t_n: f64, alpha: f64) -> (f64, f64) {
    let b_eff = t_star.len();
    let mut abs: Vec<f64> = t_star.iter().map(|t| t.abs()).collect();
    abs.sort_by(|a, b| a.total_cmp(b));
    let k = ((1.0 - alpha) * (b_eff as f64 + 1.0)).ceil() as usize;
    let q_star = if k <= b_eff { abs[k - 1] } else { abs[b_eff - 1] };
    let exceed = abs.iter().filter(|t| **t >= t_n.abs()).count();
    let boot_p = (1.0 + exceed as f64) / (b_eff as f64 + 1.0);
    (q_star, boot_p)
}

/// Sample variance of the surviving bootstrap statistics.
fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Finite-B diagnostic for the bootstrap null variance: the sample variance
/// of the surviving T* replicates, which estimates σ² under the null.
pub fn boot_null_variance_diag(result: &BootstrapResult) -> Result<f64> {
    if result.t_star.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "bootstrap variance diagnostic needs at least 2 replicates, have {}",
            result.t_star.len()
        )));
    }
    Ok(sample_variance(&result.t_star))
}

/// Full bootstrap goodness-of-fit test.
///
/// Fits θ̂ once, computes T_n and the plug-in calibration from that fit
/// (plug-in fields degrade to `None` if the asymptotic variance is
/// unavailable), then runs `b` warm-started bootstrap refits. Replicates
/// whose refit fails or does not converge are discarded and counted; more
/// than 10% failures aborts with an unstable-bootstrap error.
pub fn bootstrap_test(
    data: &Dataset,
    fam: OutcomeFamily,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<(GofReport, BootstrapResult)> {
    if b == 0 {
        return Err(Error::InvalidInput("bootstrap needs at least 1 replicate".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "significance level must be in (0,1), got {alpha}"
        )));
    }
    let opts = FitOptions::default();
    let design = Design::new(data);
    let fit = fit_design(&design, fam, &opts, None, true)?;
    if !fit.converged {
        return Err(Error::InvalidInput(
            "maximum-likelihood fit did not converge; no calibrated test is available".into(),
        ));
    }
    let report = report_from_fit(&design, fam, fit, alpha, true)?;
    let t_n = report.t_n;

    // π(x_i;θ̂) for every original row, indexed in input row order.
    let mut pis_design = Vec::new();
    design_propensities(&design, fam, &report.fit.theta_hat, &mut pis_design)?;
    let mut pis = vec![0.0; design.n];
    for i in 0..design.n {
        pis[design.orig_idx[i]] = pis_design[i];
    }
    let warm = report.fit.theta_hat.pack();
    let theta_hat = report.fit.theta_hat.clone();

    let draws: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|bi| {
            let mut rng = child_rng(seed, STREAM_BOOTSTRAP, bi as u64);
            let mut z = vec![0.0; data.out_cols.len() + 1];
            let bdata =
                sample_with_propensities(data, &pis, &theta_hat, fam, &mut rng, &mut z);
            let bdesign = Design::new(&bdata);
            match fit_design(&bdesign, fam, &opts, Some(&warm), false) {
                Ok(refit) if refit.converged => {
                    match tn_design(&bdesign, fam, &refit.theta_hat) {
                        Ok(t) if t.is_finite() => Some(t),
                        _ => None,
                    }
                }
                _ => None,
            }
        })
        .collect();

    let n_failed = draws.iter().filter(|d| d.is_none()).count();
    if 10 * n_failed > b {
        return Err(Error::UnstableBootstrap { n_failed, b });
    }
    let t_star: Vec<f64> = draws.into_iter().flatten().collect();
    let (q_star, boot_p) = boot_summary(&t_star, t_n, alpha);
    let sigma2_boot_diag = sample_variance(&t_star);
    let reject = t_n.abs() > q_star;

    Ok((
        report,
        BootstrapResult { t_star, n_failed, q_star, boot_p, sigma2_boot_diag, reject },
    ))
}
