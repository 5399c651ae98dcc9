//! Residual goodness-of-fit statistic and its plug-in calibration.
//!
//! With π̂_i = π(x_i;θ̂) and residual contribution
//! H_i = (r_i−π̂_i)² − π̂_i(1−π̂_i), the statistic is T_n = n^{−1/2} Σ_i H_i.
//! Estimation noise in θ̂ propagates into T_n through the linearization
//! T_n ≈ n^{−1/2} Σ_i [H_i + h⊤J⁻¹ψ_i], so the plug-in variance is the
//! quadratic form
//!
//! σ̂² = (1, ĥ⊤Ĵ⁻¹) Σ̂ (1, ĥ⊤Ĵ⁻¹)⊤,
//!
//! where ĥ = n⁻¹ Σ_i ∂H_i/∂θ, Ĵ = n⁻¹ Σ_i ψ_i ψ_i⊤ is the outer-product
//! estimate of the information, and Σ̂ is the centered sample covariance of
//! the stacked per-row vector Z_i = (H_i, ψ_i⊤)⊤.
//! The plug-in test rejects when |T_n| > σ̂·z_{1−a/2}; the derivative
//! ∂H/∂θ = [2(π−r) − (1−2π)]·∂π/∂θ reuses the closed-form tilt gradients so
//! the statistic and the likelihood share one set of derivatives.

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, Design};
use crate::error::{Error, Result};
use crate::estimate::{check_outcome_domain, FitResult};
use crate::family::OutcomeFamily;
use crate::model::{residual_h, Theta};
use crate::numeric::{dot, pairwise_sum, sigmoid, ETA_CLAMP};
use crate::stats;

/// Sample analogues entering the plug-in variance.
#[derive(Debug, Clone)]
pub struct PluginVariance {
    /// The assembled variance estimate σ̂² ≥ 0.
    pub sigma2_hat: f64,
    /// ĥ = n⁻¹ Σ_i ∂H_i/∂θ at θ̂.
    pub h_hat: Vec<f64>,
    /// Ĵ estimated as the outer product of per-row scores, n⁻¹ Σ_i ψ_i ψ_i⊤.
    pub j_hat: DMatrix<f64>,
    /// Centered sample covariance Σ̂ of Z_i = (H_i, ψ_i⊤)⊤, divided by n−1.
    pub sigma_hat: DMatrix<f64>,
}

/// Result of the residual goodness-of-fit analysis on one dataset.
///
/// The plug-in fields are `None` when the asymptotic calibration was
/// unavailable (singular information matrix) and the caller asked for the
/// bootstrap anyway.
#[derive(Debug, Clone)]
pub struct GofReport {
    /// Residual statistic T_n.
    pub t_n: f64,
    /// T_n/√n, the scale-free model-misfit estimate.
    pub delta_hat: f64,
    /// Plug-in standard deviation σ̂.
    pub sigma_hat: Option<f64>,
    /// Two-sided normal p-value 2(1−Φ(|T_n|/σ̂)).
    pub plugin_p: Option<f64>,
    /// Plug-in decision |T_n| > σ̂·z_{1−a/2}.
    pub plugin_reject: Option<bool>,
    /// The underlying maximum-likelihood fit.
    pub fit: FitResult,
    /// Sample size.
    pub n: usize,
    /// Significance level the decision was taken at.
    pub alpha: f64,
}

/// Per-row propensities π(x_i;θ) over a packed design.
pub(crate) fn design_propensities(
    design: &Design,
    fam: OutcomeFamily,
    theta: &Theta,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    out.reserve(design.n);
    for i in 0..design.n {
        let rx = design.rx_row(i);
        let z = design.z_row(i);
        let lin = theta.alpha + dot(&theta.beta, rx);
        let c = fam.tilt_c(z, theta.gamma, &theta.xi).map_err(|e| match e {
            Error::TiltDivergence { gamma, lambda, .. } => Error::TiltDivergence {
                row: design.orig_idx[i],
                gamma,
                lambda,
            },
            other => other,
        })?;
        let eta = (lin + c).clamp(-ETA_CLAMP, ETA_CLAMP);
        out.push(sigmoid(-eta));
    }
    Ok(())
}

/// T_n over a packed design at θ.
pub(crate) fn tn_design(design: &Design, fam: OutcomeFamily, theta: &Theta) -> Result<f64> {
    let mut pis = Vec::new();
    design_propensities(design, fam, theta, &mut pis)?;
    let mut terms: Vec<f64> = Vec::with_capacity(design.n);
    for i in 0..design.n {
        terms.push(residual_h(pis[i], design.r[i] as u8));
    }
    Ok(pairwise_sum(&mut terms) / (design.n as f64).sqrt())
}

/// Residual statistic T_n = n^{−1/2} Σ_i [(r_i−π_i)² − π_i(1−π_i)] at θ.
pub fn compute_tn(data: &Dataset, theta: &Theta, fam: OutcomeFamily) -> Result<f64> {
    let design = Design::new(data);
    tn_design(&design, fam, theta)
}

/// Accumulate one row's ∂H/∂θ into `out` (packed order α, β, γ, ξ):
/// ∂H/∂θ = [2(π−r) − (1−2π)]·∂π/∂θ with ∂π/∂θ = −π(1−π)·(1, r(x), ∂c/∂γ, ∂c/∂ξ).
fn add_dh_dtheta(pi: f64, r: f64, rx: &[f64], dcg: f64, dxi: &[f64], out: &mut [f64]) {
    let dh_dpi = 2.0 * (pi - r) - (1.0 - 2.0 * pi);
    let scale = dh_dpi * (-pi * (1.0 - pi));
    let m = rx.len();
    out[0] += scale;
    for (k, &v) in rx.iter().enumerate() {
        out[1 + k] += scale * v;
    }
    out[m + 1] += scale * dcg;
    for (j, &v) in dxi.iter().enumerate() {
        out[m + 2 + j] += scale * v;
    }
}

/// Gradient of the residual H(π(x;θ), r) in the packed parameters
/// (α, β⊤, γ, ξ⊤) for a single covariate row.
///
/// This is the exact derivative of [`residual_h`] composed with
/// [`crate::model::propensity`]; the plug-in variance averages the same
/// per-row quantity into ĥ.
pub fn residual_h_grad(
    x: &[f64],
    r: u8,
    theta: &Theta,
    fam: OutcomeFamily,
    prop_cols: &[usize],
    out_cols: &[usize],
) -> Result<Vec<f64>> {
    if theta.beta.len() != prop_cols.len() {
        return Err(Error::InvalidInput(format!(
            "beta has length {} but {} propensity columns were selected",
            theta.beta.len(),
            prop_cols.len()
        )));
    }
    let fetch = |c: usize| {
        x.get(c)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("column index {c} out of range")))
    };
    let mut rx = Vec::with_capacity(prop_cols.len());
    for &c in prop_cols {
        rx.push(fetch(c)?);
    }
    let mut z = Vec::with_capacity(out_cols.len() + 1);
    z.push(1.0);
    for &c in out_cols {
        z.push(fetch(c)?);
    }
    let mut dxi = vec![0.0; theta.xi.len()];
    let c = fam.tilt_c(&z, theta.gamma, &theta.xi)?;
    let dcg = fam.tilt_c_grad(&z, theta.gamma, &theta.xi, &mut dxi)?;
    let lin = theta.alpha + dot(&theta.beta, &rx);
    let eta = (lin + c).clamp(-ETA_CLAMP, ETA_CLAMP);
    let pi = sigmoid(-eta);
    let mut out = vec![0.0; theta.dim()];
    add_dh_dtheta(pi, f64::from(r), &rx, dcg, &dxi, &mut out);
    Ok(out)
}

/// Plug-in variance over a packed design; `fit` must have converged with an
/// information matrix.
pub(crate) fn plugin_variance_design(
    design: &Design,
    fam: OutcomeFamily,
    fit: &FitResult,
) -> Result<PluginVariance> {
    if !fit.converged {
        return Err(Error::InvalidInput(
            "plug-in variance requires a converged fit".into(),
        ));
    }
    let dim = design.dim(fam);
    if fit.info_matrix.nrows() != dim {
        return Err(Error::InvalidInput(format!(
            "information matrix is {}×{}, expected {dim}×{dim}",
            fit.info_matrix.nrows(),
            fit.info_matrix.ncols()
        )));
    }
    let n = design.n;
    let nf = n as f64;
    let theta = &fit.theta_hat;
    let m = design.m;
    let xi = &theta.xi;
    let p = 1 + dim; // stacked Z_i = (H_i, ψ_i)

    // Per-row stacked vectors and the running mean of ∂H/∂θ.
    let mut zmat = DMatrix::<f64>::zeros(n, p);
    let mut h_hat = vec![0.0; dim];
    let mut dxi = vec![0.0; xi.len()];
    let mut lf = vec![0.0; xi.len()];
    for i in 0..n {
        let rx = design.rx_row(i);
        let z = design.z_row(i);
        let r = design.r[i];
        let lin = theta.alpha + dot(&theta.beta, rx);
        let c = fam.tilt_c(z, theta.gamma, xi)?;
        let dcg = fam.tilt_c_grad(z, theta.gamma, xi, &mut dxi)?;
        let eta = (lin + c).clamp(-ETA_CLAMP, ETA_CLAMP);
        let pi = sigmoid(-eta);
        let resid = pi - r;

        let h_i = residual_h(pi, r as u8);
        zmat[(i, 0)] = h_i;

        // ψ_i in packed order (α, β, γ, ξ).
        zmat[(i, 1)] = resid;
        for (k, &v) in rx.iter().enumerate() {
            zmat[(i, 2 + k)] = resid * v;
        }
        zmat[(i, 2 + m)] = resid * dcg;
        if r == 1.0 {
            fam.log_density_grad(design.y[i], z, xi, &mut lf)?;
        } else {
            lf.fill(0.0);
        }
        for j in 0..xi.len() {
            zmat[(i, 2 + m + 1 + j)] = lf[j] + resid * dxi[j];
        }

        add_dh_dtheta(pi, r, rx, dcg, &dxi, &mut h_hat);
    }
    for v in h_hat.iter_mut() {
        *v /= nf;
    }

    // Centered sample covariance of the rows of zmat, divided by n−1.
    let mut means = vec![0.0; p];
    for j in 0..p {
        let mut s = 0.0;
        for i in 0..n {
            s += zmat[(i, j)];
        }
        means[j] = s / nf;
    }
    let mut sigma = DMatrix::<f64>::zeros(p, p);
    if n > 1 {
        let denom = nf - 1.0;
        for a in 0..p {
            for b in a..p {
                let mut s = 0.0;
                for i in 0..n {
                    s += (zmat[(i, a)] - means[a]) * (zmat[(i, b)] - means[b]);
                }
                let v = s / denom;
                sigma[(a, b)] = v;
                sigma[(b, a)] = v;
            }
        }
    }

    // Ĵ as the outer product of scores, n⁻¹ Σ_i ψ_i ψ_i⊤, read straight off
    // the ψ block of zmat. Under the information identity this estimates the
    // same limit as the averaged Hessian, but in moderate samples it runs a
    // little large, which keeps σ̂² on the conservative side of the
    // cancellation between Var(H) and the correction terms.
    let mut j_hat = DMatrix::<f64>::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let mut s = 0.0;
            for i in 0..n {
                s += zmat[(i, 1 + a)] * zmat[(i, 1 + b)];
            }
            let v = s / nf;
            j_hat[(a, b)] = v;
            j_hat[(b, a)] = v;
        }
    }

    // v = (1, ĥ⊤Ĵ⁻¹): solve Ĵ w = ĥ rather than inverting.
    let w = j_hat
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&DVector::from_column_slice(&h_hat)))
        .ok_or_else(|| {
            Error::IllConditionedVariance(
                "score outer-product information is singular; the plug-in variance is unavailable"
                    .into(),
            )
        })?;
    let mut v = DVector::<f64>::zeros(p);
    v[0] = 1.0;
    for j in 0..dim {
        v[1 + j] = w[j];
    }
    let sigma2 = (v.transpose() * &sigma * &v)[(0, 0)];
    if !sigma2.is_finite() {
        return Err(Error::IllConditionedVariance(format!(
            "plug-in variance evaluated to {sigma2}"
        )));
    }

    Ok(PluginVariance {
        sigma2_hat: sigma2.max(0.0),
        h_hat,
        j_hat,
        sigma_hat: sigma,
    })
}

/// Plug-in variance of T_n at a converged fit.
pub fn plugin_variance(
    data: &Dataset,
    fit: &FitResult,
    fam: OutcomeFamily,
) -> Result<PluginVariance> {
    let design = Design::new(data);
    check_outcome_domain(&design, fam)?;
    plugin_variance_design(&design, fam, fit)
}

/// Assemble a [`GofReport`] from an existing fit over a packed design.
///
/// `want_plugin` controls whether the asymptotic calibration is attempted;
/// an ill-conditioned variance degrades to `None` plug-in fields only when
/// `plugin_optional` is set (bootstrap callers), otherwise it is an error.
pub(crate) fn report_from_fit(
    design: &Design,
    fam: OutcomeFamily,
    fit: FitResult,
    alpha: f64,
    plugin_optional: bool,
) -> Result<GofReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "significance level must be in (0,1), got {alpha}"
        )));
    }
    let n = design.n;
    let sqrt_n = (n as f64).sqrt();
    let delta_hat = tn_design(design, fam, &fit.theta_hat)? / sqrt_n;
    // Canonicalize so that delta_hat·√n reproduces t_n bit-for-bit rather
    // than up to a final rounding.
    let t_n = delta_hat * sqrt_n;

    let plugin = match plugin_variance_design(design, fam, &fit) {
        Ok(pv) => Some(pv),
        Err(Error::IllConditionedVariance(msg)) if plugin_optional => {
            let _ = msg;
            None
        }
        Err(e) => return Err(e),
    };
    let (sigma_hat, plugin_p, plugin_reject) = match plugin {
        Some(pv) => {
            let sd = pv.sigma2_hat.sqrt();
            if sd == 0.0 {
                if plugin_optional {
                    (None, None, None)
                } else {
                    return Err(Error::IllConditionedVariance(
                        "plug-in variance is zero; the normal calibration is degenerate"
                            .into(),
                    ));
                }
            } else {
                let z = stats::normal_quantile(1.0 - alpha / 2.0);
                (
                    Some(sd),
                    Some(stats::two_sided_p(t_n / sd)),
                    Some(t_n.abs() > sd * z),
                )
            }
        }
        None => (None, None, None),
    };

    Ok(GofReport {
        t_n,
        delta_hat,
        sigma_hat,
        plugin_p,
        plugin_reject,
        fit,
        n,
        alpha,
    })
}

/// Fit the model and run the plug-in test at level `alpha`.
pub fn plugin_test(data: &Dataset, fam: OutcomeFamily, alpha: f64) -> Result<GofReport> {
    let design = Design::new(data);
    let fit = crate::estimate::fit_design(
        &design,
        fam,
        &crate::estimate::FitOptions::default(),
        None,
        true,
    )?;
    if !fit.converged {
        return Err(Error::InvalidInput(
            "maximum-likelihood fit did not converge; no calibrated test is available".into(),
        ));
    }
    report_from_fit(&design, fam, fit, alpha, false)
}
