//! Full-likelihood estimation of θ = (α, β, γ, ξ).
//!
//! The observed-data log-likelihood is
//!
//! ℓ_n(θ) = Σ_i [ r_i log f(y_i|x_i;ξ) + r_i log π(x_i;θ) + (1−r_i) log(1−π(x_i;θ)) ]
//!
//! with π the tilted logistic propensity. The score has components
//! ψ_α = (π−r), ψ_β = (π−r)·r(x), ψ_γ = (π−r)·∂c/∂γ, and
//! ψ_ξ = r·∂log f/∂ξ + (π−r)·∂c/∂ξ, all of which are assembled here from the
//! closed-form tilt derivatives; no numerical differentiation enters the
//! gradient. Curvature is finite-differenced from the score (see `newton`).
//!
//! `fit_mle` proceeds in three stages: (1) ξ from the complete-case outcome
//! model, (2) (α, β) from a logistic regression of R on r(x) with γ = 0,
//! (3) a joint damped-Newton pass from (α̂₀, β̂₀, 0, ξ̂₀). Bootstrap refits
//! reuse the machinery warm-started at the original θ̂.
//!
//! Evaluation detail: the per-row likelihood terms are accumulated with a
//! pairwise reduction over the canonical row order, which makes the value
//! independent of input row order and exactly additive under dataset
//! duplication. For the Bernoulli family the logistic map is evaluated in
//! odds space, `e^η = e^{lin} (1+e^{u+γ})/(1+e^u)`, so a score evaluation
//! needs only two exponentials per row; the clamp η ∈ [−35, 35] is applied
//! equivalently to e^η.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::data::{Dataset, Design};
use crate::error::{Error, Result};
use crate::family::{OutcomeFamily, LN_2PI};
use crate::model::Theta;
use crate::newton::{fd_hessian, maximize, NewtonOpts, Want};
use crate::numeric::{dot, ln_1p_exp, pairwise_sum, sigmoid, ETA_CLAMP, EXP_ARG_CLAMP};

/// Euler–Mascheroni constant (−ψ(1)), used to seed the Gamma intercept.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Optimizer settings for [`fit_mle`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Convergence threshold on the score infinity norm (summed score).
    pub tol_grad: f64,
    /// Stall threshold on the log-likelihood change.
    pub tol_ll: f64,
    /// Newton iteration cap.
    pub max_iter: usize,
    /// Relative step for finite-difference Hessians.
    pub fd_step_rel: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tol_grad: 1e-6, tol_ll: 1e-10, max_iter: 200, fd_step_rel: 1e-5 }
    }
}

impl FitOptions {
    fn newton(&self) -> NewtonOpts {
        NewtonOpts {
            tol_grad: self.tol_grad,
            tol_ll: self.tol_ll,
            max_iter: self.max_iter,
            fd_step_rel: self.fd_step_rel,
        }
    }
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Estimated parameters.
    pub theta_hat: Theta,
    /// Maximized log-likelihood ℓ_n(θ̂).
    pub loglik: f64,
    /// Infinity norm of the (summed) score at θ̂.
    pub score_inf_norm: f64,
    /// Observed information Ĵ = −n⁻¹ ∂²ℓ_n (symmetric).
    pub info_matrix: DMatrix<f64>,
    /// Parameter covariance Ĵ⁻¹/n.
    pub cov: DMatrix<f64>,
    /// Wald standard errors √diag(Ĵ⁻¹)/√n.
    pub se: Vec<f64>,
    /// True when the score criterion was met.
    pub converged: bool,
    /// Accepted Newton steps.
    pub iterations: usize,
    /// Set when a near-singular Hessian forced gradient steps or a
    /// pseudo-inverse covariance.
    pub ill_conditioned: bool,
}

/// Shared likelihood/score evaluator over a packed design.
pub(crate) struct LikelihoodEval<'a> {
    design: &'a Design,
    fam: OutcomeFamily,
    terms: Vec<f64>,
}

impl<'a> LikelihoodEval<'a> {
    pub(crate) fn new(design: &'a Design, fam: OutcomeFamily) -> Self {
        LikelihoodEval { design, fam, terms: Vec::with_capacity(design.n) }
    }

    /// Evaluate ℓ_n and/or the summed score at packed θ.
    ///
    /// Returns NaN for the value under `Want::ScoreOnly`.
    pub(crate) fn eval(&mut self, th: &[f64], want: Want, score: &mut [f64]) -> Result<f64> {
        let d = self.design;
        let (n, m, q) = (d.n, d.m, d.q);
        let alpha = th[0];
        let beta = &th[1..1 + m];
        let gamma = th[m + 1];
        let xi = &th[m + 2..];
        let want_ll = want != Want::ScoreOnly;
        let want_score = want != Want::ValueOnly;
        if want_score {
            score.fill(0.0);
        }
        if want_ll {
            self.terms.clear();
        }
        let t_hi = ETA_CLAMP.exp();
        let t_lo = (-ETA_CLAMP).exp();

        match self.fam {
            OutcomeFamily::Bernoulli => {
                let gc = gamma.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP);
                let eg = gc.exp();
                let egm1 = gc.exp_m1();
                for i in 0..n {
                    let rx = d.rx_row(i);
                    let z = d.z_row(i);
                    let lin = alpha + dot(beta, rx);
                    let u = dot(&xi[..q], z);
                    let uc = u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP);
                    let e_u = uc.exp();
                    let one_a = 1.0 + e_u;
                    let e_ug = e_u * eg;
                    let one_b = 1.0 + e_ug;
                    let linc = lin.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP);
                    let t = (linc.exp() * (one_b / one_a)).clamp(t_lo, t_hi);
                    let pi = 1.0 / (1.0 + t);
                    let r = d.r[i];
                    let obs = r == 1.0;
                    if want_score {
                        let resid = pi - r;
                        score[0] += resid;
                        for (k, &v) in rx.iter().enumerate() {
                            score[1 + k] += resid * v;
                        }
                        score[m + 1] += resid * (e_ug / one_b);
                        let ct = egm1 * (e_u / (one_a * one_b));
                        let base = if obs {
                            (d.y[i] - e_u / one_a) + resid * ct
                        } else {
                            resid * ct
                        };
                        for (k, &zv) in z.iter().enumerate() {
                            score[m + 2 + k] += base * zv;
                        }
                    }
                    if want_ll {
                        let ln1p_t = t.ln_1p();
                        let term = if obs {
                            d.y[i] * uc - e_u.ln_1p() - ln1p_t
                        } else {
                            t.ln() - ln1p_t
                        };
                        self.terms.push(term);
                    }
                }
            }
            OutcomeFamily::Normal => {
                let s_par = xi[q];
                let sigma2 = s_par.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let inv_s2 = 1.0 / sigma2;
                let gs2 = gamma * sigma2;
                let half_g2s2 = 0.5 * gamma * gamma * sigma2;
                for i in 0..n {
                    let rx = d.rx_row(i);
                    let z = d.z_row(i);
                    let lin = alpha + dot(beta, rx);
                    let u = dot(&xi[..q], z);
                    let c = gamma * u + half_g2s2;
                    let eta = (lin + c).clamp(-ETA_CLAMP, ETA_CLAMP);
                    let t = eta.exp();
                    let pi = 1.0 / (1.0 + t);
                    let r = d.r[i];
                    let obs = r == 1.0;
                    if want_score {
                        let resid = pi - r;
                        score[0] += resid;
                        for (k, &v) in rx.iter().enumerate() {
                            score[1 + k] += resid * v;
                        }
                        score[m + 1] += resid * (u + gs2);
                        let (base, tail) = if obs {
                            let dd = d.y[i] - u;
                            (dd * inv_s2 + resid * gamma,
                             -0.5 + 0.5 * dd * dd * inv_s2 + resid * half_g2s2)
                        } else {
                            (resid * gamma, resid * half_g2s2)
                        };
                        for (k, &zv) in z.iter().enumerate() {
                            score[m + 2 + k] += base * zv;
                        }
                        score[m + 2 + q] += tail;
                    }
                    if want_ll {
                        let ln1p_t = t.ln_1p();
                        let term = if obs {
                            let dd = d.y[i] - u;
                            -0.5 * LN_2PI - 0.5 * s_par - 0.5 * dd * dd * inv_s2 - ln1p_t
                        } else {
                            eta - ln1p_t
                        };
                        self.terms.push(term);
                    }
                }
            }
            OutcomeFamily::Gamma => {
                let kappa = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let ln_gk = if want_ll { ln_gamma(kappa) } else { 0.0 };
                let dig = if want_score { digamma(kappa) } else { 0.0 };
                for i in 0..n {
                    let rx = d.rx_row(i);
                    let z = d.z_row(i);
                    let lin = alpha + dot(beta, rx);
                    let u = dot(&xi[..q], z);
                    let uc = u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP);
                    let lam = uc.exp();
                    let glam = gamma * lam;
                    if glam >= 1.0 {
                        return Err(Error::TiltDivergence {
                            row: d.orig_idx[i],
                            gamma,
                            lambda: lam,
                        });
                    }
                    let one_m = 1.0 - glam;
                    let c = -kappa * (-glam).ln_1p();
                    let eta = (lin + c).clamp(-ETA_CLAMP, ETA_CLAMP);
                    let t = eta.exp();
                    let pi = 1.0 / (1.0 + t);
                    let r = d.r[i];
                    let obs = r == 1.0;
                    if want_score {
                        let resid = pi - r;
                        score[0] += resid;
                        for (k, &v) in rx.iter().enumerate() {
                            score[1 + k] += resid * v;
                        }
                        score[m + 1] += resid * (kappa * lam / one_m);
                        let ct = kappa * glam / one_m;
                        let (base, tail) = if obs {
                            (d.y[i] / lam - kappa + resid * ct,
                             kappa * (d.ln_y[i] - uc - dig) + resid * c)
                        } else {
                            (resid * ct, resid * c)
                        };
                        for (k, &zv) in z.iter().enumerate() {
                            score[m + 2 + k] += base * zv;
                        }
                        score[m + 2 + q] += tail;
                    }
                    if want_ll {
                        let ln1p_t = t.ln_1p();
                        let term = if obs {
                            (kappa - 1.0) * d.ln_y[i] - d.y[i] / lam - kappa * uc - ln_gk
                                - ln1p_t
                        } else {
                            eta - ln1p_t
                        };
                        self.terms.push(term);
                    }
                }
            }
        }

        Ok(if want_ll { pairwise_sum(&mut self.terms) } else { f64::NAN })
    }
}

/// Check parameter shapes against the dataset and family.
fn check_theta(data: &Dataset, theta: &Theta, fam: OutcomeFamily) -> Result<()> {
    if theta.beta.len() != data.prop_cols.len() {
        return Err(Error::InvalidInput(format!(
            "beta has length {} but the model has {} propensity columns",
            theta.beta.len(),
            data.prop_cols.len()
        )));
    }
    let q = data.out_cols.len() + 1;
    if theta.xi.len() != fam.xi_len(q) {
        return Err(Error::InvalidInput(format!(
            "xi has length {} but the {fam} family with {q} outcome columns needs {}",
            theta.xi.len(),
            fam.xi_len(q)
        )));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidInput("theta contains non-finite entries".into()));
    }
    Ok(())
}

/// Check observed outcomes lie in the family's support.
pub(crate) fn check_outcome_domain(design: &Design, fam: OutcomeFamily) -> Result<()> {
    for i in 0..design.n {
        if design.r[i] != 1.0 {
            continue;
        }
        let y = design.y[i];
        match fam {
            OutcomeFamily::Bernoulli if y != 0.0 && y != 1.0 => {
                return Err(Error::InvalidInput(format!(
                    "Bernoulli outcome must be 0 or 1; row {} has y = {y}",
                    design.orig_idx[i]
                )));
            }
            OutcomeFamily::Gamma if !(y > 0.0) => {
                return Err(Error::InvalidInput(format!(
                    "Gamma outcome must be positive; row {} has y = {y}",
                    design.orig_idx[i]
                )));
            }
            _ => {}
        }
    }
    Ok(())
}

/// Full observed-data log-likelihood ℓ_n(θ).
pub fn log_likelihood(data: &Dataset, theta: &Theta, fam: OutcomeFamily) -> Result<f64> {
    check_theta(data, theta, fam)?;
    let design = Design::new(data);
    check_outcome_domain(&design, fam)?;
    let mut eval = LikelihoodEval::new(&design, fam);
    let packed = theta.pack();
    let mut unused = vec![0.0; packed.len()];
    eval.eval(&packed, Want::ValueOnly, &mut unused)
}

/// Summed score Σ_i ψ_i(θ).
pub fn score(data: &Dataset, theta: &Theta, fam: OutcomeFamily) -> Result<Vec<f64>> {
    check_theta(data, theta, fam)?;
    let design = Design::new(data);
    check_outcome_domain(&design, fam)?;
    let mut eval = LikelihoodEval::new(&design, fam);
    let packed = theta.pack();
    let mut s = vec![0.0; packed.len()];
    eval.eval(&packed, Want::ScoreOnly, &mut s)?;
    Ok(s)
}

/// Stage 1: complete-case outcome-model MLE for ξ.
fn init_xi(design: &Design, fam: OutcomeFamily, opts: &NewtonOpts) -> Result<Vec<f64>> {
    let q = design.q;
    match fam {
        OutcomeFamily::Bernoulli => {
            // Logistic regression of y on z over observed rows.
            let mut terms: Vec<f64> = Vec::with_capacity(design.n_obs);
            let mut obj = |w: &[f64], want: Want, sc: &mut [f64]| -> Result<f64> {
                let want_ll = want != Want::ScoreOnly;
                let want_score = want != Want::ValueOnly;
                if want_score {
                    sc.fill(0.0);
                }
                terms.clear();
                for i in 0..design.n {
                    if design.r[i] != 1.0 {
                        continue;
                    }
                    let z = design.z_row(i);
                    let u = dot(w, z);
                    if want_score {
                        let p = sigmoid(u);
                        let e = design.y[i] - p;
                        for (k, &zv) in z.iter().enumerate() {
                            sc[k] += e * zv;
                        }
                    }
                    if want_ll {
                        terms.push(design.y[i] * u - ln_1p_exp(u));
                    }
                }
                Ok(if want_ll { pairwise_sum(&mut terms) } else { f64::NAN })
            };
            let out = maximize(q, &vec![0.0; q], opts, &mut obj)?;
            Ok(out.x)
        }
        OutcomeFamily::Normal => {
            // Closed form: OLS coefficients and the MLE variance on the
            // complete cases.
            let w = ols(design, &design.y)?;
            let mut rss = 0.0;
            for i in 0..design.n {
                if design.r[i] != 1.0 {
                    continue;
                }
                let e = design.y[i] - dot(&w, design.z_row(i));
                rss += e * e;
            }
            let s = (rss.max(1e-300) / design.n_obs as f64).ln();
            let mut xi = w;
            xi.push(s);
            Ok(xi)
        }
        OutcomeFamily::Gamma => {
            // Seed with OLS of log y (E log Y = ψ(κ) + log λ; at κ = 1 the
            // intercept shifts by ψ(1) = −γ_E), then Newton on the
            // complete-case Gamma likelihood over (w, log κ).
            let mut w0 = ols(design, &design.ln_y)?;
            w0[0] += EULER_GAMMA;
            let mut x0 = w0;
            x0.push(0.0);
            let mut terms: Vec<f64> = Vec::with_capacity(design.n_obs);
            let mut obj = |v: &[f64], want: Want, sc: &mut [f64]| -> Result<f64> {
                let want_ll = want != Want::ScoreOnly;
                let want_score = want != Want::ValueOnly;
                if want_score {
                    sc.fill(0.0);
                }
                terms.clear();
                let kappa = v[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let ln_gk = if want_ll { ln_gamma(kappa) } else { 0.0 };
                let dig = if want_score { digamma(kappa) } else { 0.0 };
                for i in 0..design.n {
                    if design.r[i] != 1.0 {
                        continue;
                    }
                    let z = design.z_row(i);
                    let u = dot(&v[..q], z);
                    let uc = u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP);
                    let lam = uc.exp();
                    if want_score {
                        let base = design.y[i] / lam - kappa;
                        for (k, &zv) in z.iter().enumerate() {
                            sc[k] += base * zv;
                        }
                        sc[q] += kappa * (design.ln_y[i] - uc - dig);
                    }
                    if want_ll {
                        terms.push(
                            (kappa - 1.0) * design.ln_y[i] - design.y[i] / lam - kappa * uc
                                - ln_gk,
                        );
                    }
                }
                Ok(if want_ll { pairwise_sum(&mut terms) } else { f64::NAN })
            };
            let out = maximize(q + 1, &x0, opts, &mut obj)?;
            Ok(out.x)
        }
    }
}

/// Least squares of `target` on the outcome design over observed rows.
fn ols(design: &Design, target: &[f64]) -> Result<Vec<f64>> {
    let q = design.q;
    let mut xtx = DMatrix::<f64>::zeros(q, q);
    let mut xty = DVector::<f64>::zeros(q);
    for i in 0..design.n {
        if design.r[i] != 1.0 {
            continue;
        }
        let z = design.z_row(i);
        let t = target[i];
        for a in 0..q {
            xty[a] += z[a] * t;
            for b in a..q {
                xtx[(a, b)] += z[a] * z[b];
            }
        }
    }
    for a in 0..q {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }
    if let Some(ch) = xtx.clone().cholesky() {
        return Ok(ch.solve(&xty).iter().copied().collect());
    }
    xtx.svd(true, true)
        .solve(&xty, 1e-12)
        .map(|v| v.iter().copied().collect())
        .map_err(|_| Error::DegenerateDesign("outcome design is rank deficient".into()))
}

/// Stage 2: logistic regression of R on r(x) in the model's sign convention
/// P(R=1) = 1/(1+exp(α+β⊤r(x))).
fn init_propensity(design: &Design, opts: &NewtonOpts) -> Result<Vec<f64>> {
    let m = design.m;
    let rbar = design.n_obs as f64 / design.n as f64;
    let a0 = ((1.0 - rbar) / rbar).ln();
    let mut x0 = vec![0.0; m + 1];
    x0[0] = a0;
    let mut terms: Vec<f64> = Vec::with_capacity(design.n);
    let mut obj = |v: &[f64], want: Want, sc: &mut [f64]| -> Result<f64> {
        let want_ll = want != Want::ScoreOnly;
        let want_score = want != Want::ValueOnly;
        if want_score {
            sc.fill(0.0);
        }
        terms.clear();
        for i in 0..design.n {
            let rx = design.rx_row(i);
            let lin = v[0] + dot(&v[1..], rx);
            if want_score {
                let resid = sigmoid(-lin) - design.r[i];
                sc[0] += resid;
                for (k, &rv) in rx.iter().enumerate() {
                    sc[1 + k] += resid * rv;
                }
            }
            if want_ll {
                terms.push(if design.r[i] == 1.0 {
                    -ln_1p_exp(lin)
                } else {
                    -ln_1p_exp(-lin)
                });
            }
        }
        Ok(if want_ll { pairwise_sum(&mut terms) } else { f64::NAN })
    };
    let out = maximize(m + 1, &x0, opts, &mut obj)?;
    Ok(out.x)
}

/// Largest feasible γ for this design under ξ (open bound; +∞ unless Gamma).
pub(crate) fn design_gamma_hi(design: &Design, fam: OutcomeFamily, xi: &[f64]) -> f64 {
    match fam {
        OutcomeFamily::Bernoulli | OutcomeFamily::Normal => f64::INFINITY,
        OutcomeFamily::Gamma => {
            let q = design.q;
            let mut u_max = f64::NEG_INFINITY;
            for i in 0..design.n {
                u_max = u_max.max(dot(&xi[..q], design.z_row(i)));
            }
            (-u_max.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP)).exp()
        }
    }
}

/// Structural validations shared by every fit entry point.
pub(crate) fn check_fit_preconditions(design: &Design, fam: OutcomeFamily) -> Result<()> {
    let dim = design.dim(fam);
    if design.n < dim {
        return Err(Error::InvalidInput(format!(
            "{} rows cannot identify {dim} parameters",
            design.n
        )));
    }
    if design.n_obs == 0 {
        return Err(Error::DegenerateDesign("every outcome is missing".into()));
    }
    if design.n_obs == design.n {
        return Err(Error::DegenerateDesign("every outcome is observed".into()));
    }
    check_outcome_domain(design, fam)
}

/// Internal fit on a packed design. `warm` skips the staged initialization;
/// `want_info` controls whether the final Hessian, covariance, and standard
/// errors are produced (bootstrap refits skip them).
pub(crate) fn fit_design(
    design: &Design,
    fam: OutcomeFamily,
    opts: &FitOptions,
    warm: Option<&[f64]>,
    want_info: bool,
) -> Result<FitResult> {
    check_fit_preconditions(design, fam)?;
    let nopts = opts.newton();
    let dim = design.dim(fam);
    let m = design.m;

    let mut x0 = match warm {
        Some(w) => {
            if w.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "warm start has length {}, expected {dim}",
                    w.len()
                )));
            }
            w.to_vec()
        }
        None => {
            let xi0 = init_xi(design, fam, &nopts)?;
            let ab0 = init_propensity(design, &nopts)?;
            let mut v = Vec::with_capacity(dim);
            v.extend_from_slice(&ab0);
            v.push(0.0);
            v.extend_from_slice(&xi0);
            v
        }
    };
    // Keep the γ start strictly inside the feasible interval.
    let hi = design_gamma_hi(design, fam, &x0[m + 2..]);
    if hi.is_finite() && x0[m + 1] >= 0.9 * hi {
        x0[m + 1] = 0.9 * hi;
    }

    let mut eval = LikelihoodEval::new(design, fam);
    let mut obj =
        |x: &[f64], want: Want, sc: &mut [f64]| -> Result<f64> { eval.eval(x, want, sc) };
    let out = maximize(dim, &x0, &nopts, &mut obj)?;

    let (info, cov, se, mut ill) = if want_info {
        let hess = fd_hessian(dim, &out.x, nopts.fd_step_rel, &mut obj)?;
        let neg_h = hess.map(|v| -v);
        let n = design.n as f64;
        let info = neg_h.map(|v| v / n);
        let (cov, pseudo) = match neg_h.clone().cholesky() {
            Some(ch) => (ch.inverse(), false),
            None => {
                let pinv = neg_h
                    .pseudo_inverse(1e-12)
                    .map_err(|e| Error::IllConditionedVariance(e.to_string()))?;
                (pinv, true)
            }
        };
        let se: Vec<f64> = (0..dim).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();
        (info, cov, se, pseudo)
    } else {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), Vec::new(), false)
    };
    ill = ill || out.ill_conditioned;

    Ok(FitResult {
        theta_hat: Theta::unpack(&out.x, m)?,
        loglik: out.ll,
        score_inf_norm: out.score_inf,
        info_matrix: info,
        cov,
        se,
        converged: out.converged,
        iterations: out.iterations,
        ill_conditioned: ill,
    })
}

/// Maximum-likelihood fit of the tilted propensity model.
///
/// Three-stage initialization (complete-case ξ, marginal logistic (α, β),
/// then joint Newton), damped-Newton optimization, and Wald standard errors
/// from the observed information. A non-converged run is reported through
/// the `converged` flag rather than an error so callers can decide.
pub fn fit_mle(data: &Dataset, fam: OutcomeFamily, opts: &FitOptions) -> Result<FitResult> {
    let design = Design::new(data);
    fit_design(&design, fam, opts, None, true)
}
