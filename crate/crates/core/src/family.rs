//! Outcome families for the complete-case law f(y | x; ξ) and their
//! exponential tilts.
//!
//! Three families are built in. Writing `z = (1, x_out)` for the outcome
//! design row (intercept always prepended) and `u = w·z` for its linear
//! index, the parameter layouts are
//!
//! * Bernoulli: ξ = w, success probability p(x) = logistic(u);
//! * Normal:    ξ = (w, s), mean μ(x) = u, variance σ² = eˢ;
//! * Gamma:     ξ = (w, k), scale λ(x) = eᵘ, shape κ = eᵏ.
//!
//! Variance and shape are carried on the log scale so Newton iterations are
//! unconstrained. The tilt term
//!
//! c(x; γ, ξ) = log ∫ e^{γy} f(y | x; ξ) dy
//!
//! is the log moment generating function of f at γ and has closed forms:
//! Bernoulli `log(1 − p + p e^γ)`, Normal `γμ + γ²σ²/2`, and Gamma
//! `−κ log(1 − γλ)` (finite only while `γλ < 1`). The closed forms — not
//! quadrature — are used everywhere at runtime; the integral definition
//! survives only in test oracles.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::numeric::{dot, ln_1p_exp, sigmoid, EXP_ARG_CLAMP};

/// `ln(2π)`, for the normal density normalizer.
pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Parametric family for the observed-outcome conditional law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeFamily {
    /// Binary outcome; logistic regression for P(Y=1 | x, R=1).
    Bernoulli,
    /// Gaussian outcome with covariate-free variance.
    Normal,
    /// Gamma outcome with log-linear scale and covariate-free shape.
    Gamma,
}

impl std::fmt::Display for OutcomeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutcomeFamily::Bernoulli => write!(f, "bernoulli"),
            OutcomeFamily::Normal => write!(f, "normal"),
            OutcomeFamily::Gamma => write!(f, "gamma"),
        }
    }
}

impl std::str::FromStr for OutcomeFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(OutcomeFamily::Bernoulli),
            "normal" => Ok(OutcomeFamily::Normal),
            "gamma" => Ok(OutcomeFamily::Gamma),
            other => Err(Error::InvalidInput(format!(
                "unknown outcome family '{other}' (expected bernoulli, normal, or gamma)"
            ))),
        }
    }
}

impl OutcomeFamily {
    /// Length of ξ for an outcome design row of width `q` (intercept included).
    pub fn xi_len(&self, q: usize) -> usize {
        match self {
            OutcomeFamily::Bernoulli => q,
            OutcomeFamily::Normal | OutcomeFamily::Gamma => q + 1,
        }
    }

    /// Human-readable labels for the entries of ξ, given outcome covariate names.
    pub fn xi_names(&self, out_names: &[String]) -> Vec<String> {
        let mut names = vec!["outcome.intercept".to_string()];
        names.extend(out_names.iter().map(|n| format!("outcome.{n}")));
        match self {
            OutcomeFamily::Bernoulli => {}
            OutcomeFamily::Normal => names.push("outcome.log_sigma2".to_string()),
            OutcomeFamily::Gamma => names.push("outcome.log_kappa".to_string()),
        }
        names
    }

    fn check_xi(&self, z: &[f64], xi: &[f64]) -> Result<()> {
        let want = self.xi_len(z.len());
        if xi.len() != want {
            return Err(Error::InvalidInput(format!(
                "xi has length {} but the {} family with {} outcome columns needs {}",
                xi.len(),
                self,
                z.len(),
                want
            )));
        }
        Ok(())
    }

    /// Log density (or log mass) `log f(y | x; ξ)` at the design row `z`.
    pub fn log_density(&self, y: f64, z: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_xi(z, xi)?;
        let q = z.len();
        let u = dot(&xi[..q], z);
        match self {
            OutcomeFamily::Bernoulli => {
                if y != 0.0 && y != 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "Bernoulli outcome must be 0 or 1, got {y}"
                    )));
                }
                Ok(y * u - ln_1p_exp(u))
            }
            OutcomeFamily::Normal => {
                let s = xi[q];
                let sigma2 = s.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let d = y - u;
                Ok(-0.5 * LN_2PI - 0.5 * s - d * d / (2.0 * sigma2))
            }
            OutcomeFamily::Gamma => {
                if !(y > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "Gamma outcome must be positive, got {y}"
                    )));
                }
                let kappa = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let uc = u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP);
                let lam = uc.exp();
                Ok((kappa - 1.0) * y.ln() - y / lam - kappa * uc - ln_gamma(kappa))
            }
        }
    }

    /// Gradient of `log f` with respect to ξ, written into `out`.
    pub fn log_density_grad(&self, y: f64, z: &[f64], xi: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_xi(z, xi)?;
        assert_eq!(out.len(), xi.len(), "gradient buffer length mismatch");
        let q = z.len();
        let u = dot(&xi[..q], z);
        match self {
            OutcomeFamily::Bernoulli => {
                let p = sigmoid(u);
                for j in 0..q {
                    out[j] = (y - p) * z[j];
                }
            }
            OutcomeFamily::Normal => {
                let sigma2 = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let d = y - u;
                for j in 0..q {
                    out[j] = d / sigma2 * z[j];
                }
                out[q] = -0.5 + d * d / (2.0 * sigma2);
            }
            OutcomeFamily::Gamma => {
                let kappa = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let uc = u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP);
                let lam = uc.exp();
                let lf = y / lam - kappa;
                for j in 0..q {
                    out[j] = lf * z[j];
                }
                // ∂/∂k with κ = e^k: chain rule multiplies ∂/∂κ by κ.
                out[q] = kappa * (y.ln() - uc - digamma(kappa));
            }
        }
        Ok(())
    }

    /// Tilt term `c(x; γ, ξ)`: the log MGF of f(·|x;ξ) at γ.
    ///
    /// Exactly zero (bit-for-bit) at γ = 0 for every family.
    pub fn tilt_c(&self, z: &[f64], gamma: f64, xi: &[f64]) -> Result<f64> {
        self.check_xi(z, xi)?;
        let q = z.len();
        let u = dot(&xi[..q], z);
        match self {
            OutcomeFamily::Bernoulli => Ok(ln_1p_exp(u + gamma) - ln_1p_exp(u)),
            OutcomeFamily::Normal => {
                let sigma2 = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                Ok(gamma * u + 0.5 * gamma * gamma * sigma2)
            }
            OutcomeFamily::Gamma => {
                let kappa = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let lam = u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let glam = gamma * lam;
                if glam >= 1.0 {
                    return Err(Error::TiltDivergence { row: 0, gamma, lambda: lam });
                }
                Ok(-kappa * (-glam).ln_1p())
            }
        }
    }

    /// Partials of [`tilt_c`](Self::tilt_c): returns ∂c/∂γ and writes ∂c/∂ξ
    /// into `dxi`. `∂c/∂γ` is the tilted conditional mean of Y.
    pub fn tilt_c_grad(&self, z: &[f64], gamma: f64, xi: &[f64], dxi: &mut [f64]) -> Result<f64> {
        self.check_xi(z, xi)?;
        assert_eq!(dxi.len(), xi.len(), "gradient buffer length mismatch");
        let q = z.len();
        let u = dot(&xi[..q], z);
        match self {
            OutcomeFamily::Bernoulli => {
                let dcg = sigmoid(u + gamma);
                let factor = gamma.exp_m1() * sigmoid(u) * sigmoid(-(u + gamma));
                for j in 0..q {
                    dxi[j] = factor * z[j];
                }
                Ok(dcg)
            }
            OutcomeFamily::Normal => {
                let sigma2 = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                for j in 0..q {
                    dxi[j] = gamma * z[j];
                }
                dxi[q] = 0.5 * gamma * gamma * sigma2;
                Ok(u + gamma * sigma2)
            }
            OutcomeFamily::Gamma => {
                let kappa = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let lam = u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                let glam = gamma * lam;
                if glam >= 1.0 {
                    return Err(Error::TiltDivergence { row: 0, gamma, lambda: lam });
                }
                let ratio = glam / (1.0 - glam);
                for j in 0..q {
                    dxi[j] = kappa * ratio * z[j];
                }
                // c = −κ log(1−γλ) is linear in κ, so ∂c/∂k = κ ∂c/∂κ = c.
                dxi[q] = -kappa * (-glam).ln_1p();
                Ok(kappa * lam / (1.0 - glam))
            }
        }
    }

    /// Conditional mean E[Y | x, R=1] under ξ.
    pub fn mean(&self, z: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_xi(z, xi)?;
        let q = z.len();
        let u = dot(&xi[..q], z);
        Ok(match self {
            OutcomeFamily::Bernoulli => sigmoid(u),
            OutcomeFamily::Normal => u,
            OutcomeFamily::Gamma => {
                let kappa = xi[q].clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp();
                kappa * u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP).exp()
            }
        })
    }

    /// Upper end of the feasible γ interval for a single row (`1/λ(x)` for
    /// Gamma, +∞ otherwise); the interval is open at the returned bound.
    pub fn gamma_hi_for_row(&self, z: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_xi(z, xi)?;
        match self {
            OutcomeFamily::Bernoulli | OutcomeFamily::Normal => Ok(f64::INFINITY),
            OutcomeFamily::Gamma => {
                let q = z.len();
                let u = dot(&xi[..q], z);
                Ok((-u.clamp(-EXP_ARG_CLAMP, EXP_ARG_CLAMP)).exp())
            }
        }
    }

    /// Draw Y from f(· | x; ξ).
    pub fn sample<R: Rng + ?Sized>(&self, z: &[f64], xi: &[f64], rng: &mut R) -> f64 {
        let q = z.len();
        let u = dot(&xi[..q], z);
        match self {
            OutcomeFamily::Bernoulli => {
                if rng.random_bool(sigmoid(u)) {
                    1.0
                } else {
                    0.0
                }
            }
            OutcomeFamily::Normal => {
                let sd = (0.5 * xi[q]).exp();
                let eps: f64 = rand_distr::StandardNormal.sample(rng);
                u + sd * eps
            }
            OutcomeFamily::Gamma => {
                let kappa = xi[q].exp();
                let lam = u.exp();
                rand_distr::Gamma::new(kappa, lam)
                    .expect("validated shape and scale")
                    .sample(rng)
            }
        }
    }

    /// Draw Y from the `t`-exponentially-tilted law `e^{ty} f(y|x;ξ) / M(t)`.
    ///
    /// The tilted laws stay inside each family: Bernoulli keeps the logistic
    /// form with index `u + t`; Normal shifts the mean to `μ + tσ²`; Gamma
    /// rescales to `λ/(1 − tλ)` (caller must ensure `tλ < 1`).
    pub fn sample_tilted<R: Rng + ?Sized>(
        &self,
        z: &[f64],
        t: f64,
        xi: &[f64],
        rng: &mut R,
    ) -> f64 {
        let q = z.len();
        let u = dot(&xi[..q], z);
        match self {
            OutcomeFamily::Bernoulli => {
                if rng.random_bool(sigmoid(u + t)) {
                    1.0
                } else {
                    0.0
                }
            }
            OutcomeFamily::Normal => {
                let sigma2 = xi[q].exp();
                let sd = sigma2.sqrt();
                let eps: f64 = rand_distr::StandardNormal.sample(rng);
                u + t * sigma2 + sd * eps
            }
            OutcomeFamily::Gamma => {
                let kappa = xi[q].exp();
                let lam = u.exp();
                let tilted = lam / (1.0 - t * lam);
                debug_assert!(tilted.is_finite() && tilted > 0.0, "tilted Gamma scale must exist");
                rand_distr::Gamma::new(kappa, tilted)
                    .expect("validated shape and scale")
                    .sample(rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z: [f64; 1] = [1.0];

    #[test]
    fn bernoulli_log_density_at_half() {
        // ξ = 0 gives p = 0.5; log mass is log 0.5 for both outcomes.
        let f = OutcomeFamily::Bernoulli;
        let lp = f.log_density(1.0, &Z, &[0.0]).unwrap();
        assert!((lp - 0.5f64.ln()).abs() < 1e-15);
        assert!((f.log_density(0.0, &Z, &[0.0]).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!(f.log_density(0.5, &Z, &[0.0]).is_err(), "non-binary y must be rejected");
    }

    #[test]
    fn normal_log_density_standard_mode() {
        // μ = 0, σ² = 1, y = 0 → −½ log 2π.
        let f = OutcomeFamily::Normal;
        let lp = f.log_density(0.0, &Z, &[0.0, 0.0]).unwrap();
        assert!((lp - (-0.5 * LN_2PI)).abs() < 1e-15);
    }

    #[test]
    fn gamma_log_density_example() {
        // κ = 1, λ = 2, y = 1: density e^{-y/2}/2 → log = −log 2 − 1/2.
        let f = OutcomeFamily::Gamma;
        let lp = f.log_density(1.0, &Z, &[2f64.ln(), 0.0]).unwrap();
        assert!((lp - (-(2f64.ln()) - 0.5)).abs() < 1e-14);
        assert!(f.log_density(-1.0, &Z, &[0.0, 0.0]).is_err(), "negative y must be rejected");
    }

    #[test]
    fn tilt_is_bit_exact_zero_at_gamma_zero() {
        let zs: [f64; 3] = [1.0, -0.7, 2.3];
        let cases: [(OutcomeFamily, Vec<f64>); 3] = [
            (OutcomeFamily::Bernoulli, vec![0.3, -1.2, 0.8]),
            (OutcomeFamily::Normal, vec![0.3, -1.2, 0.8, -0.4]),
            (OutcomeFamily::Gamma, vec![0.3, -1.2, 0.8, 0.7]),
        ];
        for (fam, xi) in &cases {
            let c = fam.tilt_c(&zs, 0.0, xi).unwrap();
            assert_eq!(c, 0.0, "{fam} tilt at gamma=0 must be exactly zero");
        }
    }

    #[test]
    fn tilt_closed_forms_match_hand_values() {
        // Normal: μ=2, σ²=1, γ=−0.5 → γμ + γ²σ²/2 = −1 + 0.125 = −0.875.
        let c = OutcomeFamily::Normal.tilt_c(&Z, -0.5, &[2.0, 0.0]).unwrap();
        assert!((c + 0.875).abs() < 1e-15);
        // Gamma: κ=1, λ=2, γ=−0.5 → −log(1+1) = −log 2.
        let c = OutcomeFamily::Gamma.tilt_c(&Z, -0.5, &[2f64.ln(), 0.0]).unwrap();
        assert!((c + 2f64.ln()).abs() < 1e-15);
        // Bernoulli: p=0.5, γ=log 3 → log(0.5 + 0.5·3) = log 2.
        let c = OutcomeFamily::Bernoulli.tilt_c(&Z, 3f64.ln(), &[0.0]).unwrap();
        assert!((c - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn tilt_grad_hand_values() {
        // Normal: dc/dγ = μ + γσ² = 2 − 0.5 = 1.5.
        let mut dxi = [0.0; 2];
        let dcg = OutcomeFamily::Normal.tilt_c_grad(&Z, -0.5, &[2.0, 0.0], &mut dxi).unwrap();
        assert!((dcg - 1.5).abs() < 1e-15);
        // Bernoulli: p=0.5, γ=log 3 → tilted mean pe^γ/(1−p+pe^γ) = 1.5/2 = 0.75.
        let mut dxi1 = [0.0; 1];
        let dcg = OutcomeFamily::Bernoulli
            .tilt_c_grad(&Z, 3f64.ln(), &[0.0], &mut dxi1)
            .unwrap();
        assert!((dcg - 0.75).abs() < 1e-14);
    }

    #[test]
    fn tilt_grad_at_zero_recovers_conditional_mean() {
        let zs = [1.0, 0.4, -0.3];
        let cases: [(OutcomeFamily, Vec<f64>); 3] = [
            (OutcomeFamily::Bernoulli, vec![0.2, -0.5, 0.9]),
            (OutcomeFamily::Normal, vec![0.2, -0.5, 0.9, 0.3]),
            (OutcomeFamily::Gamma, vec![0.2, -0.5, 0.9, -0.2]),
        ];
        for (fam, xi) in &cases {
            let mut dxi = vec![0.0; xi.len()];
            let dcg = fam.tilt_c_grad(&zs, 0.0, xi, &mut dxi).unwrap();
            let mean = fam.mean(&zs, xi).unwrap();
            assert!(
                (dcg - mean).abs() <= 1e-12 * (1.0 + mean.abs()),
                "{fam}: MGF derivative at 0 should equal the conditional mean"
            );
        }
    }

    #[test]
    fn gamma_tilt_divergence_is_reported() {
        // λ = 2 and γ = 0.6 gives γλ = 1.2 ≥ 1.
        let err = OutcomeFamily::Gamma.tilt_c(&Z, 0.6, &[2f64.ln(), 0.0]).unwrap_err();
        assert_eq!(err.code(), "tilt-divergence");
    }

    #[test]
    fn gamma_hi_for_row_is_reciprocal_scale() {
        let hi = OutcomeFamily::Gamma.gamma_hi_for_row(&Z, &[2f64.ln(), 0.0]).unwrap();
        assert!((hi - 0.5).abs() < 1e-12);
        assert_eq!(
            OutcomeFamily::Normal.gamma_hi_for_row(&Z, &[0.0, 0.0]).unwrap(),
            f64::INFINITY
        );
    }
}
