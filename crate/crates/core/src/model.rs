//! The propensity model under the null and its building blocks.
//!
//! The null specifies P(R=1 | x, y) = 1/(1+exp(α + β⊤r(x) + γy)). Averaging
//! over the outcome law shows the observed-data propensity takes the
//! covariate-only logistic form
//!
//! π(x; θ) = 1 / (1 + exp{α + β⊤r(x) + c(x; γ, ξ)})
//!
//! with the tilt c from [`OutcomeFamily::tilt_c`]. The goodness-of-fit
//! residual for a binary response with success probability π is
//! H = (r − π)² − π(1 − π), which has conditional mean zero when the model
//! is correct.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::OutcomeFamily;
use crate::numeric::{dot, sigmoid, ETA_CLAMP};

/// Full parameter vector θ = (α, β⊤, γ, ξ⊤)⊤.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    /// Propensity intercept.
    pub alpha: f64,
    /// Propensity slopes on r(x).
    pub beta: Vec<f64>,
    /// Outcome-dependence (tilt) coefficient.
    pub gamma: f64,
    /// Outcome-model parameters (layout set by the family).
    pub xi: Vec<f64>,
}

impl Theta {
    /// Total parameter count m + p + 2.
    pub fn dim(&self) -> usize {
        2 + self.beta.len() + self.xi.len()
    }

    /// Flatten into `[α, β.., γ, ξ..]` order.
    pub fn pack(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.alpha);
        v.extend_from_slice(&self.beta);
        v.push(self.gamma);
        v.extend_from_slice(&self.xi);
        v
    }

    /// Rebuild from the packed layout, given the propensity width `m`.
    pub fn unpack(packed: &[f64], m: usize) -> Result<Theta> {
        if packed.len() < m + 2 {
            return Err(Error::InvalidInput(format!(
                "packed parameter vector of length {} cannot hold m = {m} propensity slopes",
                packed.len()
            )));
        }
        Ok(Theta {
            alpha: packed[0],
            beta: packed[1..1 + m].to_vec(),
            gamma: packed[m + 1],
            xi: packed[m + 2..].to_vec(),
        })
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.gamma.is_finite()
            && self.beta.iter().all(|v| v.is_finite())
            && self.xi.iter().all(|v| v.is_finite())
    }
}

/// Parameter labels in packed order, for fit tables.
pub fn param_names(data: &Dataset, fam: OutcomeFamily) -> Vec<String> {
    let mut names = vec!["alpha".to_string()];
    for &c in &data.prop_cols {
        names.push(format!("beta.{}", data.names[c]));
    }
    names.push("gamma".to_string());
    let out_names: Vec<String> = data.out_cols.iter().map(|&c| data.names[c].clone()).collect();
    names.extend(fam.xi_names(&out_names));
    names
}

/// Marginal propensity π(x; θ) for a single covariate row.
///
/// `prop_cols` and `out_cols` select the propensity and outcome-model
/// covariates from `x`; an intercept is prepended to the outcome design
/// internally. The linear index is clamped to ±[`ETA_CLAMP`] before the
/// logistic map, so the result lies strictly inside (0, 1).
pub fn propensity(
    x: &[f64],
    theta: &Theta,
    fam: OutcomeFamily,
    prop_cols: &[usize],
    out_cols: &[usize],
) -> Result<f64> {
    if theta.beta.len() != prop_cols.len() {
        return Err(Error::InvalidInput(format!(
            "beta has length {} but {} propensity columns were selected",
            theta.beta.len(),
            prop_cols.len()
        )));
    }
    let mut z = Vec::with_capacity(out_cols.len() + 1);
    z.push(1.0);
    for &c in out_cols {
        z.push(
            *x.get(c).ok_or_else(|| {
                Error::InvalidInput(format!("outcome column {c} out of range"))
            })?,
        );
    }
    let mut lin = theta.alpha;
    for (b, &c) in theta.beta.iter().zip(prop_cols.iter()) {
        let v = *x
            .get(c)
            .ok_or_else(|| Error::InvalidInput(format!("propensity column {c} out of range")))?;
        lin += b * v;
    }
    let c = fam.tilt_c(&z, theta.gamma, &theta.xi)?;
    let eta = (lin + c).clamp(-ETA_CLAMP, ETA_CLAMP);
    Ok(sigmoid(-eta))
}

/// Goodness-of-fit residual H = (r − π)² − π(1 − π).
///
/// Bounded by 1 in absolute value for π ∈ (0,1), and mean-zero over
/// R ~ Bernoulli(π).
#[inline]
pub fn residual_h(pi: f64, r: u8) -> f64 {
    debug_assert!(pi > 0.0 && pi < 1.0, "residual_h needs pi strictly inside (0,1)");
    let d = f64::from(r) - pi;
    d * d - pi * (1.0 - pi)
}

/// Open interval of γ values for which the tilt is finite at every row of
/// `data` under ξ: `(−∞, 1/max_i λ(x_i))` for the Gamma family, the whole
/// line otherwise.
pub fn gamma_feasible_range(
    fam: OutcomeFamily,
    data: &Dataset,
    xi: &[f64],
) -> Result<(f64, f64)> {
    match fam {
        OutcomeFamily::Bernoulli | OutcomeFamily::Normal => {
            Ok((f64::NEG_INFINITY, f64::INFINITY))
        }
        OutcomeFamily::Gamma => {
            let q = data.out_cols.len() + 1;
            if xi.len() != fam.xi_len(q) {
                return Err(Error::InvalidInput(format!(
                    "xi has length {}, expected {}",
                    xi.len(),
                    fam.xi_len(q)
                )));
            }
            let mut z = vec![0.0; q];
            let mut u_max = f64::NEG_INFINITY;
            for row in &data.rows {
                z[0] = 1.0;
                for (slot, &c) in z[1..].iter_mut().zip(data.out_cols.iter()) {
                    *slot = row.x[c];
                }
                u_max = u_max.max(dot(&xi[..q], &z));
            }
            // 1 / max λ = exp(−max u); computed in log space to avoid
            // overflow round trips.
            Ok((f64::NEG_INFINITY, (-u_max).exp()))
        }
    }
}
