//! Observations, datasets, and the packed design used by the numerics.
//!
//! An [`Observation`] holds a fully observed covariate row, a response
//! indicator, and the outcome when observed. A [`Dataset`] adds the two
//! column selections that define the model: `prop_cols` picks the propensity
//! covariates r(x) and `out_cols` picks the outcome-model covariates (an
//! intercept is prepended automatically downstream).
//!
//! [`Design`] is the evaluation-ready form: rows re-ordered into a canonical
//! sort (lexicographic by covariate content, then response, then outcome) and
//! packed into flat row-major buffers. The canonical order makes every sum in
//! the likelihood, score, and test statistic independent of input row order,
//! so fits are bit-identical under row permutation.

use crate::error::{Error, Result};

/// One sampling unit: covariates, response indicator, and (if observed) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Fully observed covariate row.
    pub x: Vec<f64>,
    /// Outcome value; `None` exactly when the outcome is missing.
    pub y: Option<f64>,
}

impl Observation {
    /// Response indicator: 1 when the outcome was observed.
    pub fn r(&self) -> u8 {
        u8::from(self.y.is_some())
    }
}

/// A set of observations plus the column structure of the model.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Observation rows; all covariate rows share the same length.
    pub rows: Vec<Observation>,
    /// Indices into `x` selecting the propensity covariates r(x).
    pub prop_cols: Vec<usize>,
    /// Indices into `x` selecting the outcome-model covariates.
    pub out_cols: Vec<usize>,
    /// Column labels (length = covariate dimension).
    pub names: Vec<String>,
}

impl Dataset {
    /// Validate and assemble a dataset.
    ///
    /// Checks: nonempty rows, consistent covariate dimension, finite values
    /// (outcomes included), and in-bounds column selections.
    pub fn new(
        rows: Vec<Observation>,
        prop_cols: Vec<usize>,
        out_cols: Vec<usize>,
        names: Vec<String>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        let d = rows[0].x.len();
        if names.len() != d {
            return Err(Error::InvalidInput(format!(
                "{} column names for covariate dimension {d}",
                names.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.x.len() != d {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} covariates, expected {d}",
                    row.x.len()
                )));
            }
            if row.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite covariate")));
            }
            if let Some(y) = row.y {
                if !y.is_finite() {
                    return Err(Error::InvalidInput(format!("row {i} has a non-finite outcome")));
                }
            }
        }
        for set in [&prop_cols, &out_cols] {
            for &c in set.iter() {
                if c >= d {
                    return Err(Error::InvalidInput(format!(
                        "column index {c} out of range for dimension {d}"
                    )));
                }
            }
        }
        if prop_cols.is_empty() && out_cols.is_empty() {
            return Err(Error::InvalidInput("no model columns selected".into()));
        }
        Ok(Dataset { rows, prop_cols, out_cols, names })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Covariate dimension.
    pub fn d(&self) -> usize {
        self.rows.first().map_or(0, |r| r.x.len())
    }

    /// Number of rows with a missing outcome.
    pub fn n_missing(&self) -> usize {
        self.rows.iter().filter(|r| r.y.is_none()).count()
    }

    /// Fraction of rows with a missing outcome.
    pub fn missing_rate(&self) -> f64 {
        self.n_missing() as f64 / self.n() as f64
    }

    /// Identification warning: the outcome model should involve at least one
    /// covariate excluded from the propensity model (an instrument). Returns
    /// a human-readable warning when that fails; never an error.
    pub fn instrument_warning(&self) -> Option<String> {
        let has_instrument =
            self.out_cols.iter().any(|c| !self.prop_cols.contains(c));
        if has_instrument {
            None
        } else {
            Some(
                "no instrument: every outcome-model covariate also enters the propensity model; \
                 (alpha, beta, gamma) may be weakly identified"
                    .to_string(),
            )
        }
    }
}

/// Evaluation-ready packed design in canonical row order.
#[derive(Debug, Clone)]
pub struct Design {
    /// Rows.
    pub n: usize,
    /// Propensity covariate count.
    pub m: usize,
    /// Outcome design width (intercept included).
    pub q: usize,
    /// Row-major `n × m` propensity covariates r(x).
    pub rx: Vec<f64>,
    /// Row-major `n × q` outcome design rows z = (1, x_out).
    pub z: Vec<f64>,
    /// Response indicators as 0.0/1.0.
    pub r: Vec<f64>,
    /// Outcomes (NaN where missing).
    pub y: Vec<f64>,
    /// `ln y` where observed (NaN otherwise); cached for the Gamma family.
    pub ln_y: Vec<f64>,
    /// Count of observed outcomes.
    pub n_obs: usize,
    /// Original dataset index of each canonical row (for error reporting).
    pub orig_idx: Vec<usize>,
}

impl Design {
    /// Pack a dataset, re-ordering rows canonically.
    pub fn new(data: &Dataset) -> Design {
        let n = data.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let ra = &data.rows[a];
            let rb = &data.rows[b];
            for (va, vb) in ra.x.iter().zip(rb.x.iter()) {
                match va.total_cmp(vb) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            match ra.r().cmp(&rb.r()) {
                std::cmp::Ordering::Equal => {}
                other => return other,
            }
            ra.y.unwrap_or(f64::NEG_INFINITY).total_cmp(&rb.y.unwrap_or(f64::NEG_INFINITY))
        });

        let m = data.prop_cols.len();
        let q = data.out_cols.len() + 1;
        let mut rx = Vec::with_capacity(n * m);
        let mut z = Vec::with_capacity(n * q);
        let mut r = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut ln_y = Vec::with_capacity(n);
        let mut n_obs = 0usize;
        for &i in &order {
            let row = &data.rows[i];
            for &c in &data.prop_cols {
                rx.push(row.x[c]);
            }
            z.push(1.0);
            for &c in &data.out_cols {
                z.push(row.x[c]);
            }
            match row.y {
                Some(v) => {
                    r.push(1.0);
                    y.push(v);
                    ln_y.push(if v > 0.0 { v.ln() } else { f64::NAN });
                    n_obs += 1;
                }
                None => {
                    r.push(0.0);
                    y.push(f64::NAN);
                    ln_y.push(f64::NAN);
                }
            }
        }
        Design { n, m, q, rx, z, r, y, ln_y, n_obs, orig_idx: order }
    }

    /// Propensity covariates of row `i`.
    #[inline]
    pub fn rx_row(&self, i: usize) -> &[f64] {
        &self.rx[i * self.m..(i + 1) * self.m]
    }

    /// Outcome design row `i` (leading 1 included).
    #[inline]
    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i * self.q..(i + 1) * self.q]
    }

    /// Total parameter dimension `m + p + 2` for `fam`.
    pub fn dim(&self, fam: crate::family::OutcomeFamily) -> usize {
        self.m + 2 + fam.xi_len(self.q)
    }
}
