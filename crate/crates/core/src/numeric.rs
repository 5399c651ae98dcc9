//! Small numerical kernels shared by the likelihood and test-statistic code.
//!
//! Two concerns drive this module. First, logistic-scale quantities must be
//! evaluated without overflow for extreme linear indices, so the usual
//! `sigmoid` / `log(1+e^x)` branch tricks live here. Second, several
//! invariants of the public API are *exact* rather than approximate — e.g.
//! duplicating every row of a dataset must double the log-likelihood
//! bit-for-bit. Plain left-to-right accumulation does not have that property
//! in floating point, but a bottom-up adjacent-pair reduction does: scaling
//! every leaf by 2 commutes with each rounded addition, and after a canonical
//! sort the duplicated array pairs each value with its own copy at the first
//! reduction level.

/// Clamp bound for the logistic linear index η; `π = 1/(1+e^η)` saturates to
/// ~6.3e-16 / 1-6.3e-16 at ±35, far outside any statistically meaningful
/// range but safely inside f64 territory so `log π` stays finite.
pub const ETA_CLAMP: f64 = 35.0;

/// Guard for raw exponent arguments (keeps `exp` finite with headroom for
/// products of two such terms).
pub(crate) const EXP_ARG_CLAMP: f64 = 350.0;

/// Numerically stable logistic function `1/(1+e^{-x})`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `log(1 + e^x)` (softplus).
#[inline]
pub fn ln_1p_exp(x: f64) -> f64 {
    if x > 33.0 {
        // e^{-x} < 5e-15: x dominates and the correction underflows the ulp.
        x
    } else if x < -37.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Bottom-up adjacent-pair summation. Consumes the scratch buffer contents.
///
/// Deterministic for a fixed input order, and exactly homogeneous of degree
/// one under scaling all inputs by a power of two — the property that makes
/// "duplicate every row → exactly 2× the sum" hold bit-for-bit when
/// duplicates sit adjacent (guaranteed by the canonical row sort upstream).
pub fn pairwise_sum(buf: &mut Vec<f64>) -> f64 {
    let mut len = buf.len();
    if len == 0 {
        return 0.0;
    }
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            buf[i] = buf[2 * i] + buf[2 * i + 1];
        }
        if len % 2 == 1 {
            buf[half] = buf[len - 1];
            len = half + 1;
        } else {
            len = half;
        }
    }
    buf[0]
}

/// Plain dot product, accumulated left to right (deterministic order).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_matches_naive_in_safe_range() {
        for &x in &[-20.0, -3.5, -1e-8, 0.0, 1e-8, 2.75, 20.0] {
            let naive = 1.0 / (1.0 + (-x as f64).exp());
            assert!((sigmoid(x) - naive).abs() <= 1e-15, "x = {x}");
        }
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        assert_eq!(sigmoid(800.0), 1.0);
        // Still positive where exp(−x) is representable…
        assert!(sigmoid(-700.0) > 0.0);
        assert!(sigmoid(-700.0) < 1e-300);
        // …and a clean 0, never NaN, once it underflows.
        assert_eq!(sigmoid(-800.0), 0.0);
    }

    #[test]
    fn ln_1p_exp_matches_naive() {
        for &x in &[-30.0f64, -5.0, 0.0, 1.0, 30.0] {
            let naive = (1.0 + x.exp()).ln();
            assert!((ln_1p_exp(x) - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
        }
        assert_eq!(ln_1p_exp(900.0), 900.0);
    }

    #[test]
    fn pairwise_sum_equals_exact_on_integers() {
        let mut buf: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&mut buf), 500_500.0);
        let mut empty = vec![];
        assert_eq!(pairwise_sum(&mut empty), 0.0);
        let mut one = vec![3.25];
        assert_eq!(pairwise_sum(&mut one), 3.25);
    }

    #[test]
    fn pairwise_sum_doubles_exactly_for_adjacent_duplicates() {
        // Awkward magnitudes on purpose: sequential summation would not
        // satisfy this identity bit-for-bit.
        let base: Vec<f64> = (0..537)
            .map(|i| ((i * 2654435761_usize % 1013) as f64 - 500.0) * (1.0 + (i as f64).sin()))
            .collect();
        let mut orig = base.clone();
        let mut dup = Vec::with_capacity(base.len() * 2);
        for v in &base {
            dup.push(*v);
            dup.push(*v);
        }
        let s1 = pairwise_sum(&mut orig);
        let s2 = pairwise_sum(&mut dup);
        assert_eq!(s2, 2.0 * s1, "pairwise sum should double exactly");
    }
}
