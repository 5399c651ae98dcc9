//! Shared oracle machinery for the integration suites: an adaptive Simpson
//! integrator, independent density formulas, a two-sample Kolmogorov–Smirnov
//! statistic, independent logistic/least-squares fitters, and simulated
//! fixtures. Everything here deliberately avoids the library's own numerics
//! (closed-form tilts, `ln_1p_exp`, pairwise summation) so that agreement is
//! evidence, not tautology.
#![allow(dead_code)]

use nmar_gof::{Dataset, Observation, OutcomeFamily, Theta};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance
/// `tol`, with a recursion-depth cap high enough for every oracle here.
pub fn simpson_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        assert!(
            flm.is_finite() && frm.is_finite(),
            "quadrature integrand must stay finite on [{a}, {b}]"
        );
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    assert!(
        fa.is_finite() && fm.is_finite() && fb.is_finite(),
        "quadrature integrand must stay finite on [{a}, {b}]"
    );
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Independent density formula for each family (no library calls): Bernoulli
/// pmf at y ∈ {0,1}, Normal pdf, Gamma (shape κ, scale λ) pdf.
pub fn oracle_pdf(fam: OutcomeFamily, y: f64, z: &[f64], xi: &[f64]) -> f64 {
    let q = z.len();
    let u: f64 = z.iter().zip(&xi[..q]).map(|(a, b)| a * b).sum();
    match fam {
        OutcomeFamily::Bernoulli => {
            let p = 1.0 / (1.0 + (-u).exp());
            if y == 1.0 {
                p
            } else {
                1.0 - p
            }
        }
        OutcomeFamily::Normal => {
            let sigma2 = xi[q].exp();
            let d = y - u;
            (-0.5 * d * d / sigma2).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt()
        }
        OutcomeFamily::Gamma => {
            let kappa = xi[q].exp();
            let lambda = u.exp();
            if y <= 0.0 {
                return 0.0;
            }
            (((kappa - 1.0) * y.ln()) - y / lambda - ln_gamma(kappa) - kappa * lambda.ln())
                .exp()
        }
    }
}

/// Adaptive Simpson over `[a, b]` split into uniform panels first, so a
/// narrow spike inside a long, nearly-dead interval cannot fool the
/// top-level error estimate into stopping early.
pub fn paneled_quadrature(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let panels = 64;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        total += simpson_adaptive(f, lo, lo + h, tol / panels as f64);
    }
    total
}

/// Quadrature/sum oracle for the log moment-generating function
/// log ∫ e^{γy} f(y|x;ξ) dy, built on independent density formulas.
///
/// Bernoulli sums its two atoms exactly. Normal integrates over a window
/// covering both the base mean μ and the tilted mean μ+γσ². Gamma uses the
/// substitution y = e^t, which regularizes the κ<1 endpoint singularity and
/// concentrates the mass near t* = ln(κλ/(1−γλ)). The continuous integrands
/// are evaluated as a single `exp` of their log expression: the factored form
/// e^{γy}·f(y) can hit ∞·0 = NaN in the tails even when the product itself is
/// a clean zero.
pub fn oracle_tilt_quad(fam: OutcomeFamily, z: &[f64], gamma: f64, xi: &[f64]) -> f64 {
    let q = z.len();
    let u: f64 = z.iter().zip(&xi[..q]).map(|(a, b)| a * b).sum();
    match fam {
        OutcomeFamily::Bernoulli => {
            let p = 1.0 / (1.0 + (-u).exp());
            ((1.0 - p) + p * gamma.exp()).ln()
        }
        OutcomeFamily::Normal => {
            let sigma2 = xi[q].exp();
            let sigma = sigma2.sqrt();
            let mu = u;
            let shifted = mu + gamma * sigma2;
            let lo = mu.min(shifted) - 12.0 * sigma;
            let hi = mu.max(shifted) + 12.0 * sigma;
            let norm = (2.0 * std::f64::consts::PI * sigma2).sqrt().ln();
            let f = move |y: f64| {
                let d = y - mu;
                (gamma * y - 0.5 * d * d / sigma2 - norm).exp()
            };
            let scale = f(shifted) * sigma;
            paneled_quadrature(&f, lo, hi, 1e-12 * scale.max(1e-300)).ln()
        }
        OutcomeFamily::Gamma => {
            let kappa = xi[q].exp();
            let lambda = u.exp();
            let rate = 1.0 / lambda - gamma;
            assert!(rate > 0.0, "oracle needs a feasible tilt");
            let t_star = (kappa / rate).ln();
            let lo = t_star - 80.0 / kappa.min(1.0);
            let hi = t_star + 12.0;
            let norm = ln_gamma(kappa) + kappa * lambda.ln();
            let f = move |t: f64| (kappa * t - rate * t.exp() - norm).exp();
            let scale = f(t_star) / kappa.sqrt();
            paneled_quadrature(&f, lo, hi, 1e-12 * scale.max(1e-300)).ln()
        }
    }
}

/// Two-sample Kolmogorov–Smirnov statistic sup_x |F̂_a(x) − F̂_b(x)|.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS test at level `alpha` for sizes
/// (n₁, n₂): c(α)·√((n₁+n₂)/(n₁n₂)) with c(α) = √(−ln(α/2)/2).
pub fn ks_critical(alpha: f64, n1: usize, n2: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

/// Independent logistic MLE of P(R=1 | row) = σ(b⊤row) via iteratively
/// reweighted least squares on an explicit design matrix (intercept included
/// by the caller). Returns b.
pub fn irls_logistic(rows: &[Vec<f64>], resp: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let p = rows[0].len();
    let mut b = vec![0.0; p];
    for _ in 0..60 {
        let mut xtwx = nalgebra::DMatrix::<f64>::zeros(p, p);
        let mut xts = nalgebra::DVector::<f64>::zeros(p);
        for i in 0..n {
            let eta: f64 = rows[i].iter().zip(&b).map(|(a, c)| a * c).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = (mu * (1.0 - mu)).max(1e-12);
            for j in 0..p {
                xts[j] += rows[i][j] * (resp[i] - mu);
                for k in 0..p {
                    xtwx[(j, k)] += rows[i][j] * rows[i][k] * w;
                }
            }
        }
        let step = xtwx
            .cholesky()
            .expect("logistic oracle design is full rank")
            .solve(&xts);
        let mut delta = 0.0f64;
        for j in 0..p {
            b[j] += step[j];
            delta = delta.max(step[j].abs());
        }
        if delta < 1e-12 {
            break;
        }
    }
    b
}

/// Independent ordinary least squares via normal equations on an explicit
/// design (intercept included by the caller).
pub fn ols_oracle(rows: &[Vec<f64>], resp: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let p = rows[0].len();
    let mut xtx = nalgebra::DMatrix::<f64>::zeros(p, p);
    let mut xty = nalgebra::DVector::<f64>::zeros(p);
    for i in 0..n {
        for j in 0..p {
            xty[j] += rows[i][j] * resp[i];
            for k in 0..p {
                xtx[(j, k)] += rows[i][j] * rows[i][k];
            }
        }
    }
    let sol = xtx.cholesky().expect("least-squares oracle design is full rank").solve(&xty);
    sol.iter().copied().collect()
}

/// Simulated nonignorable-missingness fixture with an instrument: covariates
/// x = (x₁, x₂) with x₂ excluded from the propensity model, outcome drawn
/// from `fam`, response logistic in (x₁, y). Used as a generic evaluation
/// point for derivative and fitting checks.
pub fn sim_dataset(fam: OutcomeFamily, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma_t = match fam {
        OutcomeFamily::Gamma => -0.2,
        _ => -0.3,
    };
    let rows = (0..n)
        .map(|_| {
            let x1: f64 = rng.sample(rand_distr::StandardNormal);
            let x2: f64 = 1.0 + 0.8 * rng.sample::<f64, _>(rand_distr::StandardNormal);
            let y = match fam {
                OutcomeFamily::Bernoulli => {
                    let u = 0.3 + 0.8 * x1 + 0.7 * x2;
                    f64::from(rng.random_bool(1.0 / (1.0 + (-u).exp())))
                }
                OutcomeFamily::Normal => {
                    let eps: f64 = rng.sample(rand_distr::StandardNormal);
                    0.5 + 0.8 * x1 + x2 + 0.9 * eps
                }
                OutcomeFamily::Gamma => {
                    let lambda = (0.4 + 0.3 * x1 + 0.4 * x2).exp();
                    rng.sample(rand_distr::Gamma::new(1.3, lambda).unwrap())
                }
            };
            let lin = -1.2 + 0.4 * x1 + gamma_t * y;
            let observed = rng.random_bool(1.0 / (1.0 + lin.exp()));
            Observation { x: vec![x1, x2], y: observed.then_some(y) }
        })
        .collect();
    Dataset::new(
        rows,
        vec![0],
        vec![0, 1],
        vec!["x1".to_string(), "x2".to_string()],
    )
    .unwrap()
}

/// A random parameter point that is feasible for `data` (the Gamma tilt
/// stays clear of its divergence boundary).
pub fn random_theta(fam: OutcomeFamily, data: &Dataset, rng: &mut ChaCha8Rng) -> Theta {
    let q = data.out_cols.len() + 1;
    let mut xi: Vec<f64> = (0..q).map(|_| rng.random_range(-0.4..0.4)).collect();
    match fam {
        OutcomeFamily::Bernoulli => {}
        OutcomeFamily::Normal => xi.push(rng.random_range(-0.3..0.4)),
        OutcomeFamily::Gamma => xi.push(rng.random_range(-0.2..0.5)),
    }
    let (_, hi) = nmar_gof::gamma_feasible_range(fam, data, &xi).unwrap();
    let gamma_hi = if hi.is_finite() { (0.85 * hi).min(0.6) } else { 0.6 };
    let gamma = rng.random_range(-0.7..gamma_hi);
    Theta {
        alpha: rng.random_range(-1.0..0.2),
        beta: (0..data.prop_cols.len()).map(|_| rng.random_range(-0.5..0.5)).collect(),
        gamma,
        xi,
    }
}
