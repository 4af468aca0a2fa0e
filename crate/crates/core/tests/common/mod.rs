//! Independent reference values computed with statrs.

#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

/// Poisson(λ/2) weights `w_j` until the tail is below 1e-15.
fn poisson_weights(ncp: f64) -> Vec<f64> {
    let half = ncp / 2.0;
    let mut out = Vec::new();
    let mut j = 0u32;
    let mut acc = 0.0;
    loop {
        let w = (-half + f64::from(j) * half.ln() - ln_gamma(f64::from(j) + 1.0)).exp();
        let w = if half == 0.0 { if j == 0 { 1.0 } else { 0.0 } } else { w };
        out.push(w);
        acc += w;
        j += 1;
        if (1.0 - acc < 1e-15 && f64::from(j) > half) || j > 2000 {
            return out;
        }
    }
}

/// `P(χ²_df(ncp) > x)` as a Poisson mixture of central chi-squares.
pub fn ncx2_sf(df: f64, ncp: f64, x: f64) -> f64 {
    poisson_weights(ncp)
        .iter()
        .enumerate()
        .map(|(j, w)| w * (1.0 - ChiSquared::new(df + 2.0 * j as f64).unwrap().cdf(x)))
        .sum()
}

/// `P(F(d1, d2; ncp) > f)` as a Poisson mixture of regularized incomplete betas.
pub fn ncf_sf(d1: f64, d2: f64, ncp: f64, f: f64) -> f64 {
    let y = d1 * f / (d1 * f + d2);
    let cdf: f64 = poisson_weights(ncp)
        .iter()
        .enumerate()
        .map(|(j, w)| w * beta_reg(d1 / 2.0 + j as f64, d2 / 2.0, y))
        .sum();
    1.0 - cdf
}

pub fn chi2_quantile(df: f64, p: f64) -> f64 {
    ChiSquared::new(df).unwrap().inverse_cdf(p)
}

pub fn f_quantile(d1: f64, d2: f64, p: f64) -> f64 {
    FisherSnedecor::new(d1, d2).unwrap().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Power minus α of the level-α chi-square test at `‖m‖² = ncp`.
pub fn chisq_gap(n: usize, ncp: f64, alpha: f64) -> f64 {
    let c = chi2_quantile(n as f64, 1.0 - alpha);
    ncx2_sf(n as f64, ncp, c) - alpha
}

/// `log H(t)` for `H(t) = ∫₀^π e^{t cos θ} sin^{n−2} θ dθ` from the series
/// `Σ_k t^{2k}/(2k)! · B(k + ½, (n − 1)/2)`.
pub fn log_h_series(t: f64, n: usize) -> f64 {
    let a = (n as f64 - 1.0) / 2.0;
    let ln_beta = |p: f64, q: f64| ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q);
    let terms: Vec<f64> = (0..400)
        .map(|k| {
            let k = k as f64;
            let lt = if t == 0.0 {
                if k == 0.0 { 0.0 } else { f64::NEG_INFINITY }
            } else {
                2.0 * k * t.ln()
            };
            lt - ln_gamma(2.0 * k + 1.0) + ln_beta(k + 0.5, a)
        })
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Within `z` standard errors.
pub fn within(est: f64, target: f64, se: f64, z: f64) -> bool {
    (est - target).abs() <= z * se
}
