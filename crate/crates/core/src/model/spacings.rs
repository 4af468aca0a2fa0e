use std::f64::consts::{PI, SQRT_2};

use rand::Rng as _;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::numeric::midpoint_rule;
use crate::rng::Rng;

/// Panels used for `∫h` and `∫h²` on the unit interval.
const PROFILE_QUADRATURE_POINTS: usize = 1024;

/// Sample spacings `D₁..D_{n+1}` of `n` points on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingsSample {
    d: Vec<f64>,
}

impl SpacingsSample {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidArgument("no spacings".into()));
        }
        if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("spacings must be finite and nonnegative".into()));
        }
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("spacings sum to {total}, not 1")));
        }
        Ok(SpacingsSample { d })
    }

    /// Spacings of sorted points in `[0, 1]`, with `U₀ = 0` and `U_{n+1} = 1`.
    pub fn from_sorted_points(u: &[f64]) -> Result<Self> {
        let mut d = Vec::with_capacity(u.len() + 1);
        let mut prev = 0.0;
        for &ui in u {
            d.push(ui - prev);
            prev = ui;
        }
        d.push(1.0 - prev);
        SpacingsSample::new(d)
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    /// Number of underlying points, `n` (there are `n + 1` spacings).
    pub fn points_len(&self) -> usize {
        self.d.len() - 1
    }

    /// Reconstructs `U₁..U_n` by cumulative summation.
    pub fn points(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.d[..self.d.len() - 1]
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    }
}

/// A bounded perturbation direction `h` on `[0, 1]`.
pub trait Profile: Send + Sync {
    fn eval(&self, x: f64) -> f64;

    /// An upper bound on `sup |h|`, used for the rejection envelope.
    fn sup_abs(&self) -> f64;

    fn integral(&self) -> f64 {
        midpoint_rule(|x| self.eval(x), 0.0, 1.0, PROFILE_QUADRATURE_POINTS)
    }

    fn l2_norm_sq(&self) -> f64 {
        midpoint_rule(|x| self.eval(x).powi(2), 0.0, 1.0, PROFILE_QUADRATURE_POINTS)
    }
}

/// Finite combinations `Σ cₖ √2 cos(2πkx)`, `k ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigProfile {
    terms: Vec<(u32, f64)>,
}

impl TrigProfile {
    pub fn new(terms: Vec<(u32, f64)>) -> Result<Self> {
        if terms.iter().any(|&(k, c)| k == 0 || !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "trigonometric profile needs frequencies k >= 1 and finite coefficients".into(),
            ));
        }
        Ok(TrigProfile { terms })
    }

    /// `amplitude · √2 cos(2πkx)`; its L₂ norm is `|amplitude|`.
    pub fn cosine(k: u32, amplitude: f64) -> Result<Self> {
        TrigProfile::new(vec![(k, amplitude)])
    }

    pub fn zero() -> Self {
        TrigProfile { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    /// Exact L₂ norm (the basis is orthonormal).
    pub fn l2_norm(&self) -> f64 {
        let mut by_k = std::collections::BTreeMap::new();
        for &(k, c) in &self.terms {
            *by_k.entry(k).or_insert(0.0) += c;
        }
        by_k.values().map(|c: &f64| c * c).sum::<f64>().sqrt()
    }
}

impl Profile for TrigProfile {
    fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, c)| c * SQRT_2 * (2.0 * PI * f64::from(k) * x).cos())
            .sum()
    }

    fn sup_abs(&self) -> f64 {
        self.terms.iter().map(|&(_, c)| c.abs() * SQRT_2).sum()
    }
}

/// An arbitrary closure with a caller-supplied bound on `|h|`.
pub struct FnProfile<F> {
    f: F,
    sup: f64,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnProfile<F> {
    pub fn new(f: F, sup: f64) -> Self {
        FnProfile { f, sup }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Profile for FnProfile<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn sup_abs(&self) -> f64 {
        self.sup
    }
}

/// `n + 1` iid standard exponentials divided by their total.
pub fn sample_spacings_null(n: usize, rng: &mut Rng) -> SpacingsSample {
    assert!(n >= 1, "need at least one point");
    let mut d: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = d.iter().sum();
    for v in &mut d {
        *v /= total;
    }
    // renormalize once more so the sum is 1 to rounding
    let total: f64 = d.iter().sum();
    for v in &mut d {
        *v /= total;
    }
    SpacingsSample { d }
}

/// Sorted draws of `n` points from the density `1 + h(x)/scale` by rejection
/// from the uniform with constant envelope `1 + sup|h|/scale`. Returns the
/// points and the number of proposals used.
pub fn sample_alternative_points(
    n: usize,
    h: &dyn Profile,
    scale: f64,
    rng: &mut Rng,
) -> Result<(Vec<f64>, u64)> {
    validate_density(h, scale)?;
    let envelope = 1.0 + h.sup_abs() / scale;
    let mut points = Vec::with_capacity(n);
    let mut proposals = 0u64;
    while points.len() < n {
        proposals += 1;
        let x: f64 = rng.random();
        let accept: f64 = rng.random();
        if accept * envelope < 1.0 + h.eval(x) / scale {
            points.push(x);
        }
    }
    points.sort_by(f64::total_cmp);
    Ok((points, proposals))
}

fn validate_density(h: &dyn Profile, scale: f64) -> Result<()> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("alternative scale must be positive".into()));
    }
    let sup = h.sup_abs();
    if !(sup.is_finite()) || sup > 0.99 * scale {
        return Err(Error::InvalidArgument(format!(
            "density 1 + h/{scale} is not bounded away from zero (sup|h| = {sup})"
        )));
    }
    let mean = h.integral();
    if mean.abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "h must integrate to zero, got {mean}"
        )));
    }
    Ok(())
}

/// Spacings of `n` draws from the density `1 + h(x)/√n`.
pub fn sample_spacings_alternative(
    n: usize,
    h: &dyn Profile,
    rng: &mut Rng,
) -> Result<SpacingsSample> {
    let (points, _) = sample_alternative_points(n, h, (n as f64).sqrt(), rng)?;
    SpacingsSample::from_sorted_points(&points)
}

/// The linearized log-likelihood ratio `Σ hᵢ(Dᵢ − 1/(n+1)) − ∫h²/2` of the
/// alternative `1 + h/√n` against uniformity, with
/// `hᵢ = −((n + 1)/√n) · h(i/(n + 1))`.
pub fn spacings_loglik_approx(h: &dyn Profile, d: &SpacingsSample) -> f64 {
    let n = d.points_len() as f64;
    let np1 = n + 1.0;
    let coef = -np1 / n.sqrt();
    let linear: f64 = d
        .values()
        .iter()
        .enumerate()
        .map(|(i, &di)| coef * h.eval((i + 1) as f64 / np1) * (di - 1.0 / np1))
        .sum();
    linear - 0.5 * h.l2_norm_sq()
}

/// The exact log-likelihood ratio `Σ log(1 + h(Uᵢ)/√n)` of the ordered sample.
pub fn spacings_loglik_exact(h: &dyn Profile, d: &SpacingsSample) -> f64 {
    let n = d.points_len() as f64;
    let root = n.sqrt();
    d.points()
        .iter()
        .map(|&u| (h.eval(u) / root).ln_1p())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Estimate;
    use crate::rng::StreamKey;

    #[test]
    fn null_spacings_sum_to_one() {
        let mut rng = StreamKey::new(1).rng(0);
        for n in [1, 2, 17, 1000] {
            let d = sample_spacings_null(n, &mut rng);
            assert_eq!(d.values().len(), n + 1);
            assert!((d.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_spacing_has_mean_one_over_n_plus_one() {
        let n = 100_000;
        let key = StreamKey::new(2);
        let scaled: Vec<f64> = (0..500)
            .map(|i| sample_spacings_null(n, &mut key.rng(i)).values()[0] * (n + 1) as f64)
            .collect();
        let e = Estimate::from_samples(&scaled);
        assert!((e.mean - 1.0).abs() < 4.0 * e.se);
    }

    #[test]
    fn trig_profile_norm_and_mean() {
        let h = TrigProfile::new(vec![(1, 2.0), (3, -1.0)]).unwrap();
        assert!(h.integral().abs() < 1e-12);
        assert!((h.l2_norm_sq() - 5.0).abs() < 1e-10);
        assert!((h.l2_norm() - 5f64.sqrt()).abs() < 1e-15);
        assert!(TrigProfile::new(vec![(0, 1.0)]).is_err());
    }

    #[test]
    fn alternative_rejects_bad_profiles() {
        let mut rng = StreamKey::new(3).rng(0);
        let big = TrigProfile::cosine(1, 10.0).unwrap();
        assert!(sample_spacings_alternative(100, &big, &mut rng).is_err());
        let shifted = FnProfile::new(|_| 0.5, 0.5);
        assert!(sample_spacings_alternative(100, &shifted, &mut rng).is_err());
    }

    #[test]
    fn acceptance_rate_matches_envelope() {
        let h = TrigProfile::cosine(1, 2.0).unwrap();
        let n = 400;
        let scale = (n as f64).sqrt();
        let mut rng = StreamKey::new(4).rng(0);
        let mut accepted = 0u64;
        let mut proposed = 0u64;
        for _ in 0..200 {
            let (_, p) = sample_alternative_points(n, &h, scale, &mut rng).unwrap();
            accepted += n as u64;
            proposed += p;
        }
        let rate = accepted as f64 / proposed as f64;
        let expected = 1.0 / (1.0 + h.sup_abs() / scale);
        let se = (expected * (1.0 - expected) / proposed as f64).sqrt();
        assert!((rate - expected).abs() < 4.0 * se, "{rate} vs {expected}");
    }

    #[test]
    fn alternative_cdf_at_half() {
        // ∫₀^{1/2} (1 + cos(2πx)/√n) dx = 1/2
        let h = TrigProfile::new(vec![(1, std::f64::consts::FRAC_1_SQRT_2)]).unwrap();
        let n = 400;
        let mut rng = StreamKey::new(5).rng(0);
        let mut below = 0usize;
        let reps = 100;
        for _ in 0..reps {
            let (pts, _) = sample_alternative_points(n, &h, (n as f64).sqrt(), &mut rng).unwrap();
            below += pts.iter().filter(|&&u| u <= 0.5).count();
        }
        let total = reps * n;
        let e = Estimate::proportion(below, total);
        assert!((e.mean - 0.5).abs() < 4.0 * e.se);
    }

    #[test]
    fn loglik_approx_examples() {
        let n = 9;
        let even = SpacingsSample::new(vec![0.1; n + 1]).unwrap();
        assert_eq!(spacings_loglik_approx(&TrigProfile::zero(), &even), 0.0);
        let h = TrigProfile::new(vec![(1, std::f64::consts::FRAC_1_SQRT_2)]).unwrap();
        assert!((spacings_loglik_approx(&h, &even) + 0.25).abs() < 1e-12);
        let d = sample_spacings_null(n, &mut StreamKey::new(6).rng(0));
        let one = FnProfile::new(|_| 1.0, 1.0);
        assert!((spacings_loglik_approx(&one, &d) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn points_round_trip() {
        let u = [0.1, 0.5, 0.9];
        let d = SpacingsSample::from_sorted_points(&u).unwrap();
        let back = d.points();
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
