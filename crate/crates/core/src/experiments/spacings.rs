use std::sync::Arc;

use serde::Serialize;

use super::power::{estimate_power, AltCase, GapRow, NamedStat, PowerSettings, Sampler};
use crate::error::{invalid, Result};
use crate::model::{
    sample_alternative_points, sample_spacings_null, spacings_loglik_approx, spacings_loglik_exact,
    Profile, SpacingsSample, TrigProfile,
};
use crate::numeric::{ols_slope, Estimate};
use crate::par;
use crate::rng::StreamKey;
use crate::statistics::{greenwood, moran, two_spacings_statistic, QuadraticTestSpec, TwoSpacingsFn};

/// How the perturbation shrinks with `n`: density `1 + h/n^{1/2}` or
/// `1 + h/n^{1/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpacingsScaling {
    Contiguous,
    QuarterPower,
}

impl SpacingsScaling {
    pub fn name(self) -> &'static str {
        match self {
            SpacingsScaling::Contiguous => "contiguous",
            SpacingsScaling::QuarterPower => "quarter_power",
        }
    }

    pub fn scale(self, n: usize) -> f64 {
        match self {
            SpacingsScaling::Contiguous => (n as f64).sqrt(),
            SpacingsScaling::QuarterPower => (n as f64).powf(0.25),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingsConfig {
    /// Coefficients of `h = Σ cₖ √2 cos(2πkx)`.
    pub h_terms: Vec<(u32, f64)>,
    pub n_grid: Vec<usize>,
    pub scalings: Vec<SpacingsScaling>,
    pub settings: PowerSettings,
    /// Batches and draws per batch for the log-likelihood approximation check.
    pub loglik_batches: usize,
    pub loglik_draws: usize,
}

impl Default for SpacingsConfig {
    fn default() -> Self {
        SpacingsConfig {
            h_terms: vec![(1, 2.0)],
            n_grid: vec![100, 400, 1600],
            scalings: vec![SpacingsScaling::Contiguous, SpacingsScaling::QuarterPower],
            settings: PowerSettings::default(),
            loglik_batches: 20,
            loglik_draws: 500,
        }
    }
}

/// Sorted points with their spacings.
#[derive(Debug, Clone)]
pub struct SpacingsDraw {
    pub points: Vec<f64>,
    pub spacings: SpacingsSample,
}

/// The approximate-versus-exact log-likelihood gap at one `n`, under the null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoglikRow {
    pub n: usize,
    /// Batch mean of the 95th percentile of `|approx − exact|`.
    pub p95_abs_gap: f64,
    pub p95_se: f64,
    pub mean_abs_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingsReport {
    pub power: Vec<GapRow>,
    pub loglik: Vec<LoglikRow>,
    /// Slope of the p95 gap on `log n`.
    pub loglik_slope: Estimate,
}

/// Residuals `(n + 1)(Dᵢ − 1/(n + 1))`.
pub fn spacings_residuals(d: &SpacingsSample) -> Vec<f64> {
    let np1 = d.values().len() as f64;
    d.values().iter().map(|v| np1 * v - 1.0).collect()
}

fn p95(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = ((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Power minus level of Greenwood, −Moran, the squared 2-spacings statistic
/// and the quadratic statistic on spacings residuals against `1 + h/scale`,
/// plus the log-likelihood approximation check.
pub fn spacings_sweep(cfg: &SpacingsConfig) -> Result<SpacingsReport> {
    let h = Arc::new(TrigProfile::new(cfg.h_terms.clone())?);
    let root = StreamKey::new(cfg.settings.seed).named("spacings");
    let quad = QuadraticTestSpec::default();
    let mut power = Vec::new();
    let mut loglik = Vec::new();
    for &n in &cfg.n_grid {
        if n < quad.num_terms() {
            return Err(invalid(format!("grid size n = {n} is too small")));
        }
        let key = root.child(n as u64);
        let null: Sampler<SpacingsDraw> = Box::new(move |rng| {
            let spacings = sample_spacings_null(n, rng);
            Ok(SpacingsDraw { points: spacings.points(), spacings })
        });
        let alts: Vec<AltCase<SpacingsDraw>> = cfg
            .scalings
            .iter()
            .map(|&scaling| {
                let h = h.clone();
                let scale = scaling.scale(n);
                AltCase::new(scaling.name(), h.l2_norm(), h.sup_abs() / scale, move |rng| {
                    let (points, _) = sample_alternative_points(n, h.as_ref(), scale, rng)?;
                    let spacings = SpacingsSample::from_sorted_points(&points)?;
                    Ok(SpacingsDraw { points, spacings })
                })
            })
            .collect();
        let prepared = quad.prepare(n + 1)?;
        let stats = [
            NamedStat::new("greenwood", |d: &SpacingsDraw| Ok(greenwood(&d.spacings))),
            NamedStat::new("neg_moran", |d: &SpacingsDraw| Ok(-moran(&d.spacings)?)),
            NamedStat::new("two_spacings_square", |d: &SpacingsDraw| {
                two_spacings_statistic(&d.points, TwoSpacingsFn::Square)
            }),
            NamedStat::new("quadratic_residuals", move |d: &SpacingsDraw| {
                Ok(prepared.eval(&spacings_residuals(&d.spacings)))
            }),
        ];
        let reports = estimate_power(n, &null, &alts, &stats, &cfg.settings, key)?;
        power.extend(reports.iter().map(GapRow::from_report));

        let h_ref = h.as_ref();
        let batches: Vec<(f64, f64)> = par::map_indexed(cfg.loglik_batches, |b| {
            let mut rng = key.named("loglik").child(b as u64).rng(0);
            let gaps: Vec<f64> = (0..cfg.loglik_draws)
                .map(|_| {
                    let d = sample_spacings_null(n, &mut rng);
                    (spacings_loglik_approx(h_ref, &d) - spacings_loglik_exact(h_ref, &d)).abs()
                })
                .collect();
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            (p95(gaps), mean)
        });
        let p = Estimate::from_samples(&batches.iter().map(|b| b.0).collect::<Vec<_>>());
        let m = Estimate::from_samples(&batches.iter().map(|b| b.1).collect::<Vec<_>>());
        loglik.push(LoglikRow {
            n,
            p95_abs_gap: p.mean,
            p95_se: p.se,
            mean_abs_gap: m.mean,
        });
    }
    let x: Vec<f64> = loglik.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = loglik.iter().map(|r| r.p95_abs_gap).collect();
    let se: Vec<f64> = loglik.iter().map(|r| r.p95_se).collect();
    let loglik_slope = if loglik.len() >= 2 {
        ols_slope(&x, &y, &se)
    } else {
        Estimate { mean: f64::NAN, se: f64::NAN }
    };
    Ok(SpacingsReport { power, loglik, loglik_slope })
}
