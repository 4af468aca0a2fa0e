use nalgebra::DMatrix;
use rand::Rng as _;
use serde::Serialize;

use super::power::{estimate_power, AltCase, GapRow, NamedStat, PowerSettings, Sampler};
use crate::clt::MProfile;
use crate::error::{invalid, Result};
use crate::model::{sample_matrix_variate, NeymanScottLayout};
use crate::rng::StreamKey;
use crate::statistics::{anova_f, cell_means_chisq, log_generalized_variance};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeymanScottConfig {
    pub nu: usize,
    pub sigma: f64,
    pub delta: f64,
    pub n_grid: Vec<usize>,
    /// Also run the two-column matrix-variate case.
    pub matrix_variate: bool,
    pub settings: PowerSettings,
}

impl Default for NeymanScottConfig {
    fn default() -> Self {
        NeymanScottConfig {
            nu: 5,
            sigma: 1.0,
            delta: 3.0,
            n_grid: vec![100, 1000, 10_000],
            matrix_variate: true,
            settings: PowerSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeymanScottRow {
    pub nu: usize,
    #[serde(flatten)]
    pub cell: GapRow,
}

/// Centered `±1` signs scaled to norm `delta`, drawn once from `key`.
pub fn random_sign_profile(n: usize, delta: f64, key: StreamKey) -> Vec<f64> {
    let mut rng = key.rng(0);
    let mut s: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    if s.iter().all(|&v| v == s[0]) {
        s[0] = -s[0];
    }
    let mean = s.iter().sum::<f64>() / n as f64;
    let norm = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    s.iter().map(|v| delta * (v - mean) / norm).collect()
}

fn audit(m: &[f64]) -> (f64, f64) {
    let mean = m.iter().sum::<f64>() / m.len() as f64;
    let norm = m.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    let dev = m.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    (norm, dev)
}

/// ANOVA F (σ unknown) and chi-square on cell means (σ known) against spike
/// and random-sign group means with `‖m − m̄‖ = δ`; optionally the log
/// generalized variance of `n × 2` rows `N₂(Mᵢ, I)` against a spike in the
/// first column.
pub fn neyman_scott_sweep(cfg: &NeymanScottConfig) -> Result<Vec<NeymanScottRow>> {
    if !(cfg.delta >= 0.0) || !cfg.delta.is_finite() {
        return Err(invalid("delta must be finite and nonnegative"));
    }
    let root = StreamKey::new(cfg.settings.seed).named("neyman-scott");
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let layout = NeymanScottLayout::new(n, cfg.nu, cfg.sigma)?;
        let key = root.child(n as u64);
        let profiles = [
            ("spike", MProfile::Spike.build(n, cfg.delta, 0)),
            ("random_signs", random_sign_profile(n, cfg.delta, key.named("signs"))),
        ];
        let alts: Vec<AltCase<DMatrix<f64>>> = profiles
            .into_iter()
            .map(|(label, m)| {
                let (norm, dev) = audit(&m);
                AltCase::new(label, norm, dev, move |rng| layout.sample(&m, rng))
            })
            .collect();
        let null_layout = layout;
        let zeros = vec![0.0; n];
        let null: Sampler<DMatrix<f64>> = Box::new(move |rng| null_layout.sample(&zeros, rng));
        let sigma = cfg.sigma;
        let stats = [
            NamedStat::new("anova_f", anova_f),
            NamedStat::new("cell_means_chisq", move |x: &DMatrix<f64>| Ok(cell_means_chisq(x, sigma))),
        ];
        let reports = estimate_power(n, &null, &alts, &stats, &cfg.settings, key)?;
        rows.extend(reports.iter().map(|r| NeymanScottRow {
            nu: cfg.nu,
            cell: GapRow::from_report(r),
        }));

        if cfg.matrix_variate {
            let spike = MProfile::Spike.build(n, cfg.delta, 0);
            let (norm, dev) = audit(&spike);
            let means = DMatrix::from_fn(n, 2, |i, j| if j == 0 { spike[i] } else { 0.0 });
            let zero = DMatrix::zeros(n, 2);
            let null: Sampler<DMatrix<f64>> = Box::new(move |rng| Ok(sample_matrix_variate(&zero, rng)));
            let alts = [AltCase::new("matrix_variate", norm, dev, move |rng| {
                Ok(sample_matrix_variate(&means, rng))
            })];
            let stats = [NamedStat::new("log_generalized_variance", |x: &DMatrix<f64>| {
                Ok(log_generalized_variance(x))
            })];
            let reports = estimate_power(n, &null, &alts, &stats, &cfg.settings, key.named("matrix"))?;
            rows.extend(reports.iter().map(|r| NeymanScottRow {
                nu: 1,
                cell: GapRow::from_report(r),
            }));
        }
    }
    Ok(rows)
}
