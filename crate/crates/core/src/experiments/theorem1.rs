use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::Serialize;

use super::power::{estimate_power, AltCase, NamedStat, PowerSettings, Sampler};
use crate::error::{invalid, Result};
use crate::numeric::Estimate;
use crate::orbit::{h_integral_log, power_level_bound};
use crate::par;
use crate::rng::StreamKey;
use crate::statistics::{chisq_statistic, np_statistic};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Config {
    pub delta: f64,
    pub n_grid: Vec<usize>,
    pub settings: PowerSettings,
    /// Null draws of `L̄` for the bound.
    pub bound_reps: usize,
    /// Also run `δₙ = c·n^{1/4}` with this `c` (diagnostic rows).
    pub rate_probe: Option<f64>,
}

impl Default for Theorem1Config {
    fn default() -> Self {
        Theorem1Config {
            delta: 3.0,
            n_grid: vec![100, 1000, 10_000],
            settings: PowerSettings::default(),
            bound_reps: 10_000,
            rate_probe: Some(0.5),
        }
    }
}

/// Normal many-means model at one `n`: chi-square and Neyman-Pearson power at
/// a spike of norm `delta`, and the bound `E₀|L̄ − 1|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Row {
    pub n: usize,
    /// `fixed` for the δ grid, `rate_probe` for `δ = c·n^{1/4}`.
    pub kind: String,
    pub delta: f64,
    pub chisq_critical: f64,
    pub chisq_level: f64,
    pub chisq_level_se: f64,
    pub chisq_power: f64,
    pub chisq_power_se: f64,
    pub chisq_gap: f64,
    pub chisq_gap_se: f64,
    pub np_critical: f64,
    pub np_level: f64,
    pub np_level_se: f64,
    pub np_power: f64,
    pub np_power_se: f64,
    pub bound: f64,
    pub bound_se: f64,
}

impl Theorem1Row {
    pub fn chisq_gap(&self) -> Estimate {
        Estimate { mean: self.chisq_gap, se: self.chisq_gap_se }
    }

    pub fn np_power(&self) -> Estimate {
        Estimate { mean: self.np_power, se: self.np_power_se }
    }

    pub fn bound(&self) -> Estimate {
        Estimate { mean: self.bound, se: self.bound_se }
    }
}

/// Null draws of `L̄ = exp(−δ²/2) H(δ‖X‖)/H(0)`. `L̄` depends on `X` only
/// through `‖X‖² ~ χ²ₙ`, which is drawn directly.
pub fn orthogonal_lbar_null_samples(delta: f64, n: usize, reps: usize, key: StreamKey) -> Result<Vec<f64>> {
    let chi = ChiSquared::new(n as f64).map_err(|e| invalid(e.to_string()))?;
    let log_h0 = h_integral_log(0.0, n)?;
    par::replicate(key, reps, |rng| {
        let r = chi.sample(rng).sqrt();
        Ok((h_integral_log(delta * r, n)? - log_h0 - 0.5 * delta * delta).exp())
    })
    .into_iter()
    .collect()
}

fn run_point(n: usize, delta: f64, kind: &str, cfg: &Theorem1Config, key: StreamKey) -> Result<Theorem1Row> {
    // the NP direction is e₁ for every δ, including δ = 0
    let mut direction = vec![0.0; n];
    direction[0] = 1.0;
    let alt_mean: Vec<f64> = direction.iter().map(|d| d * delta).collect();
    let null: Sampler<Vec<f64>> = Box::new(move |rng| Ok((0..n).map(|_| rng.sample(StandardNormal)).collect()));
    let alts = [AltCase::new("spike", delta, delta, move |rng| {
        Ok(alt_mean.iter().map(|mu| mu + rng.sample::<f64, _>(StandardNormal)).collect())
    })];
    let stats = [
        NamedStat::new("chisq", |x: &Vec<f64>| Ok(chisq_statistic(x))),
        NamedStat::new("np", move |x: &Vec<f64>| np_statistic(&direction, x)),
    ];
    let reports = estimate_power(n, &null, &alts, &stats, &cfg.settings, key)?;
    let (chisq, np) = (&reports[0], &reports[1]);
    let lbar = orthogonal_lbar_null_samples(delta, n, cfg.bound_reps, key.named("bound"))?;
    let bound = power_level_bound(&lbar);
    let gap = chisq.gap();
    Ok(Theorem1Row {
        n,
        kind: kind.to_string(),
        delta,
        chisq_critical: chisq.critical,
        chisq_level: chisq.level_hat,
        chisq_level_se: chisq.level_se,
        chisq_power: chisq.power_hat,
        chisq_power_se: chisq.power_se,
        chisq_gap: gap.mean,
        chisq_gap_se: gap.se,
        np_critical: np.critical,
        np_level: np.level_hat,
        np_level_se: np.level_se,
        np_power: np.power_hat,
        np_power_se: np.power_se,
        bound: bound.mean,
        bound_se: bound.se,
    })
}

/// Power minus level of the orthogonally invariant chi-square test against a
/// spike of norm `delta` in `N(m, Iₙ)`, the same for the Neyman-Pearson test,
/// and the bound `E₀|L̄ − 1|`, across `n`.
pub fn theorem1_sweep(cfg: &Theorem1Config) -> Result<Vec<Theorem1Row>> {
    if !(cfg.delta >= 0.0) || !cfg.delta.is_finite() {
        return Err(invalid("delta must be finite and nonnegative"));
    }
    let root = StreamKey::new(cfg.settings.seed).named("theorem1");
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        if n < 3 {
            return Err(invalid(format!("grid size n = {n} must be at least 3")));
        }
        rows.push(run_point(n, cfg.delta, "fixed", cfg, root.child(n as u64))?);
    }
    if let Some(c) = cfg.rate_probe {
        for &n in &cfg.n_grid {
            let delta = c * (n as f64).powf(0.25);
            rows.push(run_point(n, delta, "rate_probe", cfg, root.named("rate").child(n as u64))?);
        }
    }
    Ok(rows)
}
