use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numeric::Estimate;
use crate::par;
use crate::rng::{Rng, StreamKey};

/// Draws one data set.
pub type Sampler<'a, D> = Box<dyn Fn(&mut Rng) -> Result<D> + Sync + Send + 'a>;
/// Evaluates a one-sided statistic (large values reject).
pub type StatFn<'a, D> = Box<dyn Fn(&D) -> Result<f64> + Sync + Send + 'a>;

pub struct NamedStat<'a, D> {
    pub name: String,
    pub eval: StatFn<'a, D>,
}

impl<'a, D> NamedStat<'a, D> {
    pub fn new(name: &str, eval: impl Fn(&D) -> Result<f64> + Sync + Send + 'a) -> Self {
        NamedStat {
            name: name.to_string(),
            eval: Box::new(eval),
        }
    }
}

/// One alternative: a sampler plus the numbers needed to audit it.
pub struct AltCase<'a, D> {
    pub label: String,
    /// `‖m − m̄‖`, or `‖h‖` for spacings alternatives.
    pub norm: f64,
    /// `max|mᵢ − m̄|`, or `sup|h|/scale` for spacings alternatives.
    pub max_dev: f64,
    pub sampler: Sampler<'a, D>,
}

impl<'a, D> AltCase<'a, D> {
    pub fn new(
        label: &str,
        norm: f64,
        max_dev: f64,
        sampler: impl Fn(&mut Rng) -> Result<D> + Sync + Send + 'a,
    ) -> Self {
        AltCase {
            label: label.to_string(),
            norm,
            max_dev,
            sampler: Box::new(sampler),
        }
    }
}

/// Replicate counts, nominal level and seed shared by a power run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSettings {
    pub level: f64,
    pub reps: usize,
    pub calibration_reps: usize,
    pub seed: u64,
}

impl Default for PowerSettings {
    fn default() -> Self {
        PowerSettings {
            level: 0.05,
            reps: 10_000,
            calibration_reps: 20_000,
            seed: 0,
        }
    }
}

/// A calibrated rejection rule: reject when `T > value`, and with
/// probability `tie_prob` when `T = value`, so discrete statistics still
/// have size `α` under the calibration sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Critical {
    pub value: f64,
    pub tie_prob: f64,
}

impl Critical {
    /// The test function `φ(t)`.
    pub fn reject(&self, t: f64) -> f64 {
        if t > self.value {
            1.0
        } else if t == self.value {
            self.tie_prob
        } else {
            0.0
        }
    }
}

/// The empirical upper-`level` quantile `T_(⌈(1−α)R⌉)` of a null sample.
pub fn critical_from_sample(values: &[f64], level: f64) -> Result<Critical> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("level must lie in (0, 1), got {level}")));
    }
    let reps = values.len();
    if (reps as f64) * level < 20.0 {
        return Err(Error::TooFewReplicates { reps, level });
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("null statistic sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = (((1.0 - level) * reps as f64) - 1e-9).ceil() as usize;
    let value = sorted[k.clamp(1, reps) - 1];
    let above = sorted.iter().filter(|&&v| v > value).count() as f64;
    let at = sorted.iter().filter(|&&v| v == value).count() as f64;
    let tie_prob = ((level * reps as f64 - above) / at).clamp(0.0, 1.0);
    Ok(Critical { value, tie_prob })
}

/// Calibrates a critical value from `reps` null draws of the statistic.
pub fn calibrate_critical<F>(null_statistic: F, level: f64, reps: usize, key: StreamKey) -> Result<Critical>
where
    F: Fn(&mut Rng) -> Result<f64> + Sync + Send,
{
    let values: Vec<f64> = par::replicate(key, reps, null_statistic)
        .into_iter()
        .collect::<Result<_>>()?;
    critical_from_sample(&values, level)
}

/// Calibrated level and power of one statistic against one alternative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub statistic: String,
    pub n: usize,
    pub alternative: String,
    pub alt_norm: f64,
    pub alt_max_dev: f64,
    pub level_target: f64,
    pub critical: f64,
    pub tie_prob: f64,
    pub level_hat: f64,
    pub level_se: f64,
    pub power_hat: f64,
    pub power_se: f64,
    pub reps: usize,
    pub calibration_reps: usize,
    pub seed: u64,
}

impl PowerReport {
    pub fn level(&self) -> Estimate {
        Estimate { mean: self.level_hat, se: self.level_se }
    }

    pub fn power(&self) -> Estimate {
        Estimate { mean: self.power_hat, se: self.power_se }
    }

    /// `power − level` with the SE of the difference.
    pub fn gap(&self) -> Estimate {
        self.power().minus(self.level())
    }
}

/// One (n, alternative, statistic) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub n: usize,
    pub alternative: String,
    pub statistic: String,
    pub alt_norm: f64,
    pub alt_max_dev: f64,
    pub critical: f64,
    pub level_hat: f64,
    pub level_se: f64,
    pub power_hat: f64,
    pub power_se: f64,
    pub gap: f64,
    pub gap_se: f64,
}

impl GapRow {
    pub fn from_report(r: &PowerReport) -> Self {
        let gap = r.gap();
        GapRow {
            n: r.n,
            alternative: r.alternative.clone(),
            statistic: r.statistic.clone(),
            alt_norm: r.alt_norm,
            alt_max_dev: r.alt_max_dev,
            critical: r.critical,
            level_hat: r.level_hat,
            level_se: r.level_se,
            power_hat: r.power_hat,
            power_se: r.power_se,
            gap: gap.mean,
            gap_se: gap.se,
        }
    }

    pub fn gap(&self) -> Estimate {
        Estimate { mean: self.gap, se: self.gap_se }
    }
}

/// Rows matching an alternative and statistic, in grid order.
pub fn select<'a>(rows: &'a [GapRow], alternative: &str, statistic: &str) -> Vec<&'a GapRow> {
    rows.iter()
        .filter(|r| r.alternative == alternative && r.statistic == statistic)
        .collect()
}

/// All statistics evaluated on `reps` draws; one column per statistic.
fn stat_columns<D>(sampler: &Sampler<'_, D>, stats: &[NamedStat<'_, D>], reps: usize, key: StreamKey) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Vec<f64>> = par::replicate(key, reps, |rng| {
        let data = sampler(rng)?;
        stats.iter().map(|s| (s.eval)(&data)).collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok((0..stats.len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect())
}

fn rejection_rate(values: &[f64], critical: &Critical) -> Estimate {
    let phi: Vec<f64> = values.iter().map(|&t| critical.reject(t)).collect();
    Estimate::from_samples(&phi)
}

/// Calibrates every statistic on one null sample, re-estimates its level on a
/// fresh null sample, and estimates its power against every alternative.
/// Calibration, level and power draws use separate streams under `key`.
pub fn estimate_power<D>(
    n: usize,
    null: &Sampler<'_, D>,
    alternatives: &[AltCase<'_, D>],
    stats: &[NamedStat<'_, D>],
    settings: &PowerSettings,
    key: StreamKey,
) -> Result<Vec<PowerReport>> {
    if settings.reps < 2 {
        return Err(invalid("power estimation needs at least 2 replicates"));
    }
    let calibration = stat_columns(null, stats, settings.calibration_reps, key.named("calibrate"))?;
    let criticals: Vec<Critical> = calibration
        .iter()
        .map(|c| critical_from_sample(c, settings.level))
        .collect::<Result<_>>()?;
    let level_cols = stat_columns(null, stats, settings.reps, key.named("level"))?;
    let levels: Vec<Estimate> = level_cols
        .iter()
        .zip(&criticals)
        .map(|(c, crit)| rejection_rate(c, crit))
        .collect();
    let mut reports = Vec::with_capacity(alternatives.len() * stats.len());
    for (a, alt) in alternatives.iter().enumerate() {
        let cols = stat_columns(&alt.sampler, stats, settings.reps, key.named("power").child(a as u64))?;
        for (k, stat) in stats.iter().enumerate() {
            let power = rejection_rate(&cols[k], &criticals[k]);
            reports.push(PowerReport {
                statistic: stat.name.clone(),
                n,
                alternative: alt.label.clone(),
                alt_norm: alt.norm,
                alt_max_dev: alt.max_dev,
                level_target: settings.level,
                critical: criticals[k].value,
                tie_prob: criticals[k].tie_prob,
                level_hat: levels[k].mean,
                level_se: levels[k].se,
                power_hat: power.mean,
                power_se: power.se,
                reps: settings.reps,
                calibration_reps: settings.calibration_reps,
                seed: settings.seed,
            });
        }
    }
    Ok(reports)
}
