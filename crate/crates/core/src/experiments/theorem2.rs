use serde::Serialize;

use super::power::{estimate_power, AltCase, GapRow, NamedStat, PowerSettings, Sampler};
use crate::clt::MProfile;
use crate::error::{invalid, Result};
use crate::model::{sample_model, ExpFamily, Family, GeneralFamily, MeanVector};
use crate::rng::StreamKey;
use crate::statistics::{sample_variance, QuadraticTestSpec};

/// Families covered by the permutation-group sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepFamily {
    Exp(ExpFamily),
    /// The logistic location family (not an exponential family).
    Logistic,
}

impl SweepFamily {
    pub fn family(&self) -> &dyn Family {
        match self {
            SweepFamily::Exp(f) => f,
            SweepFamily::Logistic => &GeneralFamily::Logistic,
        }
    }

    pub fn name(&self) -> &'static str {
        self.family().name()
    }

    pub fn from_name(s: &str) -> Option<Self> {
        if s == GeneralFamily::Logistic.name() {
            return Some(SweepFamily::Logistic);
        }
        ExpFamily::from_name(s).map(SweepFamily::Exp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Config {
    pub family: SweepFamily,
    pub mbar: f64,
    pub delta: f64,
    pub n_grid: Vec<usize>,
    pub settings: PowerSettings,
}

impl Default for Theorem2Config {
    fn default() -> Self {
        Theorem2Config {
            family: SweepFamily::Exp(ExpFamily::Normal),
            mbar: 0.0,
            delta: 1.5,
            n_grid: vec![100, 1000, 10_000],
            settings: PowerSettings::default(),
        }
    }
}

/// Power minus level of the permutation-invariant sample variance and of the
/// non-invariant quadratic statistic, at a centered spike and a smooth
/// profile alternative with `‖m − m̄‖ = δ`, across `n`.
pub fn theorem2_sweep(cfg: &Theorem2Config) -> Result<Vec<GapRow>> {
    if !(cfg.delta >= 0.0) || !cfg.delta.is_finite() {
        return Err(invalid("delta must be finite and nonnegative"));
    }
    let family = cfg.family;
    let root = StreamKey::new(cfg.settings.seed)
        .named("theorem2")
        .named(family.name());
    let quad = QuadraticTestSpec::default();
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        if n < quad.num_terms().max(3) {
            return Err(invalid(format!("grid size n = {n} is too small")));
        }
        let null_m = MeanVector::constant(n, cfg.mbar)?;
        let mut alts = Vec::new();
        for profile in [MProfile::Spike, MProfile::Smooth] {
            let entries: Vec<f64> = profile.build(n, cfg.delta, 0).iter().map(|d| cfg.mbar + d).collect();
            let m = MeanVector::new(entries)?;
            let (lo, hi) = family.family().theta0();
            m.check_within(lo, hi)?;
            let (norm, dev) = (m.centered_norm(), m.max_abs_deviation());
            alts.push(AltCase::new(profile.name(), norm, dev, move |rng| {
                sample_model(family.family(), &m, rng)
            }));
        }
        let null: Sampler<Vec<f64>> = Box::new(move |rng| sample_model(family.family(), &null_m, rng));
        let prepared = quad.prepare(n)?;
        let stats = [
            NamedStat::new("sample_variance", |x: &Vec<f64>| Ok(sample_variance(x))),
            NamedStat::new("quadratic", move |x: &Vec<f64>| Ok(prepared.eval(x))),
        ];
        let reports = estimate_power(n, &null, &alts, &stats, &cfg.settings, root.child(n as u64))?;
        rows.extend(reports.iter().map(GapRow::from_report));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in [
            SweepFamily::Exp(ExpFamily::Normal),
            SweepFamily::Exp(ExpFamily::Poisson),
            SweepFamily::Exp(ExpFamily::Bernoulli),
            SweepFamily::Logistic,
        ] {
            assert_eq!(SweepFamily::from_name(f.name()), Some(f));
        }
        assert_eq!(SweepFamily::from_name("gamma"), None);
    }

    #[test]
    fn rejects_spike_outside_compact_set() {
        let cfg = Theorem2Config {
            delta: 3.0,
            n_grid: vec![50],
            ..Theorem2Config::default()
        };
        assert!(theorem2_sweep(&cfg).is_err());
    }
}
