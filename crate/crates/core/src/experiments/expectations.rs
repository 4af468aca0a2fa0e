use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::power::{select, PowerSettings};
use super::spacings::{spacings_sweep, SpacingsConfig, SpacingsScaling};
use super::theorem2::{theorem2_sweep, SweepFamily, Theorem2Config};
use crate::error::{invalid, Result};
use crate::model::ExpFamily;
use crate::numeric::Estimate;

pub const EXPECTATIONS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pilot {
    pub seed: u64,
    pub reps: usize,
    pub calibration_reps: usize,
}

/// Pass thresholds measured by a pilot run, never asserted as ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub version: u32,
    pub pilot: Pilot,
    pub floors: BTreeMap<String, f64>,
}

impl Expectations {
    pub fn parse(text: &str) -> Result<Self> {
        let e: Expectations = toml::from_str(text).map_err(|err| invalid(format!("expectations file: {err}")))?;
        if e.version != EXPECTATIONS_VERSION {
            return Err(invalid(format!(
                "expectations version {} is not supported (expected {EXPECTATIONS_VERSION})",
                e.version
            )));
        }
        Ok(e)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| invalid(format!("cannot read {}: {err}", path.display())))?;
        Self::parse(&text)
    }

    pub fn floor(&self, key: &str) -> Option<f64> {
        self.floors.get(key).copied()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# Pilot-calibrated pass thresholds. Regenerate with `invlab recalibrate`.\n");
        out.push_str(&format!("version = {}\n\n[pilot]\n", self.version));
        out.push_str(&format!(
            "seed = {}\nreps = {}\ncalibration_reps = {}\n\n[floors]\n",
            self.pilot.seed, self.pilot.reps, self.pilot.calibration_reps
        ));
        for (k, v) in &self.floors {
            out.push_str(&format!("\"{k}\" = {}\n", crate::cli::format_number(*v)));
        }
        out
    }
}

/// `max(0, min over the grid of (gap − 4·SE))`.
pub fn floor_of(gaps: &[Estimate]) -> f64 {
    gaps.iter()
        .map(|g| g.mean - 4.0 * g.se)
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

pub fn theorem2_floor_key(family: SweepFamily) -> String {
    format!("theorem2.{}.quadratic", family.name())
}

pub const SPACINGS_FLOOR_KEY: &str = "spacings.contiguous.quadratic_residuals";

/// Runs the pilot sweeps on the default grids and records floors for the
/// quadratic statistics' power gaps.
pub fn recalibrate(seed: u64, reps: usize, calibration_reps: usize) -> Result<Expectations> {
    let settings = PowerSettings {
        reps,
        calibration_reps,
        seed,
        ..PowerSettings::default()
    };
    let mut floors = BTreeMap::new();
    for family in [
        SweepFamily::Exp(ExpFamily::Normal),
        SweepFamily::Exp(ExpFamily::Poisson),
        SweepFamily::Exp(ExpFamily::Bernoulli),
        SweepFamily::Logistic,
    ] {
        let rows = theorem2_sweep(&Theorem2Config {
            family,
            settings,
            ..Theorem2Config::default()
        })?;
        let gaps: Vec<Estimate> = select(&rows, "smooth", "quadratic").iter().map(|r| r.gap()).collect();
        floors.insert(theorem2_floor_key(family), floor_of(&gaps));
    }
    let report = spacings_sweep(&SpacingsConfig {
        scalings: vec![SpacingsScaling::Contiguous],
        settings,
        ..SpacingsConfig::default()
    })?;
    let gaps: Vec<Estimate> = select(&report.power, "contiguous", "quadratic_residuals")
        .iter()
        .map(|r| r.gap())
        .collect();
    floors.insert(SPACINGS_FLOOR_KEY.to_string(), floor_of(&gaps));
    Ok(Expectations {
        version: EXPECTATIONS_VERSION,
        pilot: Pilot { seed, reps, calibration_reps },
        floors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut floors = BTreeMap::new();
        floors.insert("a.b".to_string(), 0.125);
        floors.insert(SPACINGS_FLOOR_KEY.to_string(), 0.5);
        let e = Expectations {
            version: EXPECTATIONS_VERSION,
            pilot: Pilot { seed: 3, reps: 10, calibration_reps: 20 },
            floors,
        };
        assert_eq!(Expectations::parse(&e.render()).unwrap(), e);
    }

    #[test]
    fn rejects_other_versions() {
        let text = "version = 99\n[pilot]\nseed = 1\nreps = 1\ncalibration_reps = 1\n[floors]\n";
        assert!(Expectations::parse(text).is_err());
    }

    #[test]
    fn floors_are_clamped() {
        let e = |mean, se| Estimate { mean, se };
        assert!((floor_of(&[e(0.5, 0.05), e(0.4, 0.025)]) - 0.3).abs() < 1e-12);
        assert_eq!(floor_of(&[e(0.01, 0.05)]), 0.0);
    }
}
