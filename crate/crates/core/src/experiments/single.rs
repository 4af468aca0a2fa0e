use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::neyman_scott::random_sign_profile;
use super::power::{estimate_power, AltCase, NamedStat, PowerReport, PowerSettings, Sampler};
use super::spacings::{spacings_residuals, SpacingsDraw};
use super::theorem2::SweepFamily;
use crate::clt::MProfile;
use crate::error::{invalid, Error, Result};
use crate::model::{
    sample_alternative_points, sample_matrix_variate, sample_model, sample_spacings_null, MeanVector,
    NeymanScottLayout, Profile, SpacingsSample, TrigProfile,
};
use crate::rng::StreamKey;
use crate::statistics::{
    anova_f, cell_means_chisq, chisq_statistic, greenwood, log_generalized_variance, moran,
    np_statistic, sample_variance, two_spacings_statistic, QuadraticTestSpec, TwoSpacingsFn,
};

/// Shape of an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AltKind {
    SingleSpike,
    SmoothProfile,
    RandomSigns,
    SpacingsH,
    MatrixVariate,
}

impl AltKind {
    pub fn name(self) -> &'static str {
        match self {
            AltKind::SingleSpike => "spike",
            AltKind::SmoothProfile => "smooth",
            AltKind::RandomSigns => "random_signs",
            AltKind::SpacingsH => "spacings_h",
            AltKind::MatrixVariate => "matrix_variate",
        }
    }
}

/// An alternative written `kind:scale`, e.g. `spike:3`. The scale is `δ`
/// (`‖m − m̄‖`) or, for `spacings_h`, the amplitude of `h = a·√2 cos(2πx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlternativeSpec {
    pub kind: AltKind,
    pub scale: f64,
}

impl FromStr for AlternativeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, scale) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("alternative `{s}` is not of the form kind:scale")))?;
        let kind = [
            AltKind::SingleSpike,
            AltKind::SmoothProfile,
            AltKind::RandomSigns,
            AltKind::SpacingsH,
            AltKind::MatrixVariate,
        ]
        .into_iter()
        .find(|k| k.name() == kind)
        .ok_or_else(|| invalid(format!("unknown alternative kind `{kind}`")))?;
        let scale: f64 = scale
            .parse()
            .map_err(|_| invalid(format!("alternative scale `{scale}` is not a number")))?;
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(invalid("alternative scale must be finite and nonnegative"));
        }
        Ok(AlternativeSpec { kind, scale })
    }
}

impl fmt::Display for AlternativeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.scale)
    }
}

/// Data model for a single power run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PowerModel {
    /// `N(m, Iₙ)` against `N(0, Iₙ)`.
    Normal,
    /// Independent draws from the family with all parameters 0 under the null.
    Family(SweepFamily),
    /// `n` groups of `nu` normals with standard deviation `sigma`.
    NeymanScott { nu: usize, sigma: f64 },
    /// `n × 2` rows `N₂(Mᵢ, I)`.
    MatrixVariate,
    /// `n` points on `[0, 1]`, alternative density `1 + h/√n`.
    Spacings,
}

impl PowerModel {
    pub fn name(&self) -> &'static str {
        match self {
            PowerModel::Normal => "normal",
            PowerModel::Family(f) => f.name(),
            PowerModel::NeymanScott { .. } => "neyman_scott",
            PowerModel::MatrixVariate => "matrix_variate",
            PowerModel::Spacings => "spacings",
        }
    }

    pub fn statistics(&self) -> &'static [&'static str] {
        match self {
            PowerModel::Normal => &["chisq", "np", "sample_variance", "quadratic"],
            PowerModel::Family(_) => &["sample_variance", "quadratic"],
            PowerModel::NeymanScott { .. } => &["anova_f", "cell_means_chisq"],
            PowerModel::MatrixVariate => &["log_generalized_variance"],
            PowerModel::Spacings => &["greenwood", "neg_moran", "two_spacings_square", "quadratic_residuals"],
        }
    }
}

/// Parameter vector for a spike, smooth or random-sign alternative with
/// `‖m − m̄‖ = scale` and `m̄ = 0`.
pub fn alternative_profile(alt: &AlternativeSpec, n: usize, key: StreamKey) -> Result<Vec<f64>> {
    Ok(match alt.kind {
        AltKind::SingleSpike | AltKind::MatrixVariate => MProfile::Spike.build(n, alt.scale, 0),
        AltKind::SmoothProfile => MProfile::Smooth.build(n, alt.scale, 0),
        AltKind::RandomSigns => random_sign_profile(n, alt.scale, key.named("signs")),
        AltKind::SpacingsH => {
            return Err(invalid("spacings_h alternatives apply only to the spacings model"))
        }
    })
}

fn unknown_stat(model: &PowerModel, name: &str) -> Error {
    invalid(format!(
        "statistic `{name}` is not available for model {} (choose from {})",
        model.name(),
        model.statistics().join(", ")
    ))
}

fn audit(m: &[f64]) -> (f64, f64) {
    let mv = MeanVector::unbounded(m.to_vec()).expect("finite entries");
    (mv.centered_norm(), mv.max_abs_deviation())
}

/// Calibrated level and power of each named statistic against one alternative
/// at one `n`.
pub fn run_power(
    model: &PowerModel,
    stat_names: &[String],
    alt: &AlternativeSpec,
    n: usize,
    settings: &PowerSettings,
) -> Result<Vec<PowerReport>> {
    if stat_names.is_empty() {
        return Err(invalid("at least one statistic is required"));
    }
    for s in stat_names {
        if !model.statistics().contains(&s.as_str()) {
            return Err(unknown_stat(model, s));
        }
    }
    let key = StreamKey::new(settings.seed).named("power").named(model.name()).child(n as u64);
    let label = alt.to_string();
    let quad = QuadraticTestSpec::default();
    match *model {
        PowerModel::Normal | PowerModel::Family(_) => {
            let (m, null_m) = match model {
                PowerModel::Normal => {
                    let m = match alt.kind {
                        AltKind::SingleSpike => {
                            let mut v = vec![0.0; n];
                            v[0] = alt.scale;
                            v
                        }
                        _ => alternative_profile(alt, n, key)?,
                    };
                    (MeanVector::unbounded(m)?, MeanVector::unbounded(vec![0.0; n])?)
                }
                _ => (MeanVector::new(alternative_profile(alt, n, key)?)?, MeanVector::constant(n, 0.0)?),
            };
            let family: &dyn crate::model::Family = match model {
                PowerModel::Family(f) => f.family(),
                _ => &crate::model::ExpFamily::Normal,
            };
            let (norm, dev) = (m.norm(), m.max_abs_deviation());
            let direction: Vec<f64> = if m.norm() > 0.0 {
                m.entries().to_vec()
            } else {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                e
            };
            let null: Sampler<Vec<f64>> = Box::new(move |rng| sample_model(family, &null_m, rng));
            let alts = [AltCase::new(&label, norm, dev, move |rng| sample_model(family, &m, rng))];
            let prepared = quad.prepare(n)?;
            let stats: Vec<NamedStat<Vec<f64>>> = stat_names
                .iter()
                .map(|s| match s.as_str() {
                    "chisq" => NamedStat::new(s, |x: &Vec<f64>| Ok(chisq_statistic(x))),
                    "np" => {
                        let d = direction.clone();
                        NamedStat::new(s, move |x: &Vec<f64>| np_statistic(&d, x))
                    }
                    "sample_variance" => NamedStat::new(s, |x: &Vec<f64>| Ok(sample_variance(x))),
                    _ => {
                        let p = prepared.clone();
                        NamedStat::new(s, move |x: &Vec<f64>| Ok(p.eval(x)))
                    }
                })
                .collect();
            estimate_power(n, &null, &alts, &stats, settings, key)
        }
        PowerModel::NeymanScott { nu, sigma } => {
            let layout = NeymanScottLayout::new(n, nu, sigma)?;
            let m = alternative_profile(alt, n, key)?;
            let (norm, dev) = audit(&m);
            let zeros = vec![0.0; n];
            let null: Sampler<DMatrix<f64>> = Box::new(move |rng| layout.sample(&zeros, rng));
            let alts = [AltCase::new(&label, norm, dev, move |rng| layout.sample(&m, rng))];
            let stats: Vec<NamedStat<DMatrix<f64>>> = stat_names
                .iter()
                .map(|s| match s.as_str() {
                    "anova_f" => NamedStat::new(s, anova_f),
                    _ => NamedStat::new(s, move |x: &DMatrix<f64>| Ok(cell_means_chisq(x, sigma))),
                })
                .collect();
            estimate_power(n, &null, &alts, &stats, settings, key)
        }
        PowerModel::MatrixVariate => {
            let m = alternative_profile(alt, n, key)?;
            let (norm, dev) = audit(&m);
            let means = DMatrix::from_fn(n, 2, |i, j| if j == 0 { m[i] } else { 0.0 });
            let zero = DMatrix::zeros(n, 2);
            let null: Sampler<DMatrix<f64>> = Box::new(move |rng| Ok(sample_matrix_variate(&zero, rng)));
            let alts = [AltCase::new(&label, norm, dev, move |rng| Ok(sample_matrix_variate(&means, rng)))];
            let stats = [NamedStat::new("log_generalized_variance", |x: &DMatrix<f64>| {
                Ok(log_generalized_variance(x))
            })];
            estimate_power(n, &null, &alts, &stats, settings, key)
        }
        PowerModel::Spacings => {
            if alt.kind != AltKind::SpacingsH {
                return Err(invalid("the spacings model takes a spacings_h:amplitude alternative"));
            }
            let h = Arc::new(if alt.scale > 0.0 {
                TrigProfile::cosine(1, alt.scale)?
            } else {
                TrigProfile::zero()
            });
            let scale = (n as f64).sqrt();
            let null: Sampler<SpacingsDraw> = Box::new(move |rng| {
                let spacings = sample_spacings_null(n, rng);
                Ok(SpacingsDraw { points: spacings.points(), spacings })
            });
            let hh = h.clone();
            let alts = [AltCase::new(&label, h.l2_norm(), h.sup_abs() / scale, move |rng| {
                let (points, _) = sample_alternative_points(n, hh.as_ref(), scale, rng)?;
                let spacings = SpacingsSample::from_sorted_points(&points)?;
                Ok(SpacingsDraw { points, spacings })
            })];
            let prepared = quad.prepare(n + 1)?;
            let stats: Vec<NamedStat<SpacingsDraw>> = stat_names
                .iter()
                .map(|s| match s.as_str() {
                    "greenwood" => NamedStat::new(s, |d: &SpacingsDraw| Ok(greenwood(&d.spacings))),
                    "neg_moran" => NamedStat::new(s, |d: &SpacingsDraw| Ok(-moran(&d.spacings)?)),
                    "two_spacings_square" => NamedStat::new(s, |d: &SpacingsDraw| {
                        two_spacings_statistic(&d.points, TwoSpacingsFn::Square)
                    }),
                    _ => {
                        let p = prepared.clone();
                        NamedStat::new(s, move |d: &SpacingsDraw| Ok(p.eval(&spacings_residuals(&d.spacings))))
                    }
                })
                .collect();
            estimate_power(n, &null, &alts, &stats, settings, key)
        }
    }
}
