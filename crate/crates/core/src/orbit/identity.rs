use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::design::DesignProjector;
use super::lbar::{log_lbar_orthogonal, log_lbar_permutation, OrbitSpec};
use crate::error::{Error, Result};
use crate::model::{sample_model, ExpFamily, MeanVector};
use crate::numeric::Estimate;
use crate::par;
use crate::rng::{Rng, StreamKey};
use crate::statistics::{permute, rotate, verify_invariance};

/// A model, an alternative and the group whose orbit is averaged over.
#[derive(Debug, Clone)]
pub enum OrbitModel {
    /// `X ~ N(m, I)` against `N(0, I)`, full orthogonal group.
    Orthogonal { m: Vec<f64> },
    /// Independent `Xᵢ ~ f(·; mᵢ)` against all `mᵢ = m̄`, permutation group.
    Permutation {
        family: ExpFamily,
        m: MeanVector,
        spec: OrbitSpec,
    },
    /// `Y ~ N(m, I)` with `Xᵀm = 0` against `N(0, I)`, group `O_X`.
    Design {
        projector: Arc<DesignProjector>,
        m: Vec<f64>,
    },
}

impl OrbitModel {
    pub fn n(&self) -> usize {
        match self {
            OrbitModel::Orthogonal { m } | OrbitModel::Design { m, .. } => m.len(),
            OrbitModel::Permutation { m, .. } => m.len(),
        }
    }

    pub fn sample_null(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            OrbitModel::Orthogonal { m } | OrbitModel::Design { m, .. } => {
                Ok((0..m.len()).map(|_| rng.sample(StandardNormal)).collect())
            }
            OrbitModel::Permutation { family, m, .. } => {
                let null = MeanVector::constant(m.len(), m.mean())?;
                sample_model(family, &null, rng)
            }
        }
    }

    pub fn sample_alt(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            OrbitModel::Orthogonal { m } | OrbitModel::Design { m, .. } => Ok(m
                .iter()
                .map(|mi| mi + rng.sample::<f64, _>(StandardNormal))
                .collect()),
            OrbitModel::Permutation { family, m, .. } => sample_model(family, m, rng),
        }
    }

    /// `L̄(x)`; Monte Carlo permutation averaging draws from `rng`.
    pub fn lbar(&self, x: &[f64], rng: &mut Rng) -> Result<f64> {
        let log = match self {
            OrbitModel::Orthogonal { m } => log_lbar_orthogonal(m, x)?,
            OrbitModel::Permutation { family, m, spec } => {
                log_lbar_permutation(*family, m, x, spec, rng)?
            }
            OrbitModel::Design { projector, m } => projector.log_lbar(m, x)?,
        };
        let v = log.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("averaged likelihood ratio"))
        }
    }

    /// `gx` for a random element `g` of the model's group.
    pub fn act(&self, x: &[f64], rng: &mut Rng) -> Vec<f64> {
        match self {
            OrbitModel::Orthogonal { .. } => rotate(x, rng),
            OrbitModel::Permutation { .. } => permute(x, rng),
            OrbitModel::Design { projector, .. } => projector
                .act(x, rng)
                .expect("sample length matches the design"),
        }
    }
}

/// Two Monte Carlo estimates of `E_m T`: directly, and as `E₀[T·L̄]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: Estimate,
    pub rhs: Estimate,
}

impl IdentityCheck {
    /// Standard error of `lhs − rhs` (independent streams).
    pub fn se(&self) -> f64 {
        self.lhs.se.hypot(self.rhs.se)
    }

    pub fn holds(&self, z: f64) -> bool {
        (self.lhs.mean - self.rhs.mean).abs() <= z * self.se()
    }
}

/// Checks `E_m T(X) = E₀[T(X) L̄(X)]` by Monte Carlo. The statistic is first
/// checked for invariance under the model's group on a null draw.
pub fn identity_check<T>(model: &OrbitModel, statistic: T, reps: usize, key: StreamKey) -> Result<IdentityCheck>
where
    T: Fn(&[f64]) -> f64 + Sync + Send,
{
    let mut rng = key.named("invariance").rng(0);
    let probe = model.sample_null(&mut rng)?;
    let stat = |x: &Vec<f64>| statistic(x);
    if !verify_invariance(stat, |x: &Vec<f64>, r: &mut Rng| model.act(x, r), &probe, 16, &mut rng) {
        return Err(Error::NotInvariant);
    }
    let lhs: Vec<f64> = par::replicate(key.named("alternative"), reps, |rng| {
        model.sample_alt(rng).map(|x| statistic(&x))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let rhs: Vec<f64> = par::replicate(key.named("null"), reps, |rng| {
        let x = model.sample_null(rng)?;
        Ok(statistic(&x) * model.lbar(&x, rng)?)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(IdentityCheck {
        lhs: Estimate::from_samples(&lhs),
        rhs: Estimate::from_samples(&rhs),
    })
}

/// Null draws of `L̄`, in replicate order.
pub fn lbar_null_samples(model: &OrbitModel, reps: usize, key: StreamKey) -> Result<Vec<f64>> {
    par::replicate(key, reps, |rng| {
        let x = model.sample_null(rng)?;
        model.lbar(&x, rng)
    })
    .into_iter()
    .collect()
}

/// Monte Carlo estimate of `E₀ L̄`, which equals one for every group.
pub fn lbar_null_mean(model: &OrbitModel, reps: usize, key: StreamKey) -> Result<Estimate> {
    Ok(Estimate::from_samples(&lbar_null_samples(model, reps, key)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::{chisq_statistic, np_statistic, sample_variance};

    #[test]
    fn constant_statistic() {
        let model = OrbitModel::Orthogonal { m: vec![0.5; 10] };
        let c = identity_check(&model, |_| 1.0, 2000, StreamKey::new(1)).unwrap();
        assert_eq!(c.lhs.mean, 1.0);
        assert!((c.rhs.mean - 1.0).abs() < 4.0 * c.rhs.se.max(1e-12));
    }

    #[test]
    fn rejects_non_invariant_statistic() {
        let m = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        let model = OrbitModel::Orthogonal { m: m.clone() };
        let err = identity_check(&model, |x| np_statistic(&m, x).unwrap(), 10, StreamKey::new(2));
        assert_eq!(err.unwrap_err(), Error::NotInvariant);
    }

    #[test]
    fn permutation_identity_small_poisson() {
        let m = MeanVector::new(vec![0.6, -0.3, 0.2, -0.4, 0.1, -0.2]).unwrap();
        let model = OrbitModel::Permutation {
            family: ExpFamily::Poisson,
            m,
            spec: OrbitSpec::exhaustive(),
        };
        let c = identity_check(&model, |x| f64::from(sample_variance(x) > 1.5), 3000, StreamKey::new(3)).unwrap();
        assert!(c.holds(4.0), "{c:?}");
    }

    #[test]
    fn design_null_mean_is_one() {
        let n = 30;
        let proj = DesignProjector::intercept(n).unwrap();
        let m: Vec<f64> = (0..n).map(|i| if i == 0 { 1.5 } else { -1.5 / (n - 1) as f64 }).collect();
        let model = OrbitModel::Design { projector: Arc::new(proj), m };
        let e = lbar_null_mean(&model, 4000, StreamKey::new(4)).unwrap();
        assert!((e.mean - 1.0).abs() < 4.0 * e.se, "{e:?}");
    }

    #[test]
    fn residual_chisq_is_design_invariant() {
        let n = 12;
        let proj = Arc::new(DesignProjector::intercept(n).unwrap());
        let model = OrbitModel::Design { projector: proj.clone(), m: vec![0.0; n] };
        let resid = |x: &[f64]| chisq_statistic(&proj.residual(x).unwrap());
        assert!(identity_check(&model, resid, 50, StreamKey::new(5)).is_ok());
    }
}
