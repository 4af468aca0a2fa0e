use rand::seq::SliceRandom;
use serde::Serialize;

use super::h_integral_log;
use crate::error::{ensure_len, Error, Result};
use crate::model::{ExpFamily, MeanVector};
use crate::numeric::{for_each_permutation, Estimate, LogSumExp};
use crate::rng::Rng;

/// Largest `n` for exhaustive permutation averaging (8! = 40320 terms).
pub const EXHAUSTIVE_MAX_N: usize = 8;

/// The invariance group whose orbit is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupKind {
    FullOrthogonal,
    Permutation,
    PermutationExhaustive,
    OrthogonalFixingDesign,
}

impl GroupKind {
    pub fn name(self) -> &'static str {
        match self {
            GroupKind::FullOrthogonal => "full_orthogonal",
            GroupKind::Permutation => "permutation",
            GroupKind::PermutationExhaustive => "permutation_exhaustive",
            GroupKind::OrthogonalFixingDesign => "orthogonal_fixing_design",
        }
    }

    pub fn from_name(s: &str) -> Option<GroupKind> {
        [
            GroupKind::FullOrthogonal,
            GroupKind::Permutation,
            GroupKind::PermutationExhaustive,
            GroupKind::OrthogonalFixingDesign,
        ]
        .into_iter()
        .find(|g| g.name() == s)
    }
}

/// Group plus averaging strategy. The design matrix for the O_X group lives in
/// [`super::DesignProjector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitSpec {
    pub group: GroupKind,
    /// Random group elements per Monte Carlo average (non-exhaustive modes).
    pub mc_reps: usize,
}

impl OrbitSpec {
    pub fn exhaustive() -> Self {
        OrbitSpec {
            group: GroupKind::PermutationExhaustive,
            mc_reps: 0,
        }
    }

    pub fn monte_carlo(mc_reps: usize) -> Self {
        OrbitSpec {
            group: GroupKind::Permutation,
            mc_reps,
        }
    }
}

/// `log L̄` for the full orthogonal group.
pub fn log_lbar_orthogonal(m: &[f64], x: &[f64]) -> Result<f64> {
    ensure_len(m.len(), x.len())?;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    log_lbar_sphere(norm(m), norm(x), m.len())
}

/// `log{exp(−a²/2) H_d(a·r)/H_d(0)}`: the normal likelihood ratio of a mean of
/// length `a` averaged over the sphere, for data of length `r` in dimension `d`.
pub(crate) fn log_lbar_sphere(a: f64, r: f64, d: usize) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(h_integral_log(a * r, d)? - h_integral_log(0.0, d)? - 0.5 * a * a)
}

/// `L̄ = exp(−‖m‖²/2) H(‖m‖·‖x‖)/H(0)` for the normal model averaged over Haar
/// measure on the orthogonal group.
pub fn lbar_orthogonal(m: &[f64], x: &[f64]) -> Result<f64> {
    Ok(log_lbar_orthogonal(m, x)?.exp())
}

/// `log L̄` for the permutation group; see [`lbar_permutation`].
pub fn log_lbar_permutation(
    family: ExpFamily,
    m: &MeanVector,
    x: &[f64],
    spec: &OrbitSpec,
    rng: &mut Rng,
) -> Result<f64> {
    ensure_len(m.len(), x.len())?;
    let n = m.len();
    let mbar = m.mean();
    let d = m.centered();
    let bbar = family.beta(mbar);
    let log_prefactor: f64 = -m.entries().iter().map(|&mi| family.beta(mi) - bbar).sum::<f64>();
    if !log_prefactor.is_finite() {
        return Err(Error::NonFinite("cumulant function"));
    }
    let mut acc = LogSumExp::new();
    match spec.group {
        GroupKind::PermutationExhaustive => {
            if n > EXHAUSTIVE_MAX_N {
                return Err(Error::TooLargeForExhaustive(n));
            }
            for_each_permutation(n, |p| {
                acc.push(d.iter().zip(p).map(|(di, &j)| di * x[j]).sum());
            });
        }
        GroupKind::Permutation => {
            if spec.mc_reps == 0 {
                return Err(Error::InvalidArgument("mc_reps must be positive".into()));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            for _ in 0..spec.mc_reps {
                perm.shuffle(rng);
                acc.push(d.iter().zip(&perm).map(|(di, &j)| di * x[j]).sum());
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "permutation averaging called with group {}",
                other.name()
            )))
        }
    }
    Ok(log_prefactor + acc.ln_mean())
}

/// The likelihood ratio averaged over permutations of the alternative:
/// `exp{−Σ(β(mᵢ) − β(m̄))} · avg_P exp{(m − m̄)ᵀPx}`, exhaustive or over
/// `mc_reps` uniform random permutations.
pub fn lbar_permutation(
    family: ExpFamily,
    m: &MeanVector,
    x: &[f64],
    spec: &OrbitSpec,
    rng: &mut Rng,
) -> Result<f64> {
    Ok(log_lbar_permutation(family, m, x, spec, rng)?.exp())
}

/// The moment-generating-function approximation
/// `exp{Σ(mᵢ − m̄)²(S² − β''(m̄))/2}`, `S²` the sample variance with divisor n.
pub fn lbar_heuristic(family: ExpFamily, m: &MeanVector, x: &[f64]) -> Result<f64> {
    ensure_len(m.len(), x.len())?;
    let mbar = m.mean();
    let s2 = crate::numeric::population_variance(x);
    let sq = m.centered_norm().powi(2);
    Ok((0.5 * sq * (s2 - family.beta2(mbar))).exp())
}

/// Estimate of `E₀|L̄ − 1|` from null draws of `L̄`.
pub fn power_level_bound(lbar_samples: &[f64]) -> Estimate {
    let dev: Vec<f64> = lbar_samples.iter().map(|l| (l - 1.0).abs()).collect();
    Estimate::from_samples(&dev)
}

/// `Var₀(L̄) = avg_P exp{(m − m̄)ᵀP(m − m̄)} − 1` for the normal model with
/// unit variance, averaged exhaustively for `n ≤ 8` and over `mc_reps` random
/// permutations otherwise. Diagnostic only.
pub fn permutation_lbar_variance(m: &MeanVector, mc_reps: usize, rng: &mut Rng) -> f64 {
    let d = m.centered();
    let n = d.len();
    let mut acc = LogSumExp::new();
    if n <= EXHAUSTIVE_MAX_N {
        for_each_permutation(n, |p| acc.push(d.iter().zip(p).map(|(a, &j)| a * d[j]).sum()));
    } else {
        let mut perm: Vec<usize> = (0..n).collect();
        for _ in 0..mc_reps.max(1) {
            perm.shuffle(rng);
            acc.push(d.iter().zip(&perm).map(|(a, &j)| a * d[j]).sum());
        }
    }
    acc.ln_mean().exp() - 1.0
}
