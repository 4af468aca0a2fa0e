use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use super::perm::perm_law_moments;
use crate::error::{ensure_len, invalid, Result};
use crate::numeric::Estimate;
use crate::par;
use crate::rng::{Rng, StreamKey};

/// A without-replacement sum and a with-replacement sum built on one
/// probability space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingDraw {
    /// `Σ mᵢ x(Jᵢ)`, `J` a uniform permutation.
    pub without_repl: f64,
    /// `Σ mᵢ x(J*ᵢ)`, `J*` iid uniform.
    pub with_repl: f64,
    /// Number of indices with `Jᵢ = J*ᵢ`.
    pub matched_prefix: usize,
}

impl CouplingDraw {
    pub fn gap(&self) -> f64 {
        self.without_repl - self.with_repl
    }
}

/// How `J` and `J*` are built on one probability space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CouplingScheme {
    /// `Uᵢ` iid uniform, `Jᵢ` the rank of `Uᵢ`, `J*ᵢ = ⌈nUᵢ⌉`, with `x`
    /// relabelled in increasing order. Both index vectors are monotone in `U`,
    /// so they agree up to `O(√n)` rank fluctuations.
    Quantile,
    /// `Jᵢ = J*ᵢ` until the first repeated `J*`, then a uniform permutation of
    /// the unused indices.
    MaximalPrefix,
}

impl CouplingScheme {
    pub fn name(self) -> &'static str {
        match self {
            CouplingScheme::Quantile => "quantile",
            CouplingScheme::MaximalPrefix => "maximal_prefix",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "quantile" => Some(CouplingScheme::Quantile),
            "maximal_prefix" => Some(CouplingScheme::MaximalPrefix),
            _ => None,
        }
    }
}

/// Coupled draws and the empirical check of
/// `E[(Σmᵢx(Jᵢ) − Σmᵢx(J*ᵢ))²] ≤ 3s max|xᵢ − x̄| / (n−1)^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingResult {
    pub draws: Vec<CouplingDraw>,
    pub mean_sq_gap: Estimate,
    pub bound: f64,
    /// `mean_sq_gap ≤ bound + 4·SE`.
    pub bound_holds: bool,
}

/// `3 s max|xᵢ − x̄| / (n − 1)^{1/2}` with `s` the permutation-law SD.
pub fn hajek_bound(m: &[f64], x: &[f64]) -> Result<f64> {
    let (_, var) = perm_law_moments(m, x)?;
    let xbar = x.iter().sum::<f64>() / x.len() as f64;
    let dev = x.iter().map(|v| (v - xbar).abs()).fold(0.0, f64::max);
    Ok(3.0 * var.sqrt() * dev / ((x.len() - 1) as f64).sqrt())
}

fn quantile_draw(m: &[f64], xs: &[f64], rng: &mut Rng) -> CouplingDraw {
    let n = xs.len();
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| u[a].total_cmp(&u[b]));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let (mut without, mut with, mut matched) = (0.0, 0.0, 0);
    for i in 0..n {
        let star = ((u[i] * n as f64).ceil() as usize).clamp(1, n) - 1;
        without += m[i] * xs[rank[i]];
        with += m[i] * xs[star];
        matched += usize::from(star == rank[i]);
    }
    CouplingDraw {
        without_repl: without,
        with_repl: with,
        matched_prefix: matched,
    }
}

fn prefix_draw(m: &[f64], x: &[f64], rng: &mut Rng) -> CouplingDraw {
    let n = x.len();
    let star: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut seen = vec![false; n];
    let mut prefix = 0;
    while prefix < n && !seen[star[prefix]] {
        seen[star[prefix]] = true;
        prefix += 1;
    }
    let mut rest: Vec<usize> = (0..n).filter(|&j| !seen[j]).collect();
    rest.shuffle(rng);
    let without: f64 = (0..n)
        .map(|i| m[i] * x[if i < prefix { star[i] } else { rest[i - prefix] }])
        .sum();
    let with: f64 = m.iter().zip(&star).map(|(a, &j)| a * x[j]).sum();
    CouplingDraw {
        without_repl: without,
        with_repl: with,
        matched_prefix: prefix,
    }
}

/// Draws `reps` coupled pairs for centered `m` and checks the second-moment
/// bound on their difference.
pub fn hajek_coupling(
    m: &[f64],
    x: &[f64],
    reps: usize,
    key: StreamKey,
    scheme: CouplingScheme,
) -> Result<CouplingResult> {
    ensure_len(m.len(), x.len())?;
    let mbar = m.iter().sum::<f64>() / m.len() as f64;
    if mbar.abs() > 1e-10 {
        return Err(invalid(format!("coupling needs centered m, got mean {mbar:e}")));
    }
    if reps == 0 {
        return Err(invalid("coupling needs at least one replicate"));
    }
    let bound = hajek_bound(m, x)?;
    let mut xs = x.to_vec();
    xs.sort_by(f64::total_cmp);
    let draws = par::replicate(key, reps, |rng| match scheme {
        CouplingScheme::Quantile => quantile_draw(m, &xs, rng),
        CouplingScheme::MaximalPrefix => prefix_draw(m, x, rng),
    });
    let sq: Vec<f64> = draws.iter().map(|d| d.gap().powi(2)).collect();
    let mean_sq_gap = Estimate::from_samples(&sq);
    Ok(CouplingResult {
        bound_holds: mean_sq_gap.mean <= bound + 4.0 * mean_sq_gap.se,
        draws,
        mean_sq_gap,
        bound,
    })
}
