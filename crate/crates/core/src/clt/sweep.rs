use rand::Rng as _;
use rand_distr::{Distribution, Open01, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use serde::Serialize;

use super::law::{rho2, EmpiricalLaw};
use crate::error::{invalid, Result};
use crate::model::ExpFamily;
use crate::numeric::Estimate;
use crate::par;
use crate::rng::{Rng, StreamKey};

/// Shape of the centered weight vector, scaled to `‖m‖ = δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MProfile {
    /// One large entry, the rest equal and negative.
    Spike,
    /// `mᵢ ∝ √2 cos(2πi/n)/√n`.
    Smooth,
    Zero,
}

impl MProfile {
    pub fn name(self) -> &'static str {
        match self {
            MProfile::Spike => "spike",
            MProfile::Smooth => "smooth",
            MProfile::Zero => "zero",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [MProfile::Spike, MProfile::Smooth, MProfile::Zero]
            .into_iter()
            .find(|p| p.name() == s)
    }

    /// The profile at length `n`; `column` picks a second, different vector
    /// of the same shape for the two-column case.
    pub fn build(self, n: usize, delta: f64, column: usize) -> Vec<f64> {
        let nf = n as f64;
        match self {
            MProfile::Zero => vec![0.0; n],
            MProfile::Spike => {
                let at = column * n / 2;
                let rest = -delta / (nf * (nf - 1.0)).sqrt();
                (0..n)
                    .map(|i| if i == at { delta * ((nf - 1.0) / nf).sqrt() } else { rest })
                    .collect()
            }
            MProfile::Smooth => (1..=n)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / nf;
                    let g = if column == 0 { a.cos() } else { a.sin() };
                    delta * std::f64::consts::SQRT_2 * g / nf.sqrt()
                })
                .collect(),
        }
    }
}

/// Settings for a permutation/bootstrap/iid law comparison across `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSweepConfig {
    /// Data are iid from the family at natural parameter 0.
    pub family: ExpFamily,
    pub profile: MProfile,
    pub delta: f64,
    pub n_grid: Vec<usize>,
    /// Independent data sets per `n`; SEs are across batches.
    pub batches: usize,
    /// Draws from each law per batch.
    pub draws_per_batch: usize,
    /// 1 for the scalar sums, 2 for the two-column case.
    pub dims: usize,
    pub seed: u64,
}

impl Default for CltSweepConfig {
    fn default() -> Self {
        CltSweepConfig {
            family: ExpFamily::Normal,
            profile: MProfile::Spike,
            delta: 1.0,
            n_grid: vec![50, 500, 5000],
            batches: 20,
            draws_per_batch: 500,
            dims: 1,
            seed: 0,
        }
    }
}

/// One row of the sweep. `rho2_*` are batch means with standard errors
/// `se_*`; `m2gap_*` are batch means of the signed second-moment difference
/// between the two laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSweepRow {
    pub n: usize,
    pub rho2_perm_boot: f64,
    pub rho2_boot_iid: f64,
    pub rho2_perm_iid: f64,
    pub se_perm_boot: f64,
    pub se_boot_iid: f64,
    pub se_perm_iid: f64,
    pub diag_nmx: f64,
    pub m2gap_perm_boot: f64,
    pub m2gap_boot_iid: f64,
    pub m2gap_perm_iid: f64,
    pub se_m2gap_perm_boot: f64,
    pub se_m2gap_boot_iid: f64,
    pub se_m2gap_perm_iid: f64,
}

impl CltSweepRow {
    pub fn rho2(&self) -> [Estimate; 3] {
        [
            Estimate { mean: self.rho2_perm_boot, se: self.se_perm_boot },
            Estimate { mean: self.rho2_boot_iid, se: self.se_boot_iid },
            Estimate { mean: self.rho2_perm_iid, se: self.se_perm_iid },
        ]
    }

    pub fn m2gap(&self) -> [Estimate; 3] {
        [
            Estimate { mean: self.m2gap_perm_boot, se: self.se_m2gap_perm_boot },
            Estimate { mean: self.m2gap_boot_iid, se: self.se_m2gap_boot_iid },
            Estimate { mean: self.m2gap_perm_iid, se: self.se_m2gap_perm_iid },
        ]
    }
}

/// Draws one data row of width `dims` at natural parameter 0. Two-column rows
/// are correlated: `(Z₁, Z₁/2 + √¾ Z₂)` for the normal family and shared
/// components for the counting families.
fn sample_row(family: ExpFamily, dims: usize, rng: &mut Rng) -> [f64; 2] {
    if dims == 1 {
        let v = match family {
            ExpFamily::Normal => rng.sample(StandardNormal),
            ExpFamily::Poisson => Poisson::new(1.0).expect("unit rate").sample(rng),
            ExpFamily::Bernoulli => f64::from(rng.random::<bool>()),
        };
        return [v, 0.0];
    }
    match family {
        ExpFamily::Normal => {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            [z1, 0.5 * z1 + 0.75f64.sqrt() * z2]
        }
        ExpFamily::Poisson => {
            let p = Poisson::new(0.5).expect("positive rate");
            let (a, b, c): (f64, f64, f64) = (p.sample(rng), p.sample(rng), p.sample(rng));
            [a + c, b + c]
        }
        ExpFamily::Bernoulli => {
            let a = f64::from(rng.random::<bool>());
            let b = if rng.random::<f64>() < 0.75 { a } else { 1.0 - a };
            [a, b]
        }
    }
}

struct BatchOutcome {
    rho2: [f64; 3],
    m2gap: [f64; 3],
    nmx: f64,
}

/// Distance between two-column laws: the Euclidean combination of the
/// coordinatewise distances, a surrogate for the joint Wasserstein metric.
fn joint_rho2(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let mut s = 0.0;
    for (ca, cb) in a.iter().zip(b) {
        let d = rho2(&EmpiricalLaw::new(ca.clone())?, &EmpiricalLaw::new(cb.clone())?)?;
        s += d * d;
    }
    Ok(s.sqrt())
}

fn second_moment(cols: &[Vec<f64>]) -> f64 {
    let r = cols[0].len() as f64;
    cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / r
}

/// Quantile function of the family at natural parameter 0, `u ∈ (0, 1)`.
fn null_quantile(family: ExpFamily, u: f64) -> f64 {
    match family {
        ExpFamily::Normal => Normal::standard().inverse_cdf(u),
        ExpFamily::Poisson => {
            // unit rate: walk the CDF
            let (mut k, mut pmf) = (0u32, (-1f64).exp());
            let mut cdf = pmf;
            while cdf < u && k < 200 {
                k += 1;
                pmf /= f64::from(k);
                cdf += pmf;
            }
            f64::from(k)
        }
        ExpFamily::Bernoulli => f64::from(u > 0.5),
    }
}

/// Ranks of `u` (0-based) into `rank`, using `order` as scratch.
fn ranks(u: &[f64], order: &mut Vec<usize>, rank: &mut [usize]) {
    order.clear();
    order.extend(0..u.len());
    order.sort_unstable_by(|&a, &b| u[a].total_cmp(&u[b]));
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
}

/// One batch: a data set of `n` rows and `draws` values from each law.
///
/// The three laws are drawn with common random numbers. Each draw takes
/// `U₁, …, Uₙ` iid uniform on (0, 1); with the rows relabelled in sorted
/// order, the permutation draw uses `Jᵢ = rank(Uᵢ)`, the bootstrap draw uses
/// `J*ᵢ = ⌈nUᵢ⌉` and the iid draw uses `F⁻¹(Uᵢ)`. Each marginal law is exact;
/// sharing `U` removes most of the sampling noise from the distances. In the
/// two-column case the iid rows come from an independent stream.
fn run_batch(cfg: &CltSweepConfig, n: usize, key: StreamKey) -> Result<BatchOutcome> {
    let dims = cfg.dims;
    let ms: Vec<Vec<f64>> = (0..dims).map(|c| cfg.profile.build(n, cfg.delta, c)).collect();
    let mut rng = key.named("data").rng(0);
    let mut rows: Vec<[f64; 2]> = (0..n).map(|_| sample_row(cfg.family, dims, &mut rng)).collect();
    rows.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let xs: Vec<Vec<f64>> = (0..dims).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let draws = cfg.draws_per_batch;

    let mut perm = vec![Vec::with_capacity(draws); dims];
    let mut boot = vec![Vec::with_capacity(draws); dims];
    let mut iid = vec![Vec::with_capacity(draws); dims];
    let mut draw_rng = key.named("draws").rng(0);
    let mut iid_rng = key.named("iid").rng(0);
    let mut u = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    let mut rank = vec![0usize; n];
    let mut fresh = vec![[0.0; 2]; n];
    for _ in 0..draws {
        for v in u.iter_mut() {
            *v = draw_rng.sample(Open01);
        }
        ranks(&u, &mut order, &mut rank);
        for c in 0..dims {
            let (m, x) = (&ms[c], &xs[c]);
            let (mut p, mut b) = (0.0, 0.0);
            for i in 0..n {
                let star = ((u[i] * n as f64).ceil() as usize).clamp(1, n) - 1;
                p += m[i] * x[rank[i]];
                b += m[i] * x[star];
            }
            perm[c].push(p);
            boot[c].push(b);
        }
        if dims == 1 {
            iid[0].push(ms[0].iter().zip(&u).map(|(a, &ui)| a * null_quantile(cfg.family, ui)).sum());
        } else {
            for r in fresh.iter_mut() {
                *r = sample_row(cfg.family, dims, &mut iid_rng);
            }
            for c in 0..dims {
                iid[c].push(ms[c].iter().zip(&fresh).map(|(a, r)| a * r[c]).sum());
            }
        }
    }

    let nmx = (0..dims)
        .map(|c| {
            let mbar = ms[c].iter().sum::<f64>() / n as f64;
            let xbar = xs[c].iter().sum::<f64>() / n as f64;
            (n as f64 * mbar * xbar).abs()
        })
        .fold(0.0, f64::max);
    let (sp, sb, si) = (second_moment(&perm), second_moment(&boot), second_moment(&iid));
    Ok(BatchOutcome {
        rho2: [joint_rho2(&perm, &boot)?, joint_rho2(&boot, &iid)?, joint_rho2(&perm, &iid)?],
        m2gap: [sp - sb, sb - si, sp - si],
        nmx,
    })
}

/// For each `n`: ρ₂ between the permutation law `L_P`, the bootstrap law
/// `L_F̂` and the sampling law `L_F` of `Σ mᵢXᵢ`, each averaged over
/// independent batches.
pub fn theorem_convergence_sweep(cfg: &CltSweepConfig) -> Result<Vec<CltSweepRow>> {
    if cfg.batches < 2 || cfg.draws_per_batch < 2 {
        return Err(invalid("sweep needs at least 2 batches and 2 draws per batch"));
    }
    if !(cfg.dims == 1 || cfg.dims == 2) {
        return Err(invalid(format!("dims must be 1 or 2, got {}", cfg.dims)));
    }
    if !(cfg.delta >= 0.0) || !cfg.delta.is_finite() {
        return Err(invalid("delta must be finite and nonnegative"));
    }
    let root = StreamKey::new(cfg.seed).named("clt-sweep");
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        if n < 3 {
            return Err(invalid(format!("grid size n = {n} must be at least 3")));
        }
        let key = root.child(n as u64);
        let outcomes: Vec<BatchOutcome> = par::map_indexed(cfg.batches, |b| run_batch(cfg, n, key.child(b as u64)))
            .into_iter()
            .collect::<Result<_>>()?;
        let est = |f: &dyn Fn(&BatchOutcome) -> f64| {
            Estimate::from_samples(&outcomes.iter().map(f).collect::<Vec<_>>())
        };
        let r: Vec<Estimate> = (0..3).map(|k| est(&|o| o.rho2[k])).collect();
        let g: Vec<Estimate> = (0..3).map(|k| est(&|o| o.m2gap[k])).collect();
        rows.push(CltSweepRow {
            n,
            rho2_perm_boot: r[0].mean,
            rho2_boot_iid: r[1].mean,
            rho2_perm_iid: r[2].mean,
            se_perm_boot: r[0].se,
            se_boot_iid: r[1].se,
            se_perm_iid: r[2].se,
            diag_nmx: est(&|o| o.nmx).mean,
            m2gap_perm_boot: g[0].mean,
            m2gap_boot_iid: g[1].mean,
            m2gap_perm_iid: g[2].mean,
            se_m2gap_perm_boot: g[0].se,
            se_m2gap_boot_iid: g[1].se,
            se_m2gap_perm_iid: g[2].se,
        });
    }
    Ok(rows)
}
