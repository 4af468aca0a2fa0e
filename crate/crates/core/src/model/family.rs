use rand::Rng as _;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use super::MeanVector;
use crate::error::{ensure_len, Error, Result};
use crate::numeric::integrate;
use crate::rng::Rng;

/// Compact parameter set used when a mean vector carries no bounds.
pub const DEFAULT_THETA0: (f64, f64) = (-2.0, 2.0);

/// Null moments of the log-likelihood ratio of `m` to `m̄`, and the quadratic
/// bound `α‖m − m̄‖²` both must respect for the alternative to stay contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContiguityDiagnostics {
    pub null_mean: f64,
    pub null_variance: f64,
    pub alpha: f64,
    pub bound: f64,
}

impl ContiguityDiagnostics {
    pub fn within_bound(&self) -> bool {
        let slack = 1e-12 * (1.0 + self.bound);
        self.null_mean.abs() <= self.bound + slack && self.null_variance <= self.bound + slack
    }
}

/// A one-parameter model for independent coordinates `Xᵢ ~ f(·; mᵢ)`.
pub trait Family: Send + Sync {
    fn name(&self) -> &'static str;

    /// `log f(x; m)` including the carrier term.
    fn log_density(&self, x: f64, m: f64) -> f64;

    fn sample(&self, m: f64, rng: &mut Rng) -> f64;

    /// Variance of a single coordinate at parameter `m`.
    fn variance(&self, m: f64) -> f64;

    fn theta0(&self) -> (f64, f64) {
        DEFAULT_THETA0
    }

    /// `log Π f(xᵢ; mᵢ) / Π f(xᵢ; m̄)`.
    fn loglik_ratio(&self, m: &[f64], mbar: f64, x: &[f64]) -> Result<f64> {
        ensure_len(m.len(), x.len())?;
        let v: f64 = m
            .iter()
            .zip(x)
            .map(|(&mi, &xi)| self.log_density(xi, mi) - self.log_density(xi, mbar))
            .sum();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("log-likelihood ratio"))
        }
    }

    fn contiguity_diagnostics(&self, m: &MeanVector) -> Result<ContiguityDiagnostics>;
}

fn bounds_for(family: &dyn Family, m: &MeanVector) -> (f64, f64) {
    m.bounds().unwrap_or_else(|| family.theta0())
}

/// Draws `Xᵢ ~ f(·; mᵢ)` independently, rejecting `m` outside the compact set.
pub fn sample_model(family: &dyn Family, m: &MeanVector, rng: &mut Rng) -> Result<Vec<f64>> {
    let (lo, hi) = bounds_for(family, m);
    m.check_within(lo, hi)?;
    Ok(m.entries().iter().map(|&mi| family.sample(mi, rng)).collect())
}

/// Built-in natural exponential families `exp(m x − β(m))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpFamily {
    /// `β(m) = m²/2`
    Normal,
    /// `β(m) = eᵐ`
    Poisson,
    /// `β(m) = log(1 + eᵐ)`
    Bernoulli,
}

impl ExpFamily {
    pub fn beta(self, m: f64) -> f64 {
        match self {
            ExpFamily::Normal => 0.5 * m * m,
            ExpFamily::Poisson => m.exp(),
            ExpFamily::Bernoulli => softplus(m),
        }
    }

    pub fn beta1(self, m: f64) -> f64 {
        match self {
            ExpFamily::Normal => m,
            ExpFamily::Poisson => m.exp(),
            ExpFamily::Bernoulli => logistic(m),
        }
    }

    pub fn beta2(self, m: f64) -> f64 {
        match self {
            ExpFamily::Normal => 1.0,
            ExpFamily::Poisson => m.exp(),
            ExpFamily::Bernoulli => {
                let p = logistic(m);
                p * (1.0 - p)
            }
        }
    }

    /// Log of the carrier density relative to which `exp(m x − β(m))` is taken.
    pub fn log_carrier(self, x: f64) -> f64 {
        match self {
            ExpFamily::Normal => -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            ExpFamily::Poisson => -(2..=(x as u64)).map(|k| (k as f64).ln()).sum::<f64>(),
            ExpFamily::Bernoulli => 0.0,
        }
    }

    /// `sup β''` over `[lo, hi]`.
    pub fn sup_beta2(self, lo: f64, hi: f64) -> f64 {
        match self {
            ExpFamily::Normal => 1.0,
            ExpFamily::Poisson => hi.exp(),
            ExpFamily::Bernoulli => {
                let closest = 0f64.clamp(lo, hi);
                self.beta2(closest)
            }
        }
    }

    pub fn from_name(name: &str) -> Option<ExpFamily> {
        match name {
            "normal" => Some(ExpFamily::Normal),
            "poisson" => Some(ExpFamily::Poisson),
            "bernoulli" => Some(ExpFamily::Bernoulli),
            _ => None,
        }
    }
}

fn softplus(m: f64) -> f64 {
    if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

fn logistic(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

impl Family for ExpFamily {
    fn name(&self) -> &'static str {
        match self {
            ExpFamily::Normal => "normal",
            ExpFamily::Poisson => "poisson",
            ExpFamily::Bernoulli => "bernoulli",
        }
    }

    fn log_density(&self, x: f64, m: f64) -> f64 {
        m * x - self.beta(m) + self.log_carrier(x)
    }

    fn sample(&self, m: f64, rng: &mut Rng) -> f64 {
        match self {
            ExpFamily::Normal => m + rng.sample::<f64, _>(StandardNormal),
            ExpFamily::Poisson => Poisson::new(m.exp())
                .expect("Poisson rate is positive and finite on the compact set")
                .sample(rng),
            ExpFamily::Bernoulli => {
                if rng.random::<f64>() < logistic(m) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn variance(&self, m: f64) -> f64 {
        self.beta2(m)
    }

    /// Exact form `Σ(mᵢ − m̄)xᵢ − Σ(β(mᵢ) − β(m̄))`; the carrier cancels.
    fn loglik_ratio(&self, m: &[f64], mbar: f64, x: &[f64]) -> Result<f64> {
        ensure_len(m.len(), x.len())?;
        let bbar = self.beta(mbar);
        let mut linear = 0.0;
        let mut cumulant = 0.0;
        for (&mi, &xi) in m.iter().zip(x) {
            linear += (mi - mbar) * xi;
            cumulant += self.beta(mi) - bbar;
        }
        if !cumulant.is_finite() {
            return Err(Error::NonFinite("cumulant function"));
        }
        Ok(linear - cumulant)
    }

    fn contiguity_diagnostics(&self, m: &MeanVector) -> Result<ContiguityDiagnostics> {
        let (lo, hi) = bounds_for(self, m);
        m.check_within(lo, hi)?;
        let mbar = m.mean();
        let bbar = self.beta(mbar);
        let b2 = self.beta2(mbar);
        let mut null_mean = 0.0;
        let mut null_variance = 0.0;
        let mut sq = 0.0;
        for &mi in m.entries() {
            let d = mi - mbar;
            null_mean -= self.beta(mi) - bbar;
            null_variance += d * d * b2;
            sq += d * d;
        }
        let alpha = self.sup_beta2(lo, hi);
        Ok(ContiguityDiagnostics {
            null_mean,
            null_variance,
            alpha,
            bound: alpha * sq,
        })
    }
}

/// Non-exponential one-parameter families with density `exp(φ(x; m))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeneralFamily {
    /// Logistic location family, `φ(x; m) = −(x − m) − 2 log(1 + e^{−(x − m)})`.
    Logistic,
}

/// Half-width of the integration window for logistic expectations; the tail
/// mass beyond it is below 1e-26.
const LOGISTIC_WINDOW: f64 = 60.0;

impl GeneralFamily {
    /// `φ(x; m)`.
    pub fn phi(self, x: f64, m: f64) -> f64 {
        let z = x - m;
        if z >= 0.0 {
            -z - 2.0 * (-z).exp().ln_1p()
        } else {
            z - 2.0 * z.exp().ln_1p()
        }
    }

    /// `φ₁(x; m) = ∂φ/∂m`.
    pub fn score(self, x: f64, m: f64) -> f64 {
        (0.5 * (x - m)).tanh()
    }

    /// `φ₂(x; m) = ∂²φ/∂m²`.
    pub fn second(self, x: f64, m: f64) -> f64 {
        let t = (0.5 * (x - m)).tanh();
        -0.5 * (1.0 - t * t)
    }

    /// Fisher information `ι(m)`.
    pub fn fisher(self, _m: f64) -> f64 {
        1.0 / 3.0
    }

    /// `E_m g(X)` by quadrature.
    pub fn expect<G: Fn(f64) -> f64>(self, m: f64, g: G) -> f64 {
        integrate(
            |x| self.phi(x, m).exp() * g(x),
            m - LOGISTIC_WINDOW,
            m + LOGISTIC_WINDOW,
            1e-13,
        )
    }

    /// Mean and variance under `m` of `φ(X; m*) − φ(X; m)`.
    pub fn increment_moments(self, m: f64, m_star: f64) -> (f64, f64) {
        let diff = |x: f64| self.phi(x, m_star) - self.phi(x, m);
        let mean = self.expect(m, diff);
        let var = self.expect(m, |x| (diff(x) - mean).powi(2));
        (mean, var)
    }

    /// Smallest `α` with `|E| ≤ α d²` and `Var ≤ α d²` for all parameter pairs
    /// in `[lo, hi]`, evaluated on a 64-point grid of separations plus the
    /// `d → 0` limits `ι/2` and `ι`.
    pub fn contiguity_alpha(self, lo: f64, hi: f64) -> f64 {
        let iota = self.fisher(0.0);
        let span = hi - lo;
        if !(span > 0.0) || !span.is_finite() {
            return iota;
        }
        (1..=64)
            .map(|k| {
                let d = span * k as f64 / 64.0;
                let (mean, var) = self.increment_moments(0.0, d);
                mean.abs().max(var) / (d * d)
            })
            .fold(iota, f64::max)
    }
}

impl Family for GeneralFamily {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn log_density(&self, x: f64, m: f64) -> f64 {
        self.phi(x, m)
    }

    fn sample(&self, m: f64, rng: &mut Rng) -> f64 {
        let u: f64 = rng.random();
        // avoid log(0) on the (measure-zero) draw u = 0
        let u = u.max(f64::MIN_POSITIVE);
        m + (u / (1.0 - u)).ln()
    }

    fn variance(&self, _m: f64) -> f64 {
        std::f64::consts::PI.powi(2) / 3.0
    }

    fn contiguity_diagnostics(&self, m: &MeanVector) -> Result<ContiguityDiagnostics> {
        let (lo, hi) = bounds_for(self, m);
        m.check_within(lo, hi)?;
        let mbar = m.mean();
        let mut null_mean = 0.0;
        let mut null_variance = 0.0;
        let mut sq = 0.0;
        for &mi in m.entries() {
            let d = mi - mbar;
            if d != 0.0 {
                // location family: moments depend on the separation only
                let (mean, var) = self.increment_moments(0.0, d);
                null_mean += mean;
                null_variance += var;
            }
            sq += d * d;
        }
        let alpha = self.contiguity_alpha(lo, hi);
        Ok(ContiguityDiagnostics {
            null_mean,
            null_variance,
            alpha,
            bound: alpha * sq,
        })
    }
}
