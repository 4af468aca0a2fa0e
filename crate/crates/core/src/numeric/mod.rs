//! Numerical building blocks shared by the compute modules.

mod lse;
mod perm;
mod quad;

pub use lse::{log_sum_exp, LogSumExp};
pub use perm::{factorial, for_each_permutation};
pub use quad::{integrate, midpoint_rule};

use serde::Serialize;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean and `sd / sqrt(len)`; the SE is 0 for fewer than two values.
    pub fn from_samples(values: &[f64]) -> Estimate {
        let n = values.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Estimate { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Estimate {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }

    /// Binomial proportion estimate from a hit count.
    pub fn proportion(hits: usize, trials: usize) -> Estimate {
        let p = hits as f64 / trials as f64;
        Estimate {
            mean: p,
            se: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// `self - other` for independent estimates.
    pub fn minus(self, other: Estimate) -> Estimate {
        Estimate {
            mean: self.mean - other.mean,
            se: self.se.hypot(other.se),
        }
    }
}

/// True iff each consecutive difference `e[k+1] − e[k]` is at most `z`
/// standard errors of the difference above zero.
pub fn decreasing_within(estimates: &[Estimate], z: f64) -> bool {
    estimates
        .windows(2)
        .all(|w| w[1].mean - w[0].mean <= z * w[0].se.hypot(w[1].se))
}

/// Sample variance with divisor `n`.
pub fn population_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Ordinary least-squares slope of `y` on `x` with the standard error implied
/// by known per-point standard errors of `y`.
pub fn ols_slope(x: &[f64], y: &[f64], y_se: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / n;
    let ybar = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xbar).powi(2)).sum();
    let slope = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - xbar) * (yi - ybar))
        .sum::<f64>()
        / sxx;
    let var: f64 = x
        .iter()
        .zip(y_se)
        .map(|(xi, s)| ((xi - xbar) / sxx).powi(2) * s * s)
        .sum();
    Estimate {
        mean: slope,
        se: var.sqrt(),
    }
}
