use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::integrate;

/// Multiples of the Laplace width at which the integration range is split.
const SPLITS: [f64; 4] = [1.0, 4.0, 16.0, 64.0];

/// `log H(t)` with `H(t) = ∫₀^π exp(t cos θ) sin^{n−2} θ dθ`.
///
/// The log-integrand `t cos θ + (n−2) log sin θ` is unimodal with its mode at
/// `cos θ* = 2t / ((n−2) + √((n−2)² + 4t²))`. The integrand is rescaled by its
/// peak value and integrated adaptively over pieces split at `θ* ± k·w`, `w`
/// the Laplace width, so nothing overflows and narrow peaks are resolved.
pub fn h_integral_log(t: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("H(t) needs dimension n >= 3, got {n}")));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("H(t) argument"));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("H(t) needs t >= 0, got {t}")));
    }
    let k = (n - 2) as f64;
    let log_integrand = |theta: f64| t * theta.cos() + k * theta.sin().ln();

    let cos_mode = if t == 0.0 {
        0.0
    } else {
        2.0 * t / (k + (k * k + 4.0 * t * t).sqrt())
    };
    let mode = cos_mode.acos();
    let peak = log_integrand(mode);
    let sin_mode = mode.sin();
    let width = 1.0 / (t * cos_mode + k / (sin_mode * sin_mode)).sqrt();

    let mut cuts = vec![0.0, mode, PI];
    for s in SPLITS {
        for c in [mode - s * width, mode + s * width] {
            if c > 0.0 && c < PI {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let scale = ((2.0 * PI).sqrt() * width).min(PI);
    let tol = 1e-14 * scale;
    let scaled = |theta: f64| (log_integrand(theta) - peak).exp();
    let total: f64 = cuts
        .windows(2)
        .map(|w| integrate(scaled, w[0], w[1], tol))
        .sum();
    let value = peak + total.ln();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("log H(t)"))
    }
}
