//! Test statistics and the invariance checker.

mod groups;
mod quadratic;

pub use groups::{
    permute, permute_rows, permute_spacings, rotate, scale_all, shift_all, verify_invariance,
};
pub use quadratic::{cosine_basis, PreparedQuadratic, QuadraticTestSpec};

use nalgebra::DMatrix;

use crate::error::{ensure_len, Error, Result};
use crate::model::SpacingsSample;

/// The Neyman-Pearson statistic `mᵀx / ‖m‖`.
pub fn np_statistic(m: &[f64], x: &[f64]) -> Result<f64> {
    ensure_len(m.len(), x.len())?;
    let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("Neyman-Pearson direction has zero norm".into()));
    }
    Ok(m.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / norm)
}

/// `‖x‖²`, the maximal orthogonal invariant.
pub fn chisq_statistic(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `Σ(xᵢ − x̄)²/n`, the permutation-invariant analogue of `‖x‖²`.
pub fn sample_variance(x: &[f64]) -> f64 {
    crate::numeric::population_variance(x)
}

fn group_means(x: &DMatrix<f64>) -> Vec<f64> {
    x.row_iter().map(|r| r.sum() / r.len() as f64).collect()
}

/// One-way analysis of variance F ratio for an `n × ν` layout.
pub fn anova_f(x: &DMatrix<f64>) -> Result<f64> {
    let (n, nu) = x.shape();
    if n < 2 || nu < 2 {
        return Err(Error::InvalidArgument(format!(
            "ANOVA needs at least 2 groups of 2, got {n} x {nu}"
        )));
    }
    let means = group_means(x);
    let grand = means.iter().sum::<f64>() / n as f64;
    let between: f64 = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() * nu as f64;
    let within: f64 = x
        .row_iter()
        .zip(&means)
        .map(|(row, m)| row.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let between_ms = between / (n - 1) as f64;
    let within_ms = within / (n * (nu - 1)) as f64;
    // exact zero only for degenerate data; compare against the data's scale
    let scale = x.iter().map(|v| v * v).sum::<f64>() / (n * nu) as f64;
    if within_ms <= 1e-28 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate("zero within-group variance".into()));
    }
    Ok(between_ms / within_ms)
}

/// `ν Σ(x̄ᵢ − x̄)² / σ²`: the chi-square statistic on cell means when σ is known.
pub fn cell_means_chisq(x: &DMatrix<f64>, sigma: f64) -> f64 {
    let nu = x.ncols() as f64;
    let means = group_means(x);
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    nu * means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (sigma * sigma)
}

/// Log generalized variance `log det S` of the rows of an `n × π` matrix, `S`
/// the row covariance with divisor `n`. Invariant under row permutations.
pub fn log_generalized_variance(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows() as f64;
    let means = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let s = centered.transpose() * &centered / n;
    s.determinant().ln()
}

/// Moran's statistic `Σ log Dᵢ`.
pub fn moran(d: &SpacingsSample) -> Result<f64> {
    if d.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::Degenerate("Moran statistic undefined on a zero spacing".into()));
    }
    Ok(d.values().iter().map(|v| v.ln()).sum())
}

/// Greenwood's statistic `Σ Dᵢ²`.
pub fn greenwood(d: &SpacingsSample) -> f64 {
    d.values().iter().map(|v| v * v).sum()
}

/// Summand applied to each 2-spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoSpacingsFn {
    Square,
    Log,
}

/// `Σᵢ f(U_{i+2} − Uᵢ)`, `i = 0..n−1`, over the sorted sample augmented with
/// `U₀ = 0` and `U_{n+1} = 1`.
pub fn two_spacings_statistic(u: &[f64], f: TwoSpacingsFn) -> Result<f64> {
    let n = u.len();
    let at = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else if i == n + 1 {
            1.0
        } else {
            u[i - 1]
        }
    };
    let mut total = 0.0;
    for i in 0..n {
        let w = at(i + 2) - at(i);
        total += match f {
            TwoSpacingsFn::Square => w * w,
            TwoSpacingsFn::Log => {
                if w <= 0.0 {
                    return Err(Error::Degenerate("log of a zero 2-spacing".into()));
                }
                w.ln()
            }
        };
    }
    Ok(total)
}
