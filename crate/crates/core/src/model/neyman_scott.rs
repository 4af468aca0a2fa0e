use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{ensure_len, Error, Result};
use crate::rng::Rng;

/// `n` groups of `ν` independent normals with group means `mᵢ` and common
/// standard deviation `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeymanScottLayout {
    n: usize,
    nu: usize,
    sigma: f64,
}

impl NeymanScottLayout {
    pub fn new(n: usize, nu: usize, sigma: f64) -> Result<Self> {
        if n < 2 || nu < 2 {
            return Err(Error::InvalidArgument(format!(
                "Neyman-Scott layout needs n >= 2 and nu >= 2, got n = {n}, nu = {nu}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument("sigma must be positive".into()));
        }
        Ok(NeymanScottLayout { n, nu, sigma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// An `n × ν` matrix, row `i` holding group `i`.
    pub fn sample(&self, m: &[f64], rng: &mut Rng) -> Result<DMatrix<f64>> {
        ensure_len(self.n, m.len())?;
        let mut x = DMatrix::zeros(self.n, self.nu);
        for i in 0..self.n {
            for j in 0..self.nu {
                x[(i, j)] = m[i] + self.sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(x)
    }
}

/// Rows `Xᵢ ~ N_π(mᵢ, I)`: the matrix-variate normal exponential family with
/// `β(m) = ‖m‖²/2`.
pub fn sample_matrix_variate(means: &DMatrix<f64>, rng: &mut Rng) -> DMatrix<f64> {
    means.map(|mu| mu + rng.sample::<f64, _>(StandardNormal))
}

/// `tr((M − M̄)ᵀX) − Σ(β(mᵢ) − β(m̄))` for the matrix-variate normal family.
pub fn matrix_loglik_ratio(means: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
    ensure_len(means.nrows(), x.nrows())?;
    ensure_len(means.ncols(), x.ncols())?;
    let n = means.nrows() as f64;
    let mut total = 0.0;
    for c in 0..means.ncols() {
        let col = means.column(c);
        let mbar = col.sum() / n;
        for r in 0..means.nrows() {
            let mi = col[r];
            total += (mi - mbar) * x[(r, c)] - 0.5 * (mi * mi - mbar * mbar);
        }
    }
    Ok(total)
}
