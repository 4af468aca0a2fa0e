use nalgebra::{DMatrix, DVector};

use super::haar_orthogonal;
use super::lbar::log_lbar_sphere;
use crate::error::{ensure_len, invalid, Error, Result};
use crate::model::MeanVector;
use crate::rng::Rng;

/// Projections for a regression design `X` (n × p, full column rank, p < n).
///
/// Stores an orthonormal basis `Q_X` of the column space and `Q⊥` of its
/// complement, so that `H = Q_X Q_Xᵀ` and elements of `O_X` (orthogonal maps
/// fixing every column of `X`) are `H + Q⊥ O Q⊥ᵀ` with `O ∈ O(n − p)`.
#[derive(Debug, Clone)]
pub struct DesignProjector {
    design: DMatrix<f64>,
    q_x: DMatrix<f64>,
    q_perp: DMatrix<f64>,
}

impl DesignProjector {
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        let (n, p) = design.shape();
        if p == 0 || p >= n {
            return Err(invalid(format!("design must have 0 < p < n, got {n} x {p}")));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        let r = design.clone().qr().r();
        let diag: Vec<f64> = (0..p).map(|j| r[(j, j)].abs()).collect();
        let scale = diag.iter().cloned().fold(0.0, f64::max);
        if scale == 0.0 || diag.iter().any(|&d| d <= 1e-10 * scale) {
            return Err(Error::Degenerate("design matrix is rank deficient".into()));
        }
        let mut augmented = DMatrix::<f64>::zeros(n, p + n);
        augmented.columns_mut(0, p).copy_from(&design);
        augmented.columns_mut(p, n).fill_with_identity();
        let q = augmented.qr().q();
        Ok(DesignProjector {
            q_x: q.columns(0, p).into_owned(),
            q_perp: q.columns(p, n - p).into_owned(),
            design,
        })
    }

    /// Intercept-only design `1`.
    pub fn intercept(n: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(n, 1, 1.0))
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// `Hy`.
    pub fn fitted(&self, y: &[f64]) -> Result<Vec<f64>> {
        ensure_len(self.n(), y.len())?;
        let y = DVector::from_column_slice(y);
        Ok((&self.q_x * (self.q_x.transpose() * y)).as_slice().to_vec())
    }

    /// `(I − H)y`.
    pub fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        let fit = self.fitted(y)?;
        Ok(y.iter().zip(&fit).map(|(a, b)| a - b).collect())
    }

    /// Errors unless `Xᵀm = 0` to within `1e-8` relative to `‖X‖·‖m‖`.
    pub fn check_identifiable(&self, m: &[f64]) -> Result<()> {
        ensure_len(self.n(), m.len())?;
        let mv = DVector::from_column_slice(m);
        let xtm = self.design.transpose() * &mv;
        let scale = self.design.norm() * mv.norm();
        if xtm.amax() > 1e-8 * scale.max(1.0) {
            return Err(invalid(format!(
                "alternative is not identifiable: max |X^T m| = {:e}",
                xtm.amax()
            )));
        }
        Ok(())
    }

    /// `Py` for `P` Haar-distributed on `O_X`.
    pub fn act(&self, y: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        ensure_len(self.n(), y.len())?;
        let yv = DVector::from_column_slice(y);
        let o = haar_orthogonal(self.n() - self.p(), rng);
        let along = &self.q_x * (self.q_x.transpose() * &yv);
        let across = &self.q_perp * (o * (self.q_perp.transpose() * &yv));
        Ok((along + across).as_slice().to_vec())
    }

    /// `log L̄` over `O_X`: the normal-model likelihood ratio of `m` to `Hm`
    /// averaged over the group, a function of `‖(I−H)m‖·‖(I−H)y‖` in dimension
    /// `n − p`.
    pub fn log_lbar(&self, m: &[f64], y: &[f64]) -> Result<f64> {
        self.check_identifiable(m)?;
        let d = self.n() - self.p();
        if d < 3 {
            return Err(invalid(format!("residual dimension n - p = {d} must be at least 3")));
        }
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let a = norm(&self.residual(m)?);
        let r = norm(&self.residual(y)?);
        log_lbar_sphere(a, r, d)
    }
}

/// `L̄` for the group `O_X` of orthogonal maps fixing the design columns.
pub fn lbar_design_orthogonal(m: &MeanVector, x_design: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    let proj = DesignProjector::new(x_design.clone())?;
    Ok(proj.log_lbar(m.entries(), y)?.exp())
}
