use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::model::SpacingsSample;
use crate::orbit::haar_orthogonal;
use crate::rng::Rng;

/// True iff `|T(gx) − T(x)| ≤ 1e-9 (1 + |T(x)|)` for `reps` sampled `g`.
///
/// `group` maps `x` to `gx` for a freshly sampled group element.
pub fn verify_invariance<X, S, G>(statistic: S, group: G, x: &X, reps: usize, rng: &mut Rng) -> bool
where
    S: Fn(&X) -> f64,
    G: Fn(&X, &mut Rng) -> X,
{
    let base = statistic(x);
    let tol = 1e-9 * (1.0 + base.abs());
    (0..reps).all(|_| {
        let moved = statistic(&group(x, rng));
        (moved - base).abs() <= tol
    })
}

/// A uniformly random permutation of the entries.
pub fn permute(x: &[f64], rng: &mut Rng) -> Vec<f64> {
    let mut v = x.to_vec();
    v.shuffle(rng);
    v
}

/// `Px` for Haar-distributed orthogonal `P`.
pub fn rotate(x: &[f64], rng: &mut Rng) -> Vec<f64> {
    let q = haar_orthogonal(x.len(), rng);
    (q * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Permutes the group (row) indices of a layout.
pub fn permute_rows(x: &DMatrix<f64>, rng: &mut Rng) -> DMatrix<f64> {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.shuffle(rng);
    x.select_rows(order.iter())
}

/// Adds one random constant to every observation.
pub fn shift_all(x: &DMatrix<f64>, rng: &mut Rng) -> DMatrix<f64> {
    let c = rng.random_range(-10.0..10.0);
    x.add_scalar(c)
}

/// Multiplies every observation by one random positive constant.
pub fn scale_all(x: &DMatrix<f64>, rng: &mut Rng) -> DMatrix<f64> {
    let c = rng.random_range(0.1..10.0);
    x * c
}

pub fn permute_spacings(d: &SpacingsSample, rng: &mut Rng) -> SpacingsSample {
    SpacingsSample::new(permute(d.values(), rng)).expect("permutation preserves the simplex")
}
