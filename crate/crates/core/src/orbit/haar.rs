use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::Rng;

/// A Haar-distributed `n × n` orthogonal matrix.
///
/// QR-factorizes a standard Gaussian matrix and flips each column of `Q` by
/// the sign of the matching diagonal entry of `R`. Without the flip the law
/// depends on the QR implementation's sign convention and is not Haar.
pub fn haar_orthogonal(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    assert!(n >= 1, "dimension must be positive");
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Estimate;
    use crate::rng::StreamKey;

    #[test]
    fn orthogonality() {
        let mut rng = StreamKey::new(1).rng(0);
        for n in [1, 2, 5, 40] {
            let q = haar_orthogonal(n, &mut rng);
            let err = (q.transpose() * &q - DMatrix::identity(n, n)).amax();
            assert!(err < 1e-10, "n = {n}: {err}");
        }
    }

    #[test]
    fn one_dimensional_signs_are_fair() {
        let key = StreamKey::new(2);
        let reps = 10_000;
        let plus = (0..reps)
            .filter(|&i| haar_orthogonal(1, &mut key.rng(i))[(0, 0)] > 0.0)
            .count();
        assert!((plus as f64 / reps as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn first_column_uniform_on_sphere() {
        let key = StreamKey::new(3);
        let v: Vec<f64> = (0..20_000)
            .map(|i| haar_orthogonal(3, &mut key.rng(i))[(0, 0)].powi(2))
            .collect();
        let e = Estimate::from_samples(&v);
        assert!((e.mean - 1.0 / 3.0).abs() < 4.0 * e.se);
    }

    #[test]
    fn first_entry_is_symmetric() {
        let key = StreamKey::new(4);
        let v: Vec<f64> = (0..20_000).map(|i| haar_orthogonal(4, &mut key.rng(i))[(0, 0)]).collect();
        let e = Estimate::from_samples(&v);
        assert!(e.mean.abs() < 4.0 * e.se);
    }
}
