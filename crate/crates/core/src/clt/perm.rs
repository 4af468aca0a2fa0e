use rand::seq::SliceRandom;
use rand::Rng as _;

use super::law::EmpiricalLaw;
use crate::error::{ensure_len, invalid, Error, Result};
use crate::numeric::for_each_permutation;
use crate::orbit::EXHAUSTIVE_MAX_N;
use crate::par;
use crate::rng::{Rng, StreamKey};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean `n m̄ x̄` and variance `Σ(mᵢ − m̄)² Σ(xᵢ − x̄)² / (n − 1)` of `mᵀPx`
/// for a uniformly random permutation `P`.
pub fn perm_law_moments(m: &[f64], x: &[f64]) -> Result<(f64, f64)> {
    ensure_len(m.len(), x.len())?;
    let n = m.len();
    if n < 2 {
        return Err(invalid("permutation law needs n >= 2"));
    }
    let (mbar, xbar) = (mean(m), mean(x));
    let sm: f64 = m.iter().map(|v| (v - mbar).powi(2)).sum();
    let sx: f64 = x.iter().map(|v| (v - xbar).powi(2)).sum();
    Ok((n as f64 * mbar * xbar, sm * sx / (n - 1) as f64))
}

/// The exact law of `mᵀPx`: one value per permutation, `n ≤ 8`.
pub fn exhaustive_perm_law(m: &[f64], x: &[f64]) -> Result<EmpiricalLaw> {
    ensure_len(m.len(), x.len())?;
    if m.len() > EXHAUSTIVE_MAX_N {
        return Err(Error::TooLargeForExhaustive(m.len()));
    }
    let mut values = Vec::new();
    for_each_permutation(m.len(), |p| {
        values.push(m.iter().zip(p).map(|(a, &j)| a * x[j]).sum());
    });
    EmpiricalLaw::new(values)
}

/// One draw of `Σ mᵢ x(Jᵢ)`, `J` a uniform permutation.
pub fn perm_draw(m: &[f64], x: &[f64], scratch: &mut Vec<usize>, rng: &mut Rng) -> f64 {
    scratch.clear();
    scratch.extend(0..x.len());
    scratch.shuffle(rng);
    m.iter().zip(scratch.iter()).map(|(a, &j)| a * x[j]).sum()
}

/// One draw of `Σ mᵢ x(J*ᵢ)`, `J*` iid uniform indices.
pub fn boot_draw(m: &[f64], x: &[f64], rng: &mut Rng) -> f64 {
    let n = x.len();
    m.iter().map(|a| a * x[rng.random_range(0..n)]).sum()
}

/// `reps` draws of `mᵀPx`, draw `k` from stream `key.rng(k)`.
pub fn sample_perm_law(m: &[f64], x: &[f64], reps: usize, key: StreamKey) -> Result<EmpiricalLaw> {
    ensure_len(m.len(), x.len())?;
    EmpiricalLaw::new(par::replicate(key, reps, |rng| perm_draw(m, x, &mut Vec::new(), rng)))
}

/// `reps` bootstrap draws of `Σ mᵢ x(J*ᵢ)`.
pub fn sample_boot_law(m: &[f64], x: &[f64], reps: usize, key: StreamKey) -> Result<EmpiricalLaw> {
    ensure_len(m.len(), x.len())?;
    EmpiricalLaw::new(par::replicate(key, reps, |rng| boot_draw(m, x, rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_examples() {
        let (mu, var) = perm_law_moments(&[-1.0, 0.0, 1.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!(mu.abs() < 1e-15);
        assert!((var - 14.0 / 3.0).abs() < 1e-12);
        assert_eq!(perm_law_moments(&[1.0, 2.0], &[3.0, 3.0]).unwrap().1, 0.0);
        assert!(perm_law_moments(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn exhaustive_hand_example() {
        let law = exhaustive_perm_law(&[-1.0, 0.0, 1.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(law.values(), &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        assert!((law.variance() - 28.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_perm_law() {
        let law = sample_perm_law(&[1.0, -1.0], &[0.0, 1.0], 10_000, StreamKey::new(1)).unwrap();
        assert!(law.values().iter().all(|v| v.abs() == 1.0));
        assert!((law.cdf(0.0) - 0.5).abs() < 0.02);
    }

    #[test]
    fn zero_weights_give_point_mass() {
        let x = [1.0, 5.0, -2.0];
        for law in [
            sample_perm_law(&[0.0; 3], &x, 100, StreamKey::new(2)).unwrap(),
            sample_boot_law(&[0.0; 3], &x, 100, StreamKey::new(3)).unwrap(),
        ] {
            assert!(law.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sampled_moments_match_formula() {
        let m = [0.5, -0.2, 0.1, -0.4, 0.0, 0.3, -0.3];
        let x = [1.0, 2.0, 0.5, 4.0, -1.0, 3.0, 2.5];
        let reps = 20_000;
        let law = sample_perm_law(&m, &x, reps, StreamKey::new(4)).unwrap();
        let (mu, var) = perm_law_moments(&m, &x).unwrap();
        let se_mean = (var / reps as f64).sqrt();
        assert!((law.mean() - mu).abs() < 4.0 * se_mean);
        let centered: Vec<f64> = law.values().iter().map(|v| (v - mu).powi(2)).collect();
        let fourth = centered.iter().map(|v| v * v).sum::<f64>() / reps as f64;
        let se_var = ((fourth - var * var) / reps as f64).sqrt();
        assert!((law.variance() - var).abs() < 4.0 * se_var + 4.0 * se_mean * se_mean);
    }
}
