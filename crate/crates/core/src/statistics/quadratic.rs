use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::midpoint_rule;

type BasisFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Weighted basis-projection test `Σ λᵢ Zᵢ` or `Σ λᵢ Zᵢ²` with
/// `Zᵢ = Σⱼ γᵢ(j/n) xⱼ / (Σⱼ γᵢ(j/n)²)^{1/2}`.
#[derive(Clone)]
pub struct QuadraticTestSpec {
    lambda: Vec<f64>,
    basis: Vec<BasisFn>,
    squared: bool,
}

impl fmt::Debug for QuadraticTestSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticTestSpec")
            .field("lambda", &self.lambda)
            .field("num_terms", &self.basis.len())
            .field("squared", &self.squared)
            .finish()
    }
}

/// `γᵢ(x) = √2 cos(2πix)` for `i = 1..=k`.
pub fn cosine_basis(k: usize) -> Vec<BasisFn> {
    (1..=k)
        .map(|i| {
            let f: BasisFn = Arc::new(move |x: f64| SQRT_2 * (2.0 * PI * i as f64 * x).cos());
            f
        })
        .collect()
}

impl Default for QuadraticTestSpec {
    /// Eight cosine terms, `λᵢ = 2^{-i}`, squared.
    fn default() -> Self {
        QuadraticTestSpec::cosine(8, true)
    }
}

impl QuadraticTestSpec {
    /// Validates positivity of the weights and L₂ orthogonality of the basis
    /// (1024-point midpoint rule, tolerance 1e-6).
    pub fn new(lambda: Vec<f64>, basis: Vec<BasisFn>, squared: bool) -> Result<Self> {
        if lambda.is_empty() || lambda.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} basis functions",
                lambda.len(),
                basis.len()
            )));
        }
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        for i in 0..basis.len() {
            for j in 0..i {
                let (a, b) = (&basis[i], &basis[j]);
                let inner = midpoint_rule(|x| a(x) * b(x), 0.0, 1.0, 1024);
                if inner.abs() > 1e-6 {
                    return Err(Error::InvalidArgument(format!(
                        "basis functions {j} and {i} are not orthogonal (inner product {inner})"
                    )));
                }
            }
        }
        Ok(QuadraticTestSpec {
            lambda,
            basis,
            squared,
        })
    }

    /// Cosine basis with `λᵢ = 2^{-i}`.
    pub fn cosine(k: usize, squared: bool) -> Self {
        let lambda = (1..=k).map(|i| 0.5f64.powi(i as i32)).collect();
        QuadraticTestSpec::new(lambda, cosine_basis(k), squared)
            .expect("cosine basis is orthogonal")
    }

    pub fn num_terms(&self) -> usize {
        self.basis.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn squared(&self) -> bool {
        self.squared
    }

    /// Precomputes the normalized projection weights for samples of length `n`.
    pub fn prepare(&self, n: usize) -> Result<PreparedQuadratic> {
        if n < self.basis.len() {
            return Err(Error::InvalidArgument(format!(
                "sample of length {n} is shorter than the {} basis terms",
                self.basis.len()
            )));
        }
        let mut weights = Vec::with_capacity(self.basis.len());
        for (i, g) in self.basis.iter().enumerate() {
            let w: Vec<f64> = (1..=n).map(|j| g(j as f64 / n as f64)).collect();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= 1e-10 * (n as f64).sqrt() {
                return Err(Error::Degenerate(format!(
                    "basis function {i} vanishes on the grid j/{n}"
                )));
            }
            weights.push(w.into_iter().map(|v| v / norm).collect());
        }
        Ok(PreparedQuadratic {
            weights,
            lambda: self.lambda.clone(),
            squared: self.squared,
        })
    }

    pub fn statistic(&self, x: &[f64]) -> Result<f64> {
        Ok(self.prepare(x.len())?.eval(x))
    }
}

/// A [`QuadraticTestSpec`] bound to one sample length.
#[derive(Debug, Clone)]
pub struct PreparedQuadratic {
    weights: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    squared: bool,
}

impl PreparedQuadratic {
    pub fn len(&self) -> usize {
        self.weights[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The standardized projections `Zᵢ`.
    pub fn projections(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len(), "sample length changed after prepare");
        self.weights
            .iter()
            .map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.projections(x)
            .iter()
            .zip(&self.lambda)
            .map(|(z, l)| if self.squared { l * z * z } else { l * z })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Estimate;
    use crate::rng::StreamKey;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_sample_gives_zero() {
        let spec = QuadraticTestSpec::default();
        assert_eq!(spec.statistic(&[0.0; 20]).unwrap(), 0.0);
    }

    #[test]
    fn constant_basis_is_standardized_mean() {
        let one: BasisFn = Arc::new(|_| 1.0);
        let spec = QuadraticTestSpec::new(vec![1.0], vec![one], false).unwrap();
        let x = [1.0, 2.0, 3.0, 6.0];
        assert!((spec.statistic(&x).unwrap() - 12.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        let a: BasisFn = Arc::new(|x| x);
        let b: BasisFn = Arc::new(|x| x * x);
        assert!(QuadraticTestSpec::new(vec![1.0, 1.0], vec![a.clone(), b], true).is_err());
        assert!(QuadraticTestSpec::new(vec![-1.0], vec![a], true).is_err());
        let zero_on_grid: BasisFn = Arc::new(|x| (std::f64::consts::PI * 4.0 * x).sin());
        let spec = QuadraticTestSpec::new(vec![1.0], vec![zero_on_grid], true).unwrap();
        assert!(matches!(spec.prepare(4), Err(Error::Degenerate(_))));
        assert!(QuadraticTestSpec::default().prepare(4).is_err());
    }

    #[test]
    fn null_mean_equals_weight_sum() {
        let spec = QuadraticTestSpec::default();
        let n = 64;
        let prepared = spec.prepare(n).unwrap();
        let key = StreamKey::new(12);
        let v: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut rng = key.rng(i);
                let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                prepared.eval(&x)
            })
            .collect();
        let e = Estimate::from_samples(&v);
        let target: f64 = spec.lambda().iter().sum();
        assert!((target - 0.99609375).abs() < 1e-12);
        assert!((e.mean - target).abs() < 4.0 * e.se);
        assert!(v.iter().all(|&t| t >= 0.0));
    }
}
