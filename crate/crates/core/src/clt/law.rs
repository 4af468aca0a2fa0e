use num_complex::Complex64;

use crate::error::{ensure_len, invalid, Error, Result};

/// A sample from a real law, kept sorted. Every value has weight `1/len`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    values: Vec<f64>,
}

impl EmpiricalLaw {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("empirical law"));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalLaw { values })
    }

    pub fn point_mass(c: f64) -> Result<Self> {
        Self::new(vec![c])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn second_moment(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.len() as f64
    }

    /// Left-continuous quantile `inf{v : F(v) ≥ p}` for `p ∈ (0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.values[k - 1]
    }

    /// `F(v) = #{values ≤ v} / len`.
    pub fn cdf(&self, v: f64) -> f64 {
        self.values.partition_point(|&a| a <= v) as f64 / self.len() as f64
    }
}

fn nonempty(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        Err(invalid("distance between empty laws"))
    } else {
        Ok(())
    }
}

/// Order-2 Wasserstein distance `(∫₀¹ (Q_a(u) − Q_b(u))² du)^{1/2}`.
///
/// Both quantile functions are step functions, so the integral is summed
/// exactly over the merged breakpoints `{i/|a|} ∪ {j/|b|}`; for equal sizes
/// this is the sorted pairing.
pub fn rho2(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<f64> {
    nonempty(a, b)?;
    let (na, nb) = (a.len(), b.len());
    if na == nb {
        let s: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum();
        return Ok((s / na as f64).sqrt());
    }
    // Breakpoints i·nb and j·na on the common integer scale na·nb.
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0u128;
    let mut acc = 0.0;
    while i < na && j < nb {
        let next_a = (i as u128 + 1) * nb as u128;
        let next_b = (j as u128 + 1) * na as u128;
        let next = next_a.min(next_b);
        acc += (next - pos) as f64 * (a.values[i] - b.values[j]).powi(2);
        pos = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    Ok((acc / (na as f64 * nb as f64)).sqrt())
}

/// Kolmogorov distance `sup_v |F_a(v) − F_b(v)|`.
pub fn rho0(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<f64> {
    nonempty(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let v = match (a.values.get(i), b.values.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a.values[i] <= v {
            i += 1;
        }
        while j < b.len() && b.values[j] <= v {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(best)
}

/// `(1/N) Σ exp(i t vₖ)`.
pub fn char_fn(law: &EmpiricalLaw, t: f64) -> Complex64 {
    let sum: Complex64 = law.values.iter().map(|&v| Complex64::from_polar(1.0, t * v)).sum();
    sum / law.len() as f64
}

/// Both sides of `|E e^{itW} − E e^{itW′}| ≤ t² E(W−W′)² + |t| E^{1/2}(W−W′)²`
/// on paired samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfInequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl CfInequality {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-12
    }
}

/// Evaluates the characteristic-function inequality on paired draws `(wₖ, w′ₖ)`.
pub fn cf_inequality(w: &[f64], wprime: &[f64], t: f64) -> Result<CfInequality> {
    ensure_len(w.len(), wprime.len())?;
    if w.is_empty() {
        return Err(invalid("empty paired sample"));
    }
    let n = w.len() as f64;
    let cf = |s: &[f64]| s.iter().map(|&v| Complex64::from_polar(1.0, t * v)).sum::<Complex64>() / n;
    let msq = w.iter().zip(wprime).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    Ok(CfInequality {
        lhs: (cf(w) - cf(wprime)).norm(),
        rhs: t * t * msq + t.abs() * msq.sqrt(),
    })
}

pub fn cf_inequality_check(w: &[f64], wprime: &[f64], t: f64) -> Result<bool> {
    Ok(cf_inequality(w, wprime, t)?.holds())
}

/// The tail functional `Ψ(t) = E[V² 1(|V| ≥ t)]` at each `t`.
pub fn uniform_integrability_probe(law: &EmpiricalLaw, t_grid: &[f64]) -> Vec<f64> {
    let n = law.len() as f64;
    t_grid
        .iter()
        .map(|&t| law.values.iter().filter(|v| v.abs() >= t).map(|v| v * v).sum::<f64>() / n)
        .collect()
}
