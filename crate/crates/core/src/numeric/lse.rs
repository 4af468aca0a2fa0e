/// Streaming log-sum-exp accumulator.
///
/// Holds `max` and `sum = Σ exp(term - max)`, rescaling whenever a larger term
/// arrives, so sums of exponentials with exponents in the hundreds never overflow.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
    count: u64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
        }
    }

    pub fn push(&mut self, term: f64) {
        self.count += 1;
        if term == f64::NEG_INFINITY {
            return;
        }
        if term <= self.max {
            self.sum += (term - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - term).exp() + 1.0;
            self.max = term;
        }
    }

    /// Merges another accumulator into this one.
    pub fn merge(&mut self, other: &LogSumExp) {
        self.count += other.count;
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `log Σ exp(term)`.
    pub fn ln_sum(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }

    /// `log((1/count) Σ exp(term))`.
    pub fn ln_mean(&self) -> f64 {
        self.ln_sum() - (self.count as f64).ln()
    }
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &t in terms {
        acc.push(t);
    }
    acc.ln_sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum() {
        let terms = [0.3, -1.2, 2.5, 0.0, 1.1];
        let naive: f64 = terms.iter().map(|t: &f64| t.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&terms) - naive).abs() < 1e-14);
    }

    #[test]
    fn survives_huge_exponents() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn merge_equals_single_pass() {
        let terms: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 40.0).collect();
        let mut a = LogSumExp::new();
        let mut b = LogSumExp::new();
        for (i, &t) in terms.iter().enumerate() {
            if i % 3 == 0 {
                a.push(t)
            } else {
                b.push(t)
            }
        }
        a.merge(&b);
        assert!((a.ln_sum() - log_sum_exp(&terms)).abs() < 1e-12);
        assert_eq!(a.count(), 50);
    }
}
