use crate::error::{Error, Result};

/// An alternative parameter vector `m` with optional compact-set bounds.
///
/// When no bounds are attached, samplers fall back to the family's default
/// compact set.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector {
    entries: Vec<f64>,
    bounds: Option<(f64, f64)>,
}

impl MeanVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean vector entries"));
        }
        Ok(MeanVector {
            entries,
            bounds: None,
        })
    }

    /// A vector whose entries must lie in `[lo, hi]`.
    pub fn with_bounds(entries: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("empty compact set [{lo}, {hi}]")));
        }
        let mv = MeanVector::new(entries)?;
        mv.check_within(lo, hi)?;
        Ok(MeanVector {
            bounds: Some((lo, hi)),
            ..mv
        })
    }

    /// A vector with no compact-set restriction at all.
    pub fn unbounded(entries: Vec<f64>) -> Result<Self> {
        MeanVector::with_bounds(entries, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        MeanVector::new(vec![value; n])
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().sum::<f64>() / self.entries.len() as f64
    }

    /// `‖m‖`.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖m − m̄‖`.
    pub fn centered_norm(&self) -> f64 {
        let mbar = self.mean();
        self.entries
            .iter()
            .map(|v| (v - mbar).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `max |mᵢ − m̄|`.
    pub fn max_abs_deviation(&self) -> f64 {
        let mbar = self.mean();
        self.entries
            .iter()
            .map(|v| (v - mbar).abs())
            .fold(0.0, f64::max)
    }

    pub fn centered(&self) -> Vec<f64> {
        let mbar = self.mean();
        self.entries.iter().map(|v| v - mbar).collect()
    }

    /// Fails with the first entry outside `[lo, hi]`.
    pub fn check_within(&self, lo: f64, hi: f64) -> Result<()> {
        match self
            .entries
            .iter()
            .enumerate()
            .find(|(_, &v)| v < lo || v > hi)
        {
            Some((index, &value)) => Err(Error::OutOfBounds {
                index,
                value,
                lo,
                hi,
            }),
            None => Ok(()),
        }
    }
}
