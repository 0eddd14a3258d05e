use ndarray::{Array1, Array2, Axis};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};

/// A dense nonnegative transport matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    entries: Array2<f64>,
}

impl TransportPlan {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        for (index, &t) in entries.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if t < 0.0 {
                return Err(Error::NegativeEntry { index, value: t });
            }
        }
        Ok(Self { entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            entries: Array2::zeros((rows, cols)),
        }
    }

    /// Skips validation. Callers guarantee finite nonnegative entries.
    pub(crate) fn from_trusted(entries: Array2<f64>) -> Self {
        debug_assert!(entries.iter().all(|t| t.is_finite() && *t >= 0.0));
        Self { entries }
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// `T·1`
    pub fn row_marginal(&self) -> Array1<f64> {
        self.entries.sum_axis(Axis(1))
    }

    /// `Tᵀ·1`
    pub fn col_marginal(&self) -> Array1<f64> {
        self.entries.sum_axis(Axis(0))
    }

    pub fn total(&self) -> f64 {
        self.entries.sum()
    }

    /// Transport cost `⟨C, T⟩`.
    pub fn cost(&self, c: &CostMatrix) -> Result<f64> {
        if c.entries().dim() != self.entries.dim() {
            return Err(Error::DimensionMismatch {
                context: "plan vs cost",
                expected: c.rows() * c.cols(),
                found: self.rows() * self.cols(),
            });
        }
        Ok(ndarray::Zip::from(c.entries())
            .and(&self.entries)
            .fold(0.0, |acc, &ci, &ti| acc + ci * ti))
    }

    pub fn l1_distance(&self, other: &TransportPlan) -> f64 {
        ndarray::Zip::from(&self.entries)
            .and(&other.entries)
            .fold(0.0, |acc, &x, &y| acc + (x - y).abs())
    }
}
