use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for the simplex flag and the cached-total invariant.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A nonnegative weight vector, i.e. a discrete measure on `len()` points.
///
/// Row measures are usually called `a` (total `alpha`) and column measures `b`
/// (total `beta`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteMeasure {
    weights: Array1<f64>,
    total: f64,
}

impl DiscreteMeasure {
    pub fn new(weights: impl Into<Array1<f64>>) -> Result<Self> {
        let weights = weights.into();
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if w < 0.0 {
                return Err(Error::NegativeEntry { index, value: w });
            }
        }
        let total = weights.sum();
        Ok(Self { weights, total })
    }

    /// Builds the measure and rescales it to unit mass.
    pub fn normalized(weights: impl Into<Array1<f64>>) -> Result<Self> {
        let raw = Self::new(weights)?;
        if raw.total <= 0.0 {
            return Err(Error::Degenerate(
                "cannot normalize a zero-mass measure".into(),
            ));
        }
        Self::new(raw.weights / raw.total)
    }

    pub fn uniform(n: usize) -> Self {
        let w = Array1::from_elem(n, 1.0 / n as f64);
        let total = w.sum();
        Self { weights: w, total }
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn as_slice(&self) -> &[f64] {
        self.weights
            .as_slice()
            .expect("owned 1-d arrays are contiguous")
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_simplex(&self) -> bool {
        (self.total - 1.0).abs() <= SIMPLEX_TOL
    }

    /// True when every weight is strictly positive, which the iterative
    /// solvers require because they take logarithms of the weights.
    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    pub fn require_positive(&self) -> Result<()> {
        match self.weights.iter().position(|&w| w <= 0.0) {
            Some(index) => Err(Error::NonPositive {
                index,
                value: self.weights[index],
            }),
            None => Ok(()),
        }
    }

    pub fn require_simplex(&self, what: &'static str) -> Result<()> {
        if self.is_simplex() {
            Ok(())
        } else {
            Err(Error::NotSimplex {
                what,
                total: self.total,
            })
        }
    }

    pub fn max(&self) -> f64 {
        self.weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn ln(&self) -> Array1<f64> {
        self.weights.mapv(f64::ln)
    }

    /// `log(max / min)`, the spread term that appears in the simplex bounds.
    pub fn log_spread(&self) -> f64 {
        (self.max() / self.min()).ln()
    }

    /// `max_i |log w_i|`.
    pub fn log_inf_norm(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.ln().abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for DiscreteMeasure {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteMeasure> for Vec<f64> {
    fn from(m: DiscreteMeasure) -> Self {
        m.weights.to_vec()
    }
}
