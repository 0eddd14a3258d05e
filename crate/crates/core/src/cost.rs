use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense ground-cost matrix with cached `‖C‖∞ = max |C_ij|` and
/// `‖C‖₁ = Σ |C_ij|` (entrywise norms).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CostMatrix {
    entries: Array2<f64>,
    inf_norm: f64,
    l1_norm: f64,
}

impl CostMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if let Some(index) = entries.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let inf_norm = entries.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let l1_norm = entries.iter().map(|c| c.abs()).sum();
        Ok(Self {
            entries,
            inf_norm,
            l1_norm,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "cost matrix row length",
                    expected: m,
                    found: row.len(),
                });
            }
            flat.extend(row);
        }
        let entries = Array2::from_shape_vec((n, m), flat)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[[i, j]]
    }

    pub fn inf_norm(&self) -> f64 {
        self.inf_norm
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for CostMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<CostMatrix> for Vec<Vec<f64>> {
    fn from(c: CostMatrix) -> Self {
        c.to_rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn norms_are_cached() {
        let c = CostMatrix::new(array![[1.0, -2.0], [3.0, 0.5]]).unwrap();
        assert_eq!(c.inf_norm(), 3.0);
        assert_eq!(c.l1_norm(), 6.5);
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = CostMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn infinite_entry_rejected() {
        assert!(CostMatrix::new(array![[1.0, f64::INFINITY]]).is_err());
    }
}
