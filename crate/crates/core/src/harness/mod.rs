//! Seeded experiment runners. Each produces plot-ready series plus a summary
//! with the number of bound violations.

mod experiments;
mod output;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use experiments::{
    run_experiment, run_iteration_bounds, run_marginal_gap, run_ot_gap, run_sinkhorn_compare,
    run_unregularized_bound,
};
pub use output::write_result;

use crate::error::{Error, Result};
use crate::exact::ReferenceConfig;
use crate::instance::GeneratorParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    MarginalGap,
    OtGap,
    IterationBounds,
    SinkhornCompare,
    UnregularizedBound,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 5] = [
        ExperimentId::MarginalGap,
        ExperimentId::OtGap,
        ExperimentId::IterationBounds,
        ExperimentId::SinkhornCompare,
        ExperimentId::UnregularizedBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::MarginalGap => "marginal-gap",
            ExperimentId::OtGap => "ot-gap",
            ExperimentId::IterationBounds => "iteration-bounds",
            ExperimentId::SinkhornCompare => "sinkhorn-compare",
            ExperimentId::UnregularizedBound => "unregularized-bound",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment id {s:?}")))
    }
}

/// Evenly spaced grid, endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            c => (0..c)
                .map(|i| self.start + (self.end - self.start) * i as f64 / (c - 1) as f64)
                .collect(),
        }
    }
}

/// Full parameter set for one experiment. Fields an experiment does not use
/// are ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub generator: GeneratorParams,
    pub seeds: Vec<u64>,
    pub tau: f64,
    pub eta: f64,
    pub iterations: usize,
    /// Output stride for per-iteration series.
    pub record_stride: usize,
    /// KL weights of the unbalanced solver.
    pub tau1: f64,
    pub tau2: f64,
    /// τ values swept by iteration-bounds and unregularized-bound.
    pub taus: Vec<f64>,
    pub epsilon_grid: Grid,
    /// Cap on the measured stopping iteration, as a multiple of the bound.
    pub censor_factor: f64,
    /// Use a long reference run for `‖u*‖∞` instead of the a-priori cap.
    pub reference_dual_norm: bool,
    pub reference: ReferenceConfig,
}

impl ExperimentSpec {
    pub fn default_for(id: ExperimentId) -> Self {
        let base = Self {
            id,
            generator: GeneratorParams::small_cost(50),
            seeds: vec![7],
            tau: 1e6,
            eta: 1e-2,
            iterations: 2000,
            record_stride: 2,
            tau1: 0.1,
            tau2: 0.1,
            taus: Vec::new(),
            epsilon_grid: Grid {
                start: 1.0,
                end: 0.05,
                count: 20,
            },
            censor_factor: 10.0,
            reference_dual_norm: false,
            reference: ReferenceConfig::default(),
        };
        match id {
            ExperimentId::MarginalGap | ExperimentId::OtGap => base,
            ExperimentId::IterationBounds => Self {
                generator: GeneratorParams::wide_cost(100),
                taus: vec![1.0, 10.0, 100.0],
                ..base
            },
            ExperimentId::SinkhornCompare => Self {
                generator: GeneratorParams::small_cost(500),
                tau: 0.1,
                eta: 0.1,
                iterations: 100,
                record_stride: 1,
                ..base
            },
            ExperimentId::UnregularizedBound => Self {
                generator: GeneratorParams::small_cost(10),
                seeds: (0..10).collect(),
                taus: (0..=6).map(|e| 10f64.powi(e)).collect(),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("no seeds given".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter(
                "record_stride must be at least 1".into(),
            ));
        }
        for (name, x) in [
            ("tau", self.tau),
            ("eta", self.eta),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {x}"
                )));
            }
        }
        if self.taus.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidParameter("taus must be positive".into()));
        }
        let needs_taus = matches!(
            self.id,
            ExperimentId::IterationBounds | ExperimentId::UnregularizedBound
        );
        if needs_taus && self.taus.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{} needs a tau grid",
                self.id
            )));
        }
        if self.id == ExperimentId::IterationBounds {
            if self.epsilon_grid.values().iter().any(|e| !(*e > 0.0))
                || self.epsilon_grid.count == 0
            {
                return Err(Error::InvalidParameter(
                    "epsilon grid must be positive and nonempty".into(),
                ));
            }
            if !(self.censor_factor >= 1.0) {
                return Err(Error::InvalidParameter(
                    "censor_factor must be at least 1".into(),
                ));
            }
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A table cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Missing, Into::into)
    }
}

/// One CSV-shaped table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    /// `(column name, description)`.
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Series {
    pub fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns
                .iter()
                .map(|(c, d)| (c.to_string(), d.to_string()))
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(c, _)| c == name)
    }

    /// Numeric values of one column (non-numeric cells skipped).
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(idx) = self.column_index(name) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[idx].as_f64()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: ExperimentSpec,
    pub code_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub id: ExperimentId,
    pub series: Vec<Series>,
    pub bound_violations: usize,
    /// Named scalar findings (final gaps, slopes, flags).
    pub verdicts: serde_json::Map<String, serde_json::Value>,
    pub provenance: Provenance,
}

impl ExperimentResult {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn verdict_f64(&self, key: &str) -> Option<f64> {
        self.verdicts.get(key).and_then(|v| v.as_f64())
    }

    pub fn verdict_bool(&self, key: &str) -> Option<bool> {
        self.verdicts.get(key).and_then(|v| v.as_bool())
    }

    pub fn passed(&self) -> bool {
        self.bound_violations == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        let g = Grid {
            start: 1.0,
            end: 0.05,
            count: 20,
        }
        .values();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 1.0);
        assert!((g[19] - 0.05).abs() < 1e-15);
        assert!((g[1] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
            ExperimentSpec::default_for(id).validate().unwrap();
        }
        assert!("no-such-experiment".parse::<ExperimentId>().is_err());
    }
}
