//! Iterative scaling solvers working on dual potentials.
//!
//! An iteration is one half-update. Starting from `u = v = 0` at `k = 0`, even
//! `k` updates `u` (row side) and odd `k` updates `v` (column side), so even
//! iterates `k ≥ 2` come out of a column update and odd iterates out of a row
//! update.

mod engine;
pub mod kernel;
mod objective;
mod pot;

use std::fmt;
use std::io::Write;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

pub use engine::{MarginalMode, ScalingSolver};
pub use kernel::{dual_gradient, dual_objective, plan_from_potentials};
pub use objective::{evaluate_f, evaluate_g};
pub use pot::pot_column_min;

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::io::fmt_f64;
use crate::plan::TransportPlan;

/// Which half-update produced the current iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LastUpdate {
    Initial,
    /// The row potential `u` was updated (from an even iterate).
    EvenU,
    /// The column potential `v` was updated (from an odd iterate).
    OddV,
}

impl LastUpdate {
    /// The update kind that leads to iterate `k`.
    pub fn for_iteration(k: usize) -> Self {
        match k {
            0 => LastUpdate::Initial,
            k if k % 2 == 1 => LastUpdate::EvenU,
            _ => LastUpdate::OddV,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LastUpdate::Initial => "initial",
            LastUpdate::EvenU => "even-update",
            LastUpdate::OddV => "odd-update",
        }
    }
}

impl fmt::Display for LastUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualPotentials {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub iteration: usize,
    pub last_update: LastUpdate,
}

impl DualPotentials {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Array1::zeros(rows), Array1::zeros(cols))
    }

    /// Potentials at iteration 0.
    pub fn new(u: Array1<f64>, v: Array1<f64>) -> Self {
        Self {
            u,
            v,
            iteration: 0,
            last_update: LastUpdate::Initial,
        }
    }

    pub fn u_inf_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn v_inf_norm(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `max(‖u − u'‖∞, ‖v − v'‖∞)`.
    pub fn distance(&self, other: &DualPotentials) -> f64 {
        let du = self
            .u
            .iter()
            .zip(&other.u)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let dv = self
            .v
            .iter()
            .zip(&other.v)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        du.max(dv)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tau: f64,
    pub eta: f64,
    pub max_iterations: usize,
    /// Record every this many iterations (0 records only the endpoints).
    pub trace_every: usize,
    /// Stop once both half-step increments fall to this value; 0 disables.
    pub convergence_tol: f64,
    #[serde(default)]
    pub record_potentials: bool,
}

impl SolverConfig {
    pub fn new(tau: f64, eta: f64, max_iterations: usize) -> Self {
        Self {
            tau,
            eta,
            max_iterations,
            trace_every: 1,
            convergence_tol: 0.0,
            record_potentials: false,
        }
    }

    pub fn trace_every(mut self, every: usize) -> Self {
        self.trace_every = every;
        self
    }

    pub fn convergence_tol(mut self, tol: f64) -> Self {
        self.convergence_tol = tol;
        self
    }

    pub fn record_potentials(mut self, on: bool) -> Self {
        self.record_potentials = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "convergence_tol must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded iterate. The objective columns are only filled by the
/// semi-relaxed solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub parity: LastUpdate,
    pub distance: f64,
    pub f: Option<f64>,
    pub g: Option<f64>,
    pub row_gap_inf: f64,
    pub col_gap_inf: f64,
    pub dual_obj: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

pub const TRACE_COLUMNS: [&str; 8] = [
    "iter",
    "parity",
    "distance",
    "f",
    "g",
    "row_gap_inf",
    "col_gap_inf",
    "dual_obj",
];

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRACE_COLUMNS)?;
        for r in &self.records {
            out.write_record([
                r.iter.to_string(),
                r.parity.to_string(),
                fmt_f64(r.distance),
                opt(r.f),
                opt(r.g),
                fmt_f64(r.row_gap_inf),
                fmt_f64(r.col_gap_inf),
                opt(r.dual_obj),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug)]
pub struct SolverOutput {
    pub plan: TransportPlan,
    pub potentials: DualPotentials,
    pub trace: SolverTrace,
    /// True when the run stopped on `convergence_tol` before the budget.
    pub converged: bool,
}

/// Semi-relaxed Sinkhorn: KL-relaxed rows with weight `tau`, hard columns.
pub fn sr_sinkhorn(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolverOutput> {
    cfg.validate()?;
    ScalingSolver::new(
        inst,
        cfg.eta,
        MarginalMode::Kl { tau: cfg.tau },
        MarginalMode::Hard,
    )?
    .run(cfg, Some(cfg.tau))
}

/// Classical balanced Sinkhorn. Uses `cfg.eta` and the iteration settings;
/// `cfg.tau` is ignored.
pub fn standard_sinkhorn(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolverOutput> {
    cfg.validate()?;
    let (alpha, beta) = (inst.a.total(), inst.b.total());
    if (alpha - beta).abs() > 1e-10 * alpha.max(beta) {
        return Err(Error::Unbalanced { alpha, beta });
    }
    ScalingSolver::new(inst, cfg.eta, MarginalMode::Hard, MarginalMode::Hard)?.run(cfg, None)
}

/// Sinkhorn for unbalanced transport with KL weights `tau1` on rows and
/// `tau2` on columns. Uses `cfg.eta`; `cfg.tau` is ignored.
pub fn uot_sinkhorn(
    inst: &ProblemInstance,
    tau1: f64,
    tau2: f64,
    cfg: &SolverConfig,
) -> Result<SolverOutput> {
    cfg.validate()?;
    ScalingSolver::new(
        inst,
        cfg.eta,
        MarginalMode::Kl { tau: tau1 },
        MarginalMode::Kl { tau: tau2 },
    )?
    .run(cfg, None)
}
