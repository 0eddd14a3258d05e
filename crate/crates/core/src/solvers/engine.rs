use ndarray::Array1;

use crate::divergence::entropy;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::plan::TransportPlan;

use super::kernel::{dual_objective_with_plan, log_col_sums, log_row_sums, plan_from_potentials};
use super::objective::evaluate_f;
use super::{DualPotentials, LastUpdate, SolverConfig, SolverOutput, SolverTrace, TraceRecord};

/// How one side's marginal enters the objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MarginalMode {
    /// Equality constraint; the update fits the marginal exactly.
    Hard,
    /// `tau · KL(marginal, target)` penalty.
    Kl { tau: f64 },
}

impl MarginalMode {
    /// Contraction applied to the exact-fit potential.
    fn factor(self, eta: f64) -> f64 {
        match self {
            MarginalMode::Hard => 1.0,
            MarginalMode::Kl { tau } => tau / (tau + eta),
        }
    }
}

fn max_abs_diff(x: &Array1<f64>, y: &Array1<f64>) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Alternating row/column potential updates, one half-step at a time.
///
/// The row update is `u ← κ_r (u + η(log a − log aᵏ))` and the column update
/// `v ← κ_c (v + η(log b − log bᵏ))`, with `κ = 1` for a hard side and
/// `τ/(τ+η)` for a KL side. Marginals are kept in log form, so nothing
/// underflows even when `‖C‖∞/η` is in the thousands.
pub struct ScalingSolver<'a> {
    inst: &'a ProblemInstance,
    eta: f64,
    row: MarginalMode,
    col: MarginalMode,
    log_a: Array1<f64>,
    log_b: Array1<f64>,
    pot: DualPotentials,
    // log-sum-exp over the kernel for the current v (rows) and u (columns)
    row_lse: Option<Array1<f64>>,
    col_lse: Option<Array1<f64>>,
    increments: [f64; 2],
}

impl<'a> ScalingSolver<'a> {
    pub fn new(
        inst: &'a ProblemInstance,
        eta: f64,
        row: MarginalMode,
        col: MarginalMode,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {eta}"
            )));
        }
        for mode in [row, col] {
            if let MarginalMode::Kl { tau } = mode {
                if !(tau > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "KL weight must be positive, got {tau}"
                    )));
                }
            }
        }
        inst.a.require_positive()?;
        inst.b.require_positive()?;
        Ok(Self {
            inst,
            eta,
            row,
            col,
            log_a: inst.a.ln(),
            log_b: inst.b.ln(),
            pot: DualPotentials::zeros(inst.rows(), inst.cols()),
            row_lse: None,
            col_lse: None,
            increments: [f64::INFINITY; 2],
        })
    }

    /// Replaces the starting point. The iteration counter is reset to 0 so the
    /// next update is a row update.
    pub fn warm_start(mut self, u: Array1<f64>, v: Array1<f64>) -> Result<Self> {
        if u.len() != self.inst.rows() || v.len() != self.inst.cols() {
            return Err(Error::DimensionMismatch {
                context: "warm-start potentials",
                expected: self.inst.rows() + self.inst.cols(),
                found: u.len() + v.len(),
            });
        }
        self.pot = DualPotentials::new(u, v);
        self.row_lse = None;
        self.col_lse = None;
        Ok(self)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn iteration(&self) -> usize {
        self.pot.iteration
    }

    pub fn potentials(&self) -> &DualPotentials {
        &self.pot
    }

    pub fn into_potentials(self) -> DualPotentials {
        self.pot
    }

    /// `max(‖Δu‖∞, ‖Δv‖∞)` over the last row and the last column update.
    pub fn last_increment(&self) -> f64 {
        self.increments[0].max(self.increments[1])
    }

    fn row_lse(&mut self) -> &Array1<f64> {
        let (inst, v, eta) = (self.inst, &self.pot.v, self.eta);
        self.row_lse
            .get_or_insert_with(|| log_row_sums(&inst.cost, v, eta))
    }

    fn col_lse(&mut self) -> &Array1<f64> {
        let (inst, u, eta) = (self.inst, &self.pot.u, self.eta);
        self.col_lse
            .get_or_insert_with(|| log_col_sums(&inst.cost, u, eta))
    }

    /// `log(T1)` at the current iterate.
    pub fn log_row_marginal(&mut self) -> Array1<f64> {
        let eta = self.eta;
        let lse = self.row_lse().clone();
        &self.pot.u / eta + &lse
    }

    /// `log(Tᵀ1)` at the current iterate.
    pub fn log_col_marginal(&mut self) -> Array1<f64> {
        let eta = self.eta;
        let lse = self.col_lse().clone();
        &self.pot.v / eta + &lse
    }

    pub fn plan(&self) -> Result<TransportPlan> {
        plan_from_potentials(self.inst, &self.pot, self.eta)
    }

    /// Performs one half-update.
    pub fn step(&mut self) -> Result<()> {
        let k = self.pot.iteration;
        let eta = self.eta;
        // With log aᵏ = u/η + L the bracket u + η(log a − log aᵏ) equals η(log a − L);
        // the second form avoids cancelling two large terms.
        if k.is_multiple_of(2) {
            let kappa = self.row.factor(eta);
            let lse = self.row_lse().clone();
            let new = Array1::from_iter(
                self.log_a
                    .iter()
                    .zip(&lse)
                    .map(|(la, l)| kappa * eta * (la - l)),
            );
            self.commit(k, new, true)?;
        } else {
            let kappa = self.col.factor(eta);
            let lse = self.col_lse().clone();
            let new = Array1::from_iter(
                self.log_b
                    .iter()
                    .zip(&lse)
                    .map(|(lb, m)| kappa * eta * (lb - m)),
            );
            self.commit(k, new, false)?;
        }
        Ok(())
    }

    fn commit(&mut self, k: usize, new: Array1<f64>, row_side: bool) -> Result<()> {
        if let Some(i) = new.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite {} potential at index {i} (iteration {k})",
                if row_side { "row" } else { "column" }
            )));
        }
        if row_side {
            self.increments[0] = max_abs_diff(&new, &self.pot.u);
            self.pot.u = new;
            self.col_lse = None;
        } else {
            self.increments[1] = max_abs_diff(&new, &self.pot.v);
            self.pot.v = new;
            self.row_lse = None;
        }
        self.pot.iteration = k + 1;
        self.pot.last_update = LastUpdate::for_iteration(k + 1);
        Ok(())
    }

    fn record(
        &self,
        tau: Option<f64>,
        with_potentials: bool,
    ) -> Result<(TraceRecord, TransportPlan)> {
        let t = self.plan()?;
        let inst = self.inst;
        let distance = t.cost(&inst.cost)?;
        let row_gap = max_abs_diff(&t.row_marginal(), inst.a.weights());
        let col_gap = max_abs_diff(&t.col_marginal(), inst.b.weights());
        let (f, g, dual) = match tau {
            Some(tau) => {
                let f = evaluate_f(inst, &t, tau)?;
                let g = f - self.eta * entropy(&t);
                let h = dual_objective_with_plan(inst, &self.pot, &t, tau, self.eta);
                (Some(f), Some(g), Some(h))
            }
            None => (None, None, None),
        };
        let rec = TraceRecord {
            iter: self.pot.iteration,
            parity: self.pot.last_update,
            distance,
            f,
            g,
            row_gap_inf: row_gap,
            col_gap_inf: col_gap,
            dual_obj: dual,
            u: with_potentials.then(|| self.pot.u.to_vec()),
            v: with_potentials.then(|| self.pot.v.to_vec()),
        };
        Ok((rec, t))
    }

    /// Iterates up to `cfg.max_iterations` total half-updates, recording every
    /// `cfg.trace_every`-th iterate plus the last one. `objective_tau` enables
    /// the f, g and dual columns.
    pub fn run(mut self, cfg: &SolverConfig, objective_tau: Option<f64>) -> Result<SolverOutput> {
        let mut trace = SolverTrace::default();
        let mut converged = false;
        let mut last_recorded = None;
        loop {
            let k = self.pot.iteration;
            if cfg.trace_every > 0 && k.is_multiple_of(cfg.trace_every) {
                let (rec, _) = self.record(objective_tau, cfg.record_potentials)?;
                trace.records.push(rec);
                last_recorded = Some(k);
            }
            if k >= cfg.max_iterations {
                break;
            }
            self.step()?;
            let k = self.pot.iteration;
            if cfg.convergence_tol > 0.0
                && k.is_multiple_of(2)
                && self.last_increment() <= cfg.convergence_tol
            {
                converged = true;
                break;
            }
        }
        let (rec, plan) = self.record(objective_tau, cfg.record_potentials)?;
        if last_recorded != Some(self.pot.iteration) {
            trace.records.push(rec);
        }
        Ok(SolverOutput {
            plan,
            potentials: self.pot,
            trace,
            converged,
        })
    }
}
