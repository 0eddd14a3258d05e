//! Gibbs-kernel primitives evaluated directly from the potentials.

use ndarray::{Array1, Array2};

use crate::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::plan::TransportPlan;

use super::DualPotentials;

/// Largest exponent argument accepted when materializing a plan.
pub const MAX_EXP_ARG: f64 = 700.0;

/// `L_i = log Σ_j exp((v_j − C_ij)/η)`, so that `log (T1)_i = u_i/η + L_i`.
pub fn log_row_sums(cost: &CostMatrix, v: &Array1<f64>, eta: f64) -> Array1<f64> {
    let c = cost.entries();
    Array1::from_iter(c.rows().into_iter().map(|row| {
        let m = row
            .iter()
            .zip(v)
            .map(|(cij, vj)| vj - cij)
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = row
            .iter()
            .zip(v)
            .map(|(cij, vj)| ((vj - cij - m) / eta).exp())
            .sum();
        m / eta + s.ln()
    }))
}

/// `M_j = log Σ_i exp((u_i − C_ij)/η)`, so that `log (Tᵀ1)_j = v_j/η + M_j`.
pub fn log_col_sums(cost: &CostMatrix, u: &Array1<f64>, eta: f64) -> Array1<f64> {
    let c = cost.entries();
    let mut m = Array1::from_elem(c.ncols(), f64::NEG_INFINITY);
    for (row, ui) in c.rows().into_iter().zip(u) {
        for (mj, cij) in m.iter_mut().zip(row) {
            *mj = mj.max(ui - cij);
        }
    }
    let mut s = Array1::<f64>::zeros(c.ncols());
    for (row, ui) in c.rows().into_iter().zip(u) {
        for ((sj, mj), cij) in s.iter_mut().zip(&m).zip(row) {
            *sj += ((ui - cij - mj) / eta).exp();
        }
    }
    Array1::from_iter(m.iter().zip(&s).map(|(mj, sj)| mj / eta + sj.ln()))
}

fn check_dims(inst: &ProblemInstance, d: &DualPotentials) -> Result<()> {
    if d.u.len() != inst.rows() {
        return Err(Error::DimensionMismatch {
            context: "u vs cost rows",
            expected: inst.rows(),
            found: d.u.len(),
        });
    }
    if d.v.len() != inst.cols() {
        return Err(Error::DimensionMismatch {
            context: "v vs cost cols",
            expected: inst.cols(),
            found: d.v.len(),
        });
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eta must be positive, got {eta}"
        )))
    }
}

/// `T_ij = exp((u_i + v_j − C_ij)/η)`.
pub fn plan_from_potentials(
    inst: &ProblemInstance,
    d: &DualPotentials,
    eta: f64,
) -> Result<TransportPlan> {
    check_eta(eta)?;
    check_dims(inst, d)?;
    let c = inst.cost.entries();
    let mut t = Array2::zeros(c.dim());
    for ((i, j), tij) in t.indexed_iter_mut() {
        let arg = (d.u[i] + d.v[j] - c[[i, j]]) / eta;
        if arg > MAX_EXP_ARG || arg.is_nan() {
            return Err(Error::Overflow {
                row: i,
                col: j,
                argument: arg,
            });
        }
        *tij = arg.exp();
    }
    Ok(TransportPlan::from_trusted(t))
}

/// `h(u,v) = η Σ exp((u_i+v_j−C_ij)/η) − vᵀb + τ aᵀ exp(−u/τ)`.
pub fn dual_objective(
    inst: &ProblemInstance,
    d: &DualPotentials,
    tau: f64,
    eta: f64,
) -> Result<f64> {
    let t = plan_from_potentials(inst, d, eta)?;
    Ok(dual_objective_with_plan(inst, d, &t, tau, eta))
}

pub(crate) fn dual_objective_with_plan(
    inst: &ProblemInstance,
    d: &DualPotentials,
    t: &TransportPlan,
    tau: f64,
    eta: f64,
) -> f64 {
    let mass = eta * t.total();
    let lin = d.v.dot(inst.b.weights());
    let relax: f64 = inst
        .a
        .weights()
        .iter()
        .zip(&d.u)
        .map(|(ai, ui)| ai * (-ui / tau).exp())
        .sum();
    mass - lin + tau * relax
}

/// Analytic gradient of `h`: `(T1 − a∘exp(−u/τ), Tᵀ1 − b)`.
pub fn dual_gradient(
    inst: &ProblemInstance,
    d: &DualPotentials,
    tau: f64,
    eta: f64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let t = plan_from_potentials(inst, d, eta)?;
    let gu = t.row_marginal()
        - &Array1::from_iter(
            inst.a
                .weights()
                .iter()
                .zip(&d.u)
                .map(|(ai, ui)| ai * (-ui / tau).exp()),
        );
    let gv = t.col_marginal() - inst.b.weights();
    Ok((gu, gv))
}
