use crate::divergence::{entropy, kl_divergence};
use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::plan::TransportPlan;

/// `f(T) = ⟨C,T⟩ + τ KL(T1, a)`.
pub fn evaluate_f(inst: &ProblemInstance, t: &TransportPlan, tau: f64) -> Result<f64> {
    let rows = t.row_marginal();
    let kl = kl_divergence(rows.as_slice().expect("contiguous"), inst.a.as_slice())?;
    Ok(t.cost(&inst.cost)? + tau * kl)
}

/// `g(T) = f(T) − η H(T)`.
pub fn evaluate_g(inst: &ProblemInstance, t: &TransportPlan, tau: f64, eta: f64) -> Result<f64> {
    Ok(evaluate_f(inst, t, tau)? - eta * entropy(t))
}
