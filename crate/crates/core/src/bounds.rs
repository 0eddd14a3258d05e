//! Closed-form constants and convergence bounds for the semi-relaxed solver.
//!
//! Notation: `ρ = τ/(τ+η)`, `n` the (square) problem size, `α = Σa`, `β = Σb`.
//! Iterate parity follows [`crate::solvers`]: even `k ≥ 2` comes out of a
//! column update, odd `k` out of a row update.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cost::CostMatrix;
use crate::divergence::vector_entropy;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::io::fmt_f64;
use crate::measure::DiscreteMeasure;

fn require_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

fn require_even(k: usize) -> Result<()> {
    if k.is_multiple_of(2) {
        Ok(())
    } else {
        Err(Error::Parity {
            k,
            required: "even (after a column update)",
        })
    }
}

fn require_odd(k: usize) -> Result<()> {
    if k % 2 == 1 {
        Ok(())
    } else {
        Err(Error::Parity {
            k,
            required: "odd (after a row update)",
        })
    }
}

pub fn contraction(tau: f64, eta: f64) -> f64 {
    tau / (tau + eta)
}

/// `R = max(‖log a‖∞, ‖log b‖∞) + max(log n, ‖C‖∞/η − log n)`.
pub fn compute_r(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    c: &CostMatrix,
    eta: f64,
) -> Result<f64> {
    require_positive("eta", eta)?;
    a.require_positive()?;
    b.require_positive()?;
    let log_n = (a.len() as f64).ln();
    let first = a.log_inf_norm().max(b.log_inf_norm());
    Ok(first + log_n.max(c.inf_norm() / eta - log_n))
}

/// `c1 = (2n(τ+η)R/τ + 1)β`, `c2 = 2β log n`.
pub fn compute_c1_c2(n: usize, tau: f64, eta: f64, r: f64, beta: f64) -> (f64, f64) {
    let nf = n as f64;
    let c1 = (2.0 * nf * (tau + eta) * r / tau + 1.0) * beta;
    let c2 = 2.0 * beta * nf.ln();
    (c1, c2)
}

/// `(β‖C‖₁ + τ c1) ε′ + η c2`.
pub fn functional_gap_bound(
    eps_prime: f64,
    tau: f64,
    eta: f64,
    c_l1: f64,
    c1: f64,
    c2: f64,
    beta: f64,
) -> f64 {
    (beta * c_l1 + tau * c1) * eps_prime + eta * c2
}

/// Parameters under which the functional-gap bound equals `ε_f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalPrescription {
    pub epsilon_f: f64,
    pub tau: f64,
    pub eta: f64,
    pub eps_prime: f64,
    pub r: f64,
    pub c1: f64,
    pub c2: f64,
    pub stopping_iteration: u64,
}

/// `η = ε_f/(2 c2)`, then `R(η)`, `c1`, and `ε′ = ε_f/(2(β‖C‖₁ + τ c1))`.
pub fn prescribe_functional(
    inst: &ProblemInstance,
    tau: f64,
    epsilon_f: f64,
) -> Result<FunctionalPrescription> {
    require_square(inst)?;
    require_positive("tau", tau)?;
    require_positive("epsilon_f", epsilon_f)?;
    let n = inst.rows();
    let beta = inst.b.total();
    let c2 = 2.0 * beta * (n as f64).ln();
    if c2 <= 0.0 {
        return Err(Error::Degenerate("c2 vanishes for n = 1".into()));
    }
    let eta = epsilon_f / (2.0 * c2);
    let r = compute_r(&inst.a, &inst.b, &inst.cost, eta)?;
    let (c1, _) = compute_c1_c2(n, tau, eta, r, beta);
    let c_l1 = inst.cost.l1_norm();
    let eps_prime = epsilon_f / (2.0 * (beta * c_l1 + tau * c1));
    let k = stopping_iteration(epsilon_f, tau, r, c1, c2, c_l1, beta)?;
    Ok(FunctionalPrescription {
        epsilon_f,
        tau,
        eta,
        eps_prime,
        r,
        c1,
        c2,
        stopping_iteration: k,
    })
}

/// Smallest integer `k ≥ 2(1 + 2c2τ/ε_f)(log 16τR + log c2(β‖C‖₁+τc1) + 2 log(1/ε_f)) + 3`.
pub fn stopping_iteration(
    epsilon_f: f64,
    tau: f64,
    r: f64,
    c1: f64,
    c2: f64,
    c_l1: f64,
    beta: f64,
) -> Result<u64> {
    require_positive("epsilon_f", epsilon_f)?;
    let logs =
        (16.0 * tau * r).ln() + (c2 * (beta * c_l1 + tau * c1)).ln() + 2.0 * (1.0 / epsilon_f).ln();
    let rhs = 2.0 * (1.0 + 2.0 * c2 * tau / epsilon_f) * logs + 3.0;
    if !rhs.is_finite() {
        return Err(Error::Numeric(format!(
            "stopping iteration is not finite ({rhs})"
        )));
    }
    Ok(rhs.max(0.0).ceil() as u64)
}

/// `(4τ/η) R ρ^{(k−1)/2 − 1}`, the bound on `‖log(Tᵏ/T*)‖∞`.
pub fn geometric_term(k: usize, tau: f64, eta: f64, r: f64) -> f64 {
    let exponent = (k as f64 - 1.0) / 2.0 - 1.0;
    4.0 * tau / eta * r * contraction(tau, eta).powf(exponent)
}

/// `γ (geometric_term(k) + ‖u*‖∞/τ)` for even `k`.
pub fn marginal_gap_bound_general(
    k: usize,
    tau: f64,
    eta: f64,
    r: f64,
    gamma: f64,
    u_star_inf: f64,
) -> Result<f64> {
    require_even(k)?;
    Ok(gamma * (geometric_term(k, tau, eta, r) + u_star_inf / tau))
}

/// Bound on `‖log bᵏ − log b‖∞` for odd `k`.
pub fn log_col_gap_bound(k: usize, tau: f64, eta: f64, r: f64) -> Result<f64> {
    require_odd(k)?;
    Ok(geometric_term(k, tau, eta, r))
}

/// `U = ‖C‖∞ + η log(a_max/a_min)`.
pub fn compute_u(c: &CostMatrix, eta: f64, a: &DiscreteMeasure) -> Result<f64> {
    a.require_positive()?;
    Ok(c.inf_norm() + eta * a.log_spread())
}

/// `geometric_term(k) + U/(τ+η)` for even `k`.
pub fn marginal_gap_bound_simplex(k: usize, tau: f64, eta: f64, r: f64, u: f64) -> Result<f64> {
    require_even(k)?;
    Ok(geometric_term(k, tau, eta, r) + marginal_gap_asymptote(tau, eta, u))
}

pub fn marginal_gap_asymptote(tau: f64, eta: f64, u: f64) -> f64 {
    u / (tau + eta)
}

/// `c3 = 2 log n + 1 − max(H(a), H(b))` with `H(x) = −Σ xᵢ(log xᵢ − 1)`.
pub fn compute_c3(n: usize, a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    let ha = vector_entropy(a.as_slice())?;
    let hb = vector_entropy(b.as_slice())?;
    Ok(2.0 * (n as f64).ln() + 1.0 - ha.max(hb))
}

/// `(2n‖C‖∞ + ‖C‖₁) geometric_term(k) + η c3 + 2n‖C‖∞ U/τ` for even `k`.
#[allow(clippy::too_many_arguments)]
pub fn ot_gap_bound(
    k: usize,
    tau: f64,
    eta: f64,
    r: f64,
    u: f64,
    c: &CostMatrix,
    n: usize,
    c3: f64,
) -> Result<f64> {
    require_even(k)?;
    let weight = 2.0 * n as f64 * c.inf_norm() + c.l1_norm();
    Ok(weight * geometric_term(k, tau, eta, r) + ot_gap_asymptote(tau, eta, u, c, n, c3))
}

pub fn ot_gap_asymptote(tau: f64, eta: f64, u: f64, c: &CostMatrix, n: usize, c3: f64) -> f64 {
    eta * c3 + 2.0 * n as f64 * c.inf_norm() * u / tau
}

/// `‖u*‖∞ ≤ ρ (‖C‖∞ + η log(a_max/a_min))` for simplex marginals.
pub fn simplex_dual_cap(c: &CostMatrix, tau: f64, eta: f64, a: &DiscreteMeasure) -> Result<f64> {
    Ok(contraction(tau, eta) * compute_u(c, eta, a)?)
}

/// `max(‖u*‖∞, ‖v*‖∞) ≤ 2(τ+η)R`.
pub fn general_dual_cap(tau: f64, eta: f64, r: f64) -> f64 {
    2.0 * (tau + eta) * r
}

/// `max(‖uᵏ − u*‖∞, ‖vᵏ − v*‖∞) ≤ 2τR ρ^{k/2 − 1}`.
pub fn dual_gap_bound(k: usize, tau: f64, eta: f64, r: f64) -> f64 {
    2.0 * tau * r * contraction(tau, eta).powf(k as f64 / 2.0 - 1.0)
}

/// `‖T̂1 − a‖₁ ≤ n‖C‖∞/τ` for the unregularized minimizer.
pub fn unregularized_marginal_bound(n: usize, c: &CostMatrix, tau: f64) -> f64 {
    n as f64 * c.inf_norm() / tau
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalBranch {
    /// `ε_c ≤ 2 log(a_max/a_min)`: `ε′ = ε_c/2`, any `η > 0`.
    Tight,
    /// Otherwise: `ε′ = 2/ε_c` and `η` capped by `eta_max`.
    Loose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalPrescription {
    pub epsilon_c: f64,
    pub eta: f64,
    pub tau: f64,
    pub eps_prime: f64,
    pub branch: MarginalBranch,
    /// Upper limit on `η` for the loose branch; `None` when unrestricted.
    pub eta_max: Option<f64>,
}

/// `τ = 2‖C‖∞/ε_c + η(2 log(a_max/a_min)/ε_c − 1)` with the branch-dependent `ε′`.
///
/// The loose branch's `ε′ = 2/ε_c` is applied as stated even though `ε_c/2`
/// looks like the intended value.
pub fn prescribe_marginal(
    inst: &ProblemInstance,
    eta: f64,
    epsilon_c: f64,
) -> Result<MarginalPrescription> {
    require_simplex(inst)?;
    require_positive("eta", eta)?;
    require_positive("epsilon_c", epsilon_c)?;
    let spread = inst.a.log_spread();
    let cinf = inst.cost.inf_norm();
    let tau = 2.0 * cinf / epsilon_c + eta * (2.0 * spread / epsilon_c - 1.0);
    let (branch, eps_prime, eta_max) = if epsilon_c <= 2.0 * spread {
        (MarginalBranch::Tight, epsilon_c / 2.0, None)
    } else {
        let cap = 2.0 * cinf / (epsilon_c * (1.0 - 2.0 * spread / epsilon_c));
        (MarginalBranch::Loose, 2.0 / epsilon_c, Some(cap))
    };
    if let Some(cap) = eta_max {
        if eta > cap {
            return Err(Error::InvalidParameter(format!(
                "eta {eta} exceeds the admissible maximum {cap} for epsilon_c {epsilon_c}"
            )));
        }
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "prescribed tau {tau} is not positive"
        )));
    }
    Ok(MarginalPrescription {
        epsilon_c,
        eta,
        tau,
        eps_prime,
        branch,
        eta_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtPrescription {
    pub epsilon_d: f64,
    pub eps_prime: f64,
    pub eta: f64,
    pub tau: f64,
    pub u: f64,
    pub c3: f64,
}

/// `ε′ = ε_d/(3(2n‖C‖∞+‖C‖₁))`, `η = ε_d/(3 c3)`, `τ = 6n‖C‖∞ U(η)/ε_d`.
pub fn prescribe_ot(inst: &ProblemInstance, epsilon_d: f64) -> Result<OtPrescription> {
    require_simplex(inst)?;
    require_positive("epsilon_d", epsilon_d)?;
    let n = inst.rows();
    let c = &inst.cost;
    let c3 = compute_c3(n, &inst.a, &inst.b)?;
    if !(c3 > 0.0) {
        return Err(Error::Degenerate(format!("c3 = {c3} is not positive")));
    }
    let eps_prime = epsilon_d / (3.0 * (2.0 * n as f64 * c.inf_norm() + c.l1_norm()));
    let eta = epsilon_d / (3.0 * c3);
    let u = compute_u(c, eta, &inst.a)?;
    let tau = 6.0 * n as f64 * c.inf_norm() * u / epsilon_d;
    Ok(OtPrescription {
        epsilon_d,
        eps_prime,
        eta,
        tau,
        u,
        c3,
    })
}

fn require_square(inst: &ProblemInstance) -> Result<()> {
    if inst.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: "bounds need a square problem",
            expected: inst.rows(),
            found: inst.cols(),
        })
    }
}

fn require_simplex(inst: &ProblemInstance) -> Result<()> {
    require_square(inst)?;
    inst.a.require_simplex("a")?;
    inst.b.require_simplex("b")
}

/// Where a `‖u*‖∞` value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualNormSource {
    Reference,
    GeneralCap,
    SimplexCap,
}

/// Bound families evaluated per iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `‖log(Tᵏ/T*)‖∞` (even k).
    LogRatio,
    /// `‖aᵏ − a‖∞` with a `‖u*‖∞` input (even k).
    MarginalGeneral,
    /// `‖log bᵏ − log b‖∞` (odd k).
    LogColumnGap,
    /// `‖aᵏ − a‖∞` for simplex marginals (even k).
    MarginalSimplex,
    /// `⟨C,Y⟩ − ⟨C,T^OT⟩` after rounding (even k).
    OtGap,
    /// `max(‖uᵏ−u*‖∞, ‖vᵏ−v*‖∞)` (any k).
    DualGap,
}

impl BoundKind {
    pub const ALL: [BoundKind; 6] = [
        BoundKind::LogRatio,
        BoundKind::MarginalGeneral,
        BoundKind::LogColumnGap,
        BoundKind::MarginalSimplex,
        BoundKind::OtGap,
        BoundKind::DualGap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::LogRatio => "log-ratio",
            BoundKind::MarginalGeneral => "marginal-general",
            BoundKind::LogColumnGap => "log-column-gap",
            BoundKind::MarginalSimplex => "marginal-simplex",
            BoundKind::OtGap => "ot-gap",
            BoundKind::DualGap => "dual-gap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        BoundKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    fn needs_simplex(self) -> bool {
        matches!(self, BoundKind::MarginalSimplex | BoundKind::OtGap)
    }

    fn parity_ok(self, k: usize) -> bool {
        match self {
            BoundKind::LogColumnGap => k % 2 == 1,
            BoundKind::DualGap => true,
            _ => k.is_multiple_of(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub bound: BoundKind,
    pub k: usize,
    pub value: f64,
}

/// Every constant for one `(instance, τ, η)` plus per-iterate bound values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub tau: f64,
    pub eta: f64,
    pub r: f64,
    /// `None` when `a` has a zero entry.
    pub u: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    /// Only defined for simplex marginals.
    pub c3: Option<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dual_norm_cap: f64,
    pub simplex_dual_cap: Option<f64>,
    pub u_star_inf: f64,
    pub u_star_source: DualNormSource,
    pub marginal_asymptote: Option<f64>,
    pub ot_asymptote: Option<f64>,
    pub unregularized_bound: f64,
    pub simplex: bool,
    pub records: Vec<BoundRecord>,
}

impl BoundReport {
    /// Evaluates the constants. `u_star_inf` overrides the a-priori cap; without
    /// it the simplex cap is used when available, else `2(τ+η)R`.
    pub fn new(
        inst: &ProblemInstance,
        tau: f64,
        eta: f64,
        u_star_inf: Option<f64>,
    ) -> Result<Self> {
        require_square(inst)?;
        require_positive("tau", tau)?;
        require_positive("eta", eta)?;
        let n = inst.rows();
        let (alpha, beta) = (inst.a.total(), inst.b.total());
        let r = compute_r(&inst.a, &inst.b, &inst.cost, eta)?;
        let (c1, c2) = compute_c1_c2(n, tau, eta, r, beta);
        let simplex = inst.a.is_simplex() && inst.b.is_simplex();
        let u = compute_u(&inst.cost, eta, &inst.a).ok();
        let c3 = if simplex {
            Some(compute_c3(n, &inst.a, &inst.b)?)
        } else {
            None
        };
        let cap = general_dual_cap(tau, eta, r);
        let scap = if simplex {
            Some(simplex_dual_cap(&inst.cost, tau, eta, &inst.a)?)
        } else {
            None
        };
        let (u_star_inf, u_star_source) = match (u_star_inf, scap) {
            (Some(x), _) => (x, DualNormSource::Reference),
            (None, Some(s)) => (s, DualNormSource::SimplexCap),
            (None, None) => (cap, DualNormSource::GeneralCap),
        };
        let marginal_asymptote = u
            .filter(|_| simplex)
            .map(|u| marginal_gap_asymptote(tau, eta, u));
        let ot_asymptote = match (u, c3) {
            (Some(u), Some(c3)) if simplex => {
                Some(ot_gap_asymptote(tau, eta, u, &inst.cost, n, c3))
            }
            _ => None,
        };
        Ok(Self {
            n,
            tau,
            eta,
            r,
            u,
            c1,
            c2,
            c3,
            gamma: alpha.max(beta),
            alpha,
            beta,
            dual_norm_cap: cap,
            simplex_dual_cap: scap,
            u_star_inf,
            u_star_source,
            marginal_asymptote,
            ot_asymptote,
            unregularized_bound: unregularized_marginal_bound(n, &inst.cost, tau),
            simplex,
            records: Vec::new(),
        })
    }

    /// Value of one bound at iterate `k`, or a parity / simplex error.
    pub fn evaluate(&self, inst: &ProblemInstance, kind: BoundKind, k: usize) -> Result<f64> {
        let (tau, eta, r) = (self.tau, self.eta, self.r);
        if kind.needs_simplex() && !self.simplex {
            inst.a.require_simplex("a")?;
            inst.b.require_simplex("b")?;
        }
        match kind {
            BoundKind::LogRatio => {
                require_even(k)?;
                Ok(geometric_term(k, tau, eta, r))
            }
            BoundKind::MarginalGeneral => {
                marginal_gap_bound_general(k, tau, eta, r, self.gamma, self.u_star_inf)
            }
            BoundKind::LogColumnGap => log_col_gap_bound(k, tau, eta, r),
            BoundKind::MarginalSimplex => {
                let u = self
                    .u
                    .ok_or_else(|| Error::Degenerate("U undefined".into()))?;
                marginal_gap_bound_simplex(k, tau, eta, r, u)
            }
            BoundKind::OtGap => {
                let u = self
                    .u
                    .ok_or_else(|| Error::Degenerate("U undefined".into()))?;
                let c3 = self
                    .c3
                    .ok_or_else(|| Error::Degenerate("c3 undefined".into()))?;
                ot_gap_bound(k, tau, eta, r, u, &inst.cost, self.n, c3)
            }
            BoundKind::DualGap => Ok(dual_gap_bound(k, tau, eta, r)),
        }
    }

    /// Appends one record per applicable `(kind, k)`: kinds whose parity does
    /// not match `k`, or that need simplex marginals when these are not, are
    /// skipped.
    pub fn add_iterations(
        &mut self,
        inst: &ProblemInstance,
        kinds: &[BoundKind],
        ks: &[usize],
    ) -> Result<()> {
        for &k in ks {
            for &kind in kinds {
                if !kind.parity_ok(k) || (kind.needs_simplex() && !self.simplex) {
                    continue;
                }
                let value = self.evaluate(inst, kind, k)?;
                self.records.push(BoundRecord {
                    bound: kind,
                    k,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Wide CSV: one row per `k`, one column per bound kind, blank where the
    /// bound does not apply. Rows line up with a solver trace over the same `k`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut ks: Vec<usize> = self.records.iter().map(|r| r.k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["iter".to_string()];
        header.extend(BoundKind::ALL.iter().map(|k| k.as_str().to_string()));
        out.write_record(&header)?;
        for k in ks {
            let mut row = vec![k.to_string()];
            for kind in BoundKind::ALL {
                let cell = self
                    .records
                    .iter()
                    .find(|r| r.k == k && r.bound == kind)
                    .map(|r| fmt_f64(r.value))
                    .unwrap_or_default();
                row.push(cell);
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}
