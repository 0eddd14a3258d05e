//! Rounding an arbitrary nonnegative matrix onto the transport polytope.

use ndarray::{Array1, Axis};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::plan::TransportPlan;

/// Errors below this ℓ1 size skip the rank-one correction.
pub const CORRECTION_TOL: f64 = 1e-14;

/// Relative tolerance on `|Σa − Σb|`.
pub const BALANCE_TOL: f64 = 1e-10;

fn shrink_factors(sums: Array1<f64>, target: &Array1<f64>) -> Array1<f64> {
    Array1::from_iter(sums.iter().zip(target).map(
        |(&s, &t)| {
            if s > 0.0 {
                (t / s).min(1.0)
            } else {
                1.0
            }
        },
    ))
}

/// Scales rows then columns down to fit `a` and `b`, then adds the rank-one
/// correction `err_r err_cᵀ / ‖err_r‖₁`. The result has marginals `a`, `b` and
/// stays within `2(‖X1 − a‖₁ + ‖Xᵀ1 − b‖₁)` of `X` in ℓ1.
pub fn round_to_polytope(
    x: &TransportPlan,
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
) -> Result<TransportPlan> {
    if a.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            context: "rounding: a vs rows",
            expected: x.rows(),
            found: a.len(),
        });
    }
    if b.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            context: "rounding: b vs cols",
            expected: x.cols(),
            found: b.len(),
        });
    }
    let (alpha, beta) = (a.total(), b.total());
    if (alpha - beta).abs() > BALANCE_TOL * alpha.max(beta).max(f64::MIN_POSITIVE) {
        return Err(Error::Unbalanced { alpha, beta });
    }

    let mut y = x.entries().clone();
    let p = shrink_factors(y.sum_axis(Axis(1)), a.weights());
    for (mut row, pi) in y.rows_mut().into_iter().zip(&p) {
        row *= *pi;
    }
    let q = shrink_factors(y.sum_axis(Axis(0)), b.weights());
    for mut row in y.rows_mut() {
        row *= &q;
    }

    let err_r = a.weights() - &y.sum_axis(Axis(1));
    let err_c = b.weights() - &y.sum_axis(Axis(0));
    // Both error vectors are nonnegative after the shrink steps.
    let norm_r: f64 = err_r.iter().map(|e| e.max(0.0)).sum();
    if norm_r > CORRECTION_TOL {
        for ((i, j), yij) in y.indexed_iter_mut() {
            *yij += err_r[i].max(0.0) * err_c[j].max(0.0) / norm_r;
        }
    }
    Ok(TransportPlan::from_trusted(y))
}
