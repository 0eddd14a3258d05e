//! KL divergence, entropy and the logarithmic mean-value inequalities.

use crate::error::{Error, Result};
use crate::plan::TransportPlan;

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Generalized KL divergence `Σ xᵢ log(xᵢ/yᵢ) − xᵢ + yᵢ` with `0·log 0 = 0`.
pub fn kl_divergence(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "kl_divergence",
            expected: x.len(),
            found: y.len(),
        });
    }
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        if !(yi > 0.0) {
            return Err(Error::NonPositive {
                index: i,
                value: yi,
            });
        }
        if xi < 0.0 {
            return Err(Error::NegativeEntry {
                index: i,
                value: xi,
            });
        }
        let log_term = if xi == 0.0 { 0.0 } else { xi * (xi / yi).ln() };
        acc += log_term - xi + yi;
    }
    Ok(acc)
}

/// `H(T) = −Σ Tᵢⱼ (log Tᵢⱼ − 1)`; zero entries contribute nothing.
pub fn entropy(t: &TransportPlan) -> f64 {
    t.entries().iter().map(|&x| x - xlogx(x)).sum()
}

/// Same formula as [`entropy`] applied to a vector.
pub fn vector_entropy(x: &[f64]) -> Result<f64> {
    if let Some(index) = x.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeEntry {
            index,
            value: x[index],
        });
    }
    Ok(x.iter().map(|&v| v - xlogx(v)).sum())
}

/// Upper bound `2t log n + t − t log t` on the entropy of an n×n plan with
/// total mass `t`.
pub fn entropy_upper_bound(total: f64, n: usize) -> f64 {
    2.0 * total * (n as f64).ln() + total - xlogx(total)
}

/// Checks `log x − log y ≥ (x − y)/b` for `0 < y < x < b`.
pub fn log_mean_value_check(x: f64, y: f64, b: f64) -> Result<bool> {
    if !(0.0 < y && y < x && x < b) {
        return Err(Error::Precondition(format!(
            "need 0 < y < x < b, got x={x}, y={y}, b={b}"
        )));
    }
    Ok(x.ln() - y.ln() >= (x - y) / b)
}

/// Maximum-norm form: `‖log x − log y‖∞ ≥ ‖x − y‖∞ / b` for entries in `(0, b)`.
pub fn log_mean_value_max_norm_check(x: &[f64], y: &[f64], b: f64) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "log_mean_value_max_norm_check",
            expected: x.len(),
            found: y.len(),
        });
    }
    if let Some(v) = x.iter().chain(y).find(|&&v| !(v > 0.0 && v < b)) {
        return Err(Error::Precondition(format!("entry {v} outside (0, {b})")));
    }
    let log_gap = x
        .iter()
        .zip(y)
        .map(|(a, c)| (a.ln() - c.ln()).abs())
        .fold(0.0, f64::max);
    let gap = x
        .iter()
        .zip(y)
        .map(|(a, c)| (a - c).abs())
        .fold(0.0, f64::max);
    Ok(log_gap >= gap / b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        let v = kl_divergence(&[1.0, 1.0], &[e, e]).unwrap();
        assert!((v - (2.0 * e - 4.0)).abs() < 1e-15);
        assert!((v - 1.436563657).abs() < 1e-9);
        assert_eq!(kl_divergence(&[0.0], &[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn kl_errors() {
        assert!(matches!(
            kl_divergence(&[1.0], &[0.0]),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            kl_divergence(&[-1.0], &[1.0]),
            Err(Error::NegativeEntry { .. })
        ));
        assert!(matches!(
            kl_divergence(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let one = TransportPlan::new(array![[1.0]]).unwrap();
        assert_eq!(entropy(&one), 1.0);
        assert_eq!(entropy(&TransportPlan::zeros(3, 3)), 0.0);
        let quarter = TransportPlan::new(array![[0.25, 0.25], [0.25, 0.25]]).unwrap();
        assert!((entropy(&quarter) - (1.0 + 4f64.ln())).abs() < 1e-15);
        assert!((entropy(&quarter) - 2.386294).abs() < 1e-6);
    }

    #[test]
    fn uniform_vector_entropy() {
        let n = 7;
        let x = vec![1.0 / n as f64; n];
        let h = vector_entropy(&x).unwrap();
        assert!((h - ((n as f64).ln() + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn mean_value_examples() {
        assert!(log_mean_value_check(2.0, 1.0, 3.0).unwrap());
        assert!(log_mean_value_check(1.0 + 1e-9, 1.0, 2.0).unwrap());
        assert!(log_mean_value_check(1.0, 2.0, 3.0).is_err());
        assert!(log_mean_value_max_norm_check(&[0.5, 1.0], &[0.4, 1.5], 2.0).unwrap());
        assert!(log_mean_value_max_norm_check(&[0.5], &[2.0], 2.0).is_err());
    }
}
