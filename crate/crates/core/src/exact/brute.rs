use crate::cost::CostMatrix;
use crate::error::{Error, Result};

pub const BRUTE_FORCE_MAX_N: usize = 8;

/// `(1/n) min_σ Σ_i C_{i,σ(i)}` by enumerating all permutations (Heap's
/// algorithm). This is the optimal transport value for uniform marginals.
pub fn brute_force_ot_uniform(c: &CostMatrix) -> Result<f64> {
    let n = c.rows();
    if c.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "brute force needs a square cost",
            expected: n,
            found: c.cols(),
        });
    }
    if n == 0 {
        return Err(Error::Degenerate("empty cost matrix".into()));
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| c.get(i, j)).sum::<f64>();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = score(&perm);
    let mut counters = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            let swap_with = if i % 2 == 0 { 0 } else { counters[i] };
            perm.swap(swap_with, i);
            best = best.min(score(&perm));
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(best / n as f64)
}
