use ndarray::Array2;
use proptest::prelude::*;
use srot_core::divergence::{entropy, entropy_upper_bound, kl_divergence};
use srot_core::rounding::round_to_polytope;
use srot_core::solvers::{dual_objective, pot_column_min, MarginalMode, ScalingSolver};
use srot_core::{CostMatrix, DiscreteMeasure, ProblemInstance, TransportPlan};

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..5.0, n)
}

fn simplex(n: usize) -> impl Strategy<Value = DiscreteMeasure> {
    weights(n).prop_map(|w| DiscreteMeasure::normalized(w).unwrap())
}

fn matrix(n: usize, m: usize, lo: f64, hi: f64) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(lo..hi, n * m)
        .prop_map(move |v| Array2::from_shape_vec((n, m), v).unwrap())
}

/// Random square instance with simplex marginals.
fn instance(max_n: usize) -> impl Strategy<Value = ProblemInstance> {
    (2..=max_n).prop_flat_map(|n| {
        (matrix(n, n, 0.0, 10.0), simplex(n), simplex(n))
            .prop_map(|(c, a, b)| ProblemInstance::new(CostMatrix::new(c).unwrap(), a, b).unwrap())
    })
}

proptest! {
    #[test]
    fn kl_is_nonnegative_and_zero_on_the_diagonal(
        (x, y) in (1usize..12).prop_flat_map(|n| (prop::collection::vec(0.0f64..5.0, n), weights(n)))
    ) {
        prop_assert!(kl_divergence(&x, &y).unwrap() >= -1e-12);
        prop_assert!(kl_divergence(&y, &y).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn entropy_below_its_maximum(t in (1usize..8).prop_flat_map(|n| matrix(n, n, 0.0, 2.0))) {
        let n = t.nrows();
        let plan = TransportPlan::new(t).unwrap();
        let total = plan.total();
        prop_assert!(entropy(&plan) <= entropy_upper_bound(total, n) + 1e-12 * (1.0 + total));
    }

    #[test]
    fn rounding_is_feasible_and_close(
        (x, a, b) in (1usize..7, 1usize..7).prop_flat_map(|(n, m)| (matrix(n, m, 0.0, 0.5), simplex(n), simplex(m)))
    ) {
        let x = TransportPlan::new(x).unwrap();
        let y = round_to_polytope(&x, &a, &b).unwrap();
        prop_assert!(y.entries().iter().all(|&v| v >= 0.0));
        let l1 = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(s, t)| (s - t).abs()).sum::<f64>();
        let rows = y.row_marginal();
        let cols = y.col_marginal();
        prop_assert!(rows.iter().zip(a.as_slice()).all(|(s, t)| (s - t).abs() <= 1e-12));
        prop_assert!(cols.iter().zip(b.as_slice()).all(|(s, t)| (s - t).abs() <= 1e-12));
        let err = l1(x.row_marginal().as_slice().unwrap(), a.as_slice())
            + l1(x.col_marginal().as_slice().unwrap(), b.as_slice());
        prop_assert!(y.l1_distance(&x) <= 2.0 * err + 1e-12);
    }

    #[test]
    fn dual_objective_never_increases(
        inst in instance(6),
        tau in 0.05f64..50.0,
        eta in 0.05f64..2.0,
    ) {
        let mut s = ScalingSolver::new(&inst, eta, MarginalMode::Kl { tau }, MarginalMode::Hard).unwrap();
        let mut prev = dual_objective(&inst, s.potentials(), tau, eta).unwrap();
        for _ in 0..30 {
            s.step().unwrap();
            let h = dual_objective(&inst, s.potentials(), tau, eta).unwrap();
            prop_assert!(h <= prev + 1e-10 * (1.0 + prev.abs()), "h rose from {} to {}", prev, h);
            prev = h;
        }
    }

    #[test]
    fn column_updates_restore_b(inst in instance(8), tau in 0.05f64..1e4, eta in 0.01f64..2.0) {
        let mut s = ScalingSolver::new(&inst, eta, MarginalMode::Kl { tau }, MarginalMode::Hard).unwrap();
        for _ in 0..10 {
            s.step().unwrap();
            if s.iteration().is_multiple_of(2) {
                let cols = s.plan().unwrap().col_marginal();
                let gap = cols.iter().zip(inst.b.as_slice()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                prop_assert!(gap <= 1e-10 * inst.b.max());
            }
        }
    }

    #[test]
    fn column_min_matches_assignment_enumeration(
        (c, b) in (1usize..5, 1usize..5).prop_flat_map(|(n, m)| (matrix(n, m, 0.0, 10.0), weights(m)))
    ) {
        let (n, m) = c.dim();
        let a = DiscreteMeasure::uniform(n);
        let b = DiscreteMeasure::new(b).unwrap();
        let inst = ProblemInstance::new(CostMatrix::new(c.clone()).unwrap(), a, b.clone()).unwrap();
        let (plan, value) = pot_column_min(&inst);
        // Every map from columns to rows is a feasible vertex; take the cheapest.
        let mut best = f64::INFINITY;
        for code in 0..n.pow(m as u32) {
            let mut rest = code;
            let mut total = 0.0;
            for j in 0..m {
                total += b.as_slice()[j] * c[[rest % n, j]];
                rest /= n;
            }
            best = best.min(total);
        }
        prop_assert!((value - best).abs() <= 1e-12 * (1.0 + best));
        prop_assert!((plan.cost(&inst.cost).unwrap() - value).abs() <= 1e-12 * (1.0 + value));
    }
}
