//! Acceptance suite. Each test prints one `PASS`/`FAIL` line with the measured
//! quantity, its tolerance and the runtime against its budget. Tests hold a
//! shared lock so wall-clock budgets are not distorted by each other.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use srot_core::bounds::{
    compute_r, contraction, dual_gap_bound, general_dual_cap, simplex_dual_cap,
};
use srot_core::divergence::{log_mean_value_check, log_mean_value_max_norm_check};
use srot_core::exact::{brute_force_ot_uniform, solve_ot_exact, LpStatus};
use srot_core::harness::{run_experiment, write_result, ExperimentId, ExperimentSpec};
use srot_core::rounding::round_to_polytope;
use srot_core::solvers::{sr_sinkhorn, MarginalMode, ScalingSolver, SolverConfig};
use srot_core::{
    generate_instance, CostMatrix, DiscreteMeasure, GeneratorParams, ProblemInstance, TransportPlan,
};

static SERIAL: Mutex<()> = Mutex::new(());

struct Criterion {
    id: &'static str,
    budget: Duration,
    start: Instant,
}

impl Criterion {
    fn start(id: &'static str, budget_secs: u64) -> Self {
        Self {
            id,
            budget: Duration::from_secs(budget_secs),
            start: Instant::now(),
        }
    }

    /// Prints the verdict line and panics on failure.
    fn finish(self, ok: bool, detail: String) {
        let elapsed = self.start.elapsed();
        let in_time = elapsed < self.budget;
        let pass = ok && in_time;
        let line = format!(
            "{} {}: {}; runtime {:.2}s (budget {}s{})",
            if pass { "PASS" } else { "FAIL" },
            self.id,
            detail,
            elapsed.as_secs_f64(),
            self.budget.as_secs(),
            if in_time { "" } else { ", exceeded" }
        );
        // Written past the test harness's capture so every verdict shows.
        #[allow(clippy::explicit_write)]
        writeln!(std::io::stdout(), "{line}").unwrap();
        assert!(pass, "{line}");
    }
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

#[test]
fn c01_constraint_restoration() {
    let _g = lock();
    let c = Criterion::start("C1 constraint restoration", 5);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 0..10 {
        let inst = generate_instance(&GeneratorParams::small_cost(50), seed).unwrap();
        let bmax = inst.b.max();
        let mut s = ScalingSolver::new(
            &inst,
            1e-2,
            MarginalMode::Kl { tau: 1e6 },
            MarginalMode::Hard,
        )
        .unwrap();
        for _ in 0..2000 {
            s.step().unwrap();
            if s.iteration().is_multiple_of(2) {
                let cols = s.plan().unwrap().col_marginal();
                let gap = cols
                    .iter()
                    .zip(inst.b.weights())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                worst = worst.max(gap / bmax);
                checked += 1;
            }
        }
    }
    c.finish(
        worst <= 1e-10,
        format!("max relative column gap {worst:.3e} over {checked} column updates (tol 1e-10)"),
    );
}

#[test]
fn c02_marginal_gap_certification() {
    let _g = lock();
    let c = Criterion::start("C2 marginal-gap certification", 30);
    let res = run_experiment(&ExperimentSpec::default_for(ExperimentId::MarginalGap)).unwrap();
    let ratio = res.verdict_f64("worst_final_ratio_to_asymptote").unwrap();
    c.finish(
        res.bound_violations == 0 && ratio <= 2.0,
        format!(
            "{} violations (need 0); final gap / asymptote = {ratio:.4} (need <= 2)",
            res.bound_violations
        ),
    );
}

#[test]
fn c03_ot_gap_certification() {
    let _g = lock();
    let c = Criterion::start("C3 OT-gap certification", 60);
    let res = run_experiment(&ExperimentSpec::default_for(ExperimentId::OtGap)).unwrap();
    let lp = res.verdicts["lp_optimality_violations"].as_u64().unwrap();
    let rel = res
        .verdict_f64("worst_final_relative_projected_gap")
        .unwrap();
    c.finish(
        res.bound_violations == 0 && lp == 0 && rel <= 1e-3,
        format!(
            "{} violations incl. {lp} below -1e-9 (need 0); final projected gap / OT = {rel:.3e} (need <= 1e-3)",
            res.bound_violations
        ),
    );
}

#[test]
fn c04_stopping_bound_validity() {
    let _g = lock();
    let c = Criterion::start("C4 stopping-bound validity", 600);
    let res = run_experiment(&ExperimentSpec::default_for(ExperimentId::IterationBounds)).unwrap();
    let censored = res.verdicts["censored_cells"].as_u64().unwrap();
    let cells = res.verdicts["cells"].as_u64().unwrap();
    let min_ratio = res.verdict_f64("min_ratio").unwrap();
    c.finish(
        res.bound_violations == 0 && censored == 0 && cells == 60,
        format!(
            "{} cells with k_f < k_c, {censored} censored of {cells} (need 0, 0 of 60); min k_f/k_c = {min_ratio:.3}",
            res.bound_violations
        ),
    );
}

#[test]
fn c05_geometric_dual_convergence() {
    let _g = lock();
    let c = Criterion::start("C5 geometric dual convergence", 30);
    let (tau, eta) = (0.1, 0.1);
    let rho = contraction(tau, eta);
    let required = 0.9 * rho.ln() / 2.0;
    // Iterates are recorded while the bound is above what double precision
    // can resolve against the reference potentials.
    let floor = 1e-12;
    let mut violations = 0;
    let mut recorded = 0;
    let mut worst_slope = f64::NEG_INFINITY;
    for seed in 0..5 {
        let inst = generate_instance(&GeneratorParams::small_cost(50), seed).unwrap();
        // Stopping once an increment is exactly zero returns the same bits
        // as running all 1e5 half-iterations: the iterate is a fixed point.
        let cfg = SolverConfig::new(tau, eta, 100_000)
            .trace_every(0)
            .convergence_tol(f64::MIN_POSITIVE);
        let reference = sr_sinkhorn(&inst, &cfg).unwrap();
        let r = compute_r(&inst.a, &inst.b, &inst.cost, eta).unwrap();
        let mut s =
            ScalingSolver::new(&inst, eta, MarginalMode::Kl { tau }, MarginalMode::Hard).unwrap();
        let (mut ks, mut logs) = (Vec::new(), Vec::new());
        for _ in 0..200 {
            s.step().unwrap();
            let k = s.iteration();
            let gap = s.potentials().distance(&reference.potentials);
            let bound = dual_gap_bound(k, tau, eta, r);
            if bound < floor {
                break;
            }
            recorded += 1;
            if gap > bound {
                violations += 1;
            }
            if gap > floor {
                ks.push(k as f64);
                logs.push(gap.ln());
            }
        }
        worst_slope = worst_slope.max(slope(&ks, &logs));
    }
    c.finish(
        violations == 0 && worst_slope <= required,
        format!(
            "{violations} violations over {recorded} recorded iterates with bound >= {floor:e} (need 0); \
             worst slope {worst_slope:.4} (need <= {required:.4})"
        ),
    );
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn random_simplex(rng: &mut ChaCha20Rng, n: usize) -> DiscreteMeasure {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    DiscreteMeasure::normalized(w).unwrap()
}

#[test]
fn c06_rounding_guarantee() {
    let _g = lock();
    let c = Criterion::start("C6 rounding guarantee", 10);
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut failures = 0;
    let (mut worst_feas, mut worst_slack) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=8);
        let a = random_simplex(&mut rng, n);
        let b = random_simplex(&mut rng, m);
        let scale = rng.random_range(0.1..3.0) / (n * m) as f64;
        let x = Array2::from_shape_fn((n, m), |_| {
            if rng.random::<f64>() < 0.2 {
                0.0
            } else {
                scale * rng.random::<f64>()
            }
        });
        let x = TransportPlan::new(x).unwrap();
        let y = round_to_polytope(&x, &a, &b).unwrap();
        let l1 = |p: &Array1<f64>, q: &Array1<f64>| {
            p.iter().zip(q).map(|(s, t)| (s - t).abs()).sum::<f64>()
        };
        let inf = |p: &Array1<f64>, q: &Array1<f64>| {
            p.iter()
                .zip(q)
                .fold(0.0f64, |acc, (s, t)| acc.max((s - t).abs()))
        };
        let feas = inf(&y.row_marginal(), a.weights()).max(inf(&y.col_marginal(), b.weights()));
        let nonneg = y.entries().iter().all(|&v| v >= 0.0);
        let rhs =
            2.0 * (l1(&x.row_marginal(), a.weights()) + l1(&x.col_marginal(), b.weights())) + 1e-9;
        let dist = y.l1_distance(&x);
        worst_feas = worst_feas.max(feas);
        worst_slack = worst_slack.max(dist - rhs);
        if !(nonneg && feas <= 1e-10 && dist <= rhs) {
            failures += 1;
        }
    }
    c.finish(
        failures == 0,
        format!("{failures} failures of 10000 (need 0); worst feasibility {worst_feas:.2e} (tol 1e-10), worst distance minus bound {worst_slack:.3e}"),
    );
}

#[test]
fn c07_exact_oracle_agreement() {
    let _g = lock();
    let c = Criterion::start("C7 exact-oracle agreement", 5);
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for t in 0..100 {
        let n = 2 + t % 5;
        let cost = CostMatrix::new(Array2::from_shape_fn((n, n), |_| {
            rng.random_range(0.0..10.0)
        }))
        .unwrap();
        let expected = brute_force_ot_uniform(&cost).unwrap();
        let inst = ProblemInstance::new(
            cost,
            DiscreteMeasure::uniform(n),
            DiscreteMeasure::uniform(n),
        )
        .unwrap();
        let lp = solve_ot_exact(&inst).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        worst = worst.max((lp.objective - expected).abs());
    }
    let hand = ProblemInstance::new(
        CostMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap(),
        DiscreteMeasure::new(vec![0.4, 0.6]).unwrap(),
        DiscreteMeasure::new(vec![0.5, 0.5]).unwrap(),
    )
    .unwrap();
    let hand_obj = solve_ot_exact(&hand).unwrap().objective;
    c.finish(
        worst <= 1e-10 && (hand_obj - 1.2).abs() <= 1e-15,
        format!(
            "max |LP - brute force| {worst:.2e} (tol 1e-10); 2x2 objective {hand_obj} (expect 1.2)"
        ),
    );
}

#[test]
fn c08_dual_norm_caps() {
    let _g = lock();
    let c = Criterion::start("C8 dual-norm caps", 60);
    let (tau, eta) = (10.0, 0.1);
    let mut violations = 0;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..10 {
        let inst = generate_instance(&GeneratorParams::small_cost(50), seed).unwrap();
        let cfg = SolverConfig::new(tau, eta, 100_000)
            .trace_every(0)
            .convergence_tol(1e-13);
        let u_star = sr_sinkhorn(&inst, &cfg).unwrap().potentials.u_inf_norm();
        let scap = simplex_dual_cap(&inst.cost, tau, eta, &inst.a).unwrap();
        let gcap = general_dual_cap(
            tau,
            eta,
            compute_r(&inst.a, &inst.b, &inst.cost, eta).unwrap(),
        );
        if !(u_star <= scap && scap <= gcap) {
            violations += 1;
        }
        if u_star / scap > worst.0 / worst.1.max(f64::MIN_POSITIVE) {
            worst = (u_star, scap, gcap);
        }
    }
    c.finish(
        violations == 0,
        format!(
            "{violations} violations over 10 instances (need 0); tightest |u*| {:.4} <= simplex cap {:.4} <= general cap {:.1}",
            worst.0, worst.1, worst.2
        ),
    );
}

#[test]
fn c09_unregularized_bound() {
    let _g = lock();
    let c = Criterion::start("C9 unregularized marginal bound", 120);
    let res = run_experiment(&ExperimentSpec::default_for(
        ExperimentId::UnregularizedBound,
    ))
    .unwrap();
    let lo = res.verdict_f64("slope_min").unwrap();
    let hi = res.verdict_f64("slope_max").unwrap();
    let mean = res.verdict_f64("slope_mean").unwrap();
    c.finish(
        res.bound_violations == 0 && lo >= -1.2 && hi <= -0.8,
        format!(
            "{} violations (need 0); per-seed slopes in [{lo:.4}, {hi:.4}], mean {mean:.4} (need within -1 +/- 0.2)",
            res.bound_violations
        ),
    );
}

#[test]
fn c10_log_mean_value_properties() {
    let _g = lock();
    let c = Criterion::start("C10 log mean-value inequalities", 1);
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let mut violations = 0;
    for _ in 0..10_000 {
        let b = 10f64.powf(rng.random_range(-2.0..2.0));
        let p = b * rng.random_range(1e-6..1.0);
        let q = b * rng.random_range(1e-6..1.0);
        if p != q && !log_mean_value_check(p.max(q), p.min(q), b).unwrap() {
            violations += 1;
        }
        let len = rng.random_range(1..=20);
        let x: Vec<f64> = (0..len).map(|_| b * rng.random_range(1e-6..1.0)).collect();
        let y: Vec<f64> = (0..len).map(|_| b * rng.random_range(1e-6..1.0)).collect();
        if !log_mean_value_max_norm_check(&x, &y, b).unwrap() {
            violations += 1;
        }
    }
    c.finish(
        violations == 0,
        format!("{violations} violations over 10000 triples and 10000 vector pairs (need 0)"),
    );
}

#[test]
fn c11_intermediate_behavior() {
    let _g = lock();
    let c = Criterion::start("C11 intermediate behavior", 120);
    let res = run_experiment(&ExperimentSpec::default_for(ExperimentId::SinkhornCompare)).unwrap();
    let between = res.verdict_bool("sr_row_gap_between").unwrap();
    let restored = res.verdict_bool("sr_col_gap_restored").unwrap();
    let fin = &res.verdicts["final"][0];
    c.finish(
        between && restored,
        format!(
            "final row gaps sinkhorn {:.3e} <= sr {:.3e} <= uot {:.3e}: {between}; sr column gap {:.2e} at {} (tol 1e-8): {restored}",
            fin["row_gap"]["sinkhorn"].as_f64().unwrap(),
            fin["row_gap"]["sr_sinkhorn"].as_f64().unwrap(),
            fin["row_gap"]["uot_sinkhorn"].as_f64().unwrap(),
            fin["col_gap"]["sr_sinkhorn"].as_f64().unwrap(),
            fin["parity"].as_str().unwrap(),
        ),
    );
}

fn read_dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn c12_determinism() {
    let _g = lock();
    let c = Criterion::start("C12 determinism", 120);
    let mut specs = Vec::new();
    let mut s = ExperimentSpec::default_for(ExperimentId::MarginalGap);
    s.iterations = 300;
    specs.push(s);
    let mut s = ExperimentSpec::default_for(ExperimentId::OtGap);
    s.generator = GeneratorParams::small_cost(20);
    s.iterations = 200;
    specs.push(s);
    let mut s = ExperimentSpec::default_for(ExperimentId::SinkhornCompare);
    s.generator = GeneratorParams::small_cost(60);
    specs.push(s);
    let mut s = ExperimentSpec::default_for(ExperimentId::UnregularizedBound);
    s.generator = GeneratorParams::small_cost(5);
    s.seeds = vec![1, 2, 3];
    s.taus = vec![1.0, 10.0, 100.0];
    s.reference.etas = vec![1e-1, 1e-2];
    specs.push(s);
    let mut s = ExperimentSpec::default_for(ExperimentId::IterationBounds);
    s.generator = GeneratorParams::wide_cost(6);
    s.seeds = vec![4, 5];
    s.taus = vec![1.0, 10.0];
    s.epsilon_grid.count = 3;
    s.reference.etas = vec![1e-1, 1e-2];
    specs.push(s);

    let mut mismatched = Vec::new();
    let mut files = 0;
    for spec in &specs {
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_result(&run_experiment(spec).unwrap(), d1.path()).unwrap();
        write_result(&run_experiment(spec).unwrap(), d2.path()).unwrap();
        let (a, b) = (read_dir_bytes(d1.path()), read_dir_bytes(d2.path()));
        files += a.len();
        if a != b {
            mismatched.push(spec.id.as_str());
        }
    }
    c.finish(
        mismatched.is_empty(),
        format!(
            "{files} files from 5 experiments compared byte for byte; mismatches: {mismatched:?}"
        ),
    );
}
