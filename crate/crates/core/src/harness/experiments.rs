use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::bounds::{
    compute_c3, compute_r, compute_u, log_col_gap_bound, marginal_gap_asymptote,
    marginal_gap_bound_general, marginal_gap_bound_simplex, ot_gap_asymptote, ot_gap_bound,
    prescribe_functional, simplex_dual_cap, unregularized_marginal_bound,
};
use crate::error::{Error, Result};
use crate::exact::{kl_srot_reference, solve_ot_exact, KlSrotReference, LpStatus};
use crate::instance::{generate_instance, GeneratorParams, ProblemInstance};
use crate::rounding::round_to_polytope;
use crate::solvers::{
    evaluate_f, sr_sinkhorn, standard_sinkhorn, uot_sinkhorn, LastUpdate, MarginalMode,
    ScalingSolver, SolverConfig, SolverOutput, SolverTrace, TraceRecord,
};

use super::{Cell, ExperimentId, ExperimentResult, ExperimentSpec, Provenance, Series};

/// Tolerance for `⟨C,Y⟩ ≥ ⟨C,T^OT⟩`.
const LP_OPTIMALITY_TOL: f64 = 1e-9;
/// Column gap after a column update, relative to `‖b‖∞`.
const RESTORATION_TOL: f64 = 1e-10;
/// Absolute column gap accepted at the final iterate of the comparison run.
const FINAL_COLUMN_TOL: f64 = 1e-8;
/// Budget of the long run used for `‖u*‖∞` when requested.
const DUAL_REFERENCE_ITERATIONS: usize = 100_000;

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    match spec.id {
        ExperimentId::MarginalGap => run_marginal_gap(spec),
        ExperimentId::OtGap => run_ot_gap(spec),
        ExperimentId::IterationBounds => run_iteration_bounds(spec),
        ExperimentId::SinkhornCompare => run_sinkhorn_compare(spec),
        ExperimentId::UnregularizedBound => run_unregularized_bound(spec),
    }
}

fn check_id(spec: &ExperimentSpec, id: ExperimentId) -> Result<()> {
    spec.validate()?;
    if spec.id != id {
        return Err(Error::InvalidParameter(format!(
            "spec is for {}, not {}",
            spec.id, id
        )));
    }
    Ok(())
}

fn finish(
    spec: &ExperimentSpec,
    series: Vec<Series>,
    violations: usize,
    mut verdicts: Map<String, Value>,
) -> ExperimentResult {
    let warnings = shape_warnings(spec);
    if !warnings.is_empty() {
        verdicts.insert("warnings".into(), json!(warnings));
    }
    ExperimentResult {
        id: spec.id,
        series,
        bound_violations: violations,
        verdicts,
        provenance: Provenance {
            spec: spec.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    }
}

/// Differences from the reference protocol of each experiment. The run goes
/// ahead regardless.
fn shape_warnings(spec: &ExperimentSpec) -> Vec<String> {
    let reference = ExperimentSpec::default_for(spec.id);
    let mut out = Vec::new();
    if spec.generator != reference.generator {
        out.push(format!(
            "instance shape differs from the reference protocol ({:?})",
            reference.generator
        ));
    }
    let params_differ = match spec.id {
        ExperimentId::MarginalGap | ExperimentId::OtGap => {
            spec.tau != reference.tau
                || spec.eta != reference.eta
                || spec.iterations != reference.iterations
        }
        ExperimentId::SinkhornCompare => {
            spec.tau != reference.tau
                || spec.eta != reference.eta
                || spec.tau1 != reference.tau1
                || spec.tau2 != reference.tau2
                || spec.iterations != reference.iterations
        }
        ExperimentId::IterationBounds => {
            spec.taus != reference.taus || spec.epsilon_grid != reference.epsilon_grid
        }
        ExperimentId::UnregularizedBound => spec.taus != reference.taus,
    };
    if params_differ {
        out.push("solver parameters differ from the reference protocol".into());
    }
    out
}

fn instance(generator: &GeneratorParams, seed: u64) -> Result<ProblemInstance> {
    generate_instance(generator, seed)
}

fn require_simplex(inst: &ProblemInstance) -> Result<()> {
    inst.a.require_simplex("a")?;
    inst.b.require_simplex("b")
}

fn max_abs_diff<'a>(
    x: impl IntoIterator<Item = &'a f64>,
    y: impl IntoIterator<Item = &'a f64>,
) -> f64 {
    x.into_iter()
        .zip(y)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn sr_solver(inst: &ProblemInstance, tau: f64, eta: f64) -> Result<ScalingSolver<'_>> {
    ScalingSolver::new(inst, eta, MarginalMode::Kl { tau }, MarginalMode::Hard)
}

/// Row-marginal gap at even iterates against the simplex bound, and the log
/// column gap at odd iterates against its bound.
pub fn run_marginal_gap(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    check_id(spec, ExperimentId::MarginalGap)?;
    let (tau, eta) = (spec.tau, spec.eta);
    let mut gaps = Series::new(
        "marginal_gap",
        &[
            ("seed", "instance seed"),
            ("iter", "half-iteration k (even, after a column update)"),
            ("row_gap_inf", "max_i |(T1)_i - a_i|"),
            ("bound", "geometric term plus U/(tau+eta)"),
            ("asymptote", "U/(tau+eta)"),
            ("general_bound", "gamma (geometric term + |u*|_inf / tau)"),
        ],
    );
    let mut logcol = Series::new(
        "log_column_gap",
        &[
            ("seed", "instance seed"),
            ("iter", "half-iteration k (odd, after a row update)"),
            ("log_col_gap_inf", "max_j |log (T^T 1)_j - log b_j|"),
            ("bound", "(4 tau/eta) R rho^((k-1)/2-1)"),
        ],
    );
    let mut violations = 0;
    let mut finals = Vec::new();
    for &seed in &spec.seeds {
        let inst = instance(&spec.generator, seed)?;
        require_simplex(&inst)?;
        let r = compute_r(&inst.a, &inst.b, &inst.cost, eta)?;
        let u = compute_u(&inst.cost, eta, &inst.a)?;
        let asym = marginal_gap_asymptote(tau, eta, u);
        let gamma = inst.a.total().max(inst.b.total());
        let u_star = dual_norm(&inst, tau, eta, spec.reference_dual_norm)?;
        let log_b = inst.b.ln();
        let mut solver = sr_solver(&inst, tau, eta)?;
        let mut last_even = None;
        while solver.iteration() < spec.iterations {
            solver.step()?;
            let k = solver.iteration();
            if k % 2 == 0 {
                let gap = max_abs_diff(&solver.plan()?.row_marginal(), inst.a.weights());
                let bound = marginal_gap_bound_simplex(k, tau, eta, r, u)?;
                let general = marginal_gap_bound_general(k, tau, eta, r, gamma, u_star)?;
                if !(gap <= bound) || !(gap <= general) {
                    violations += 1;
                }
                if k % spec.record_stride == 0 {
                    gaps.push(vec![
                        seed.into(),
                        k.into(),
                        gap.into(),
                        bound.into(),
                        asym.into(),
                        general.into(),
                    ]);
                }
                last_even = Some((k, gap));
            } else {
                let gap = max_abs_diff(&solver.log_col_marginal(), &log_b);
                let bound = log_col_gap_bound(k, tau, eta, r)?;
                if !(gap <= bound) {
                    violations += 1;
                }
                if (k - 1) % spec.record_stride == 0 {
                    logcol.push(vec![seed.into(), k.into(), gap.into(), bound.into()]);
                }
            }
        }
        if let Some((k, gap)) = last_even {
            finals.push(
                json!({"seed": seed, "iter": k, "row_gap_inf": gap, "asymptote": asym,
                               "ratio_to_asymptote": gap / asym}),
            );
        }
    }
    let worst_ratio = finals
        .iter()
        .filter_map(|f| f["ratio_to_asymptote"].as_f64())
        .fold(0.0, f64::max);
    let mut verdicts = Map::new();
    verdicts.insert("final".into(), json!(finals));
    verdicts.insert("worst_final_ratio_to_asymptote".into(), json!(worst_ratio));
    verdicts.insert(
        "final_within_twice_asymptote".into(),
        json!(worst_ratio <= 2.0),
    );
    Ok(finish(spec, vec![gaps, logcol], violations, verdicts))
}

/// `‖u*‖∞` from the simplex cap, or from a long run when `from_reference`.
fn dual_norm(inst: &ProblemInstance, tau: f64, eta: f64, from_reference: bool) -> Result<f64> {
    if !from_reference {
        return simplex_dual_cap(&inst.cost, tau, eta, &inst.a);
    }
    let cfg = SolverConfig::new(tau, eta, DUAL_REFERENCE_ITERATIONS)
        .trace_every(0)
        .convergence_tol(1e-13);
    Ok(sr_sinkhorn(inst, &cfg)?.potentials.u_inf_norm())
}

/// Rounded and unrounded transport cost against the exact optimum.
pub fn run_ot_gap(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    check_id(spec, ExperimentId::OtGap)?;
    let (tau, eta) = (spec.tau, spec.eta);
    let mut series = Series::new(
        "ot_gap",
        &[
            ("seed", "instance seed"),
            ("iter", "half-iteration k (even, after a column update)"),
            (
                "projected_gap",
                "<C,Y> - <C,T_OT> with Y the rounded iterate",
            ),
            ("nonprojected_gap", "<C,T_k> - <C,T_OT>"),
            ("bound", "full OT-gap bound at k"),
            ("asymptote", "eta c3 + 2 n |C|_inf U / tau"),
        ],
    );
    let mut violations = 0;
    let mut lp_violations = 0;
    let mut finals = Vec::new();
    for &seed in &spec.seeds {
        let inst = instance(&spec.generator, seed)?;
        require_simplex(&inst)?;
        let n = inst.rows();
        let lp = solve_ot_exact(&inst)?;
        if lp.status != LpStatus::Optimal {
            return Err(Error::Numeric(format!(
                "exact solve ended with status {:?}",
                lp.status
            )));
        }
        let r = compute_r(&inst.a, &inst.b, &inst.cost, eta)?;
        let u = compute_u(&inst.cost, eta, &inst.a)?;
        let c3 = compute_c3(n, &inst.a, &inst.b)?;
        let asym = ot_gap_asymptote(tau, eta, u, &inst.cost, n, c3);
        let mut solver = sr_solver(&inst, tau, eta)?;
        let mut last = None;
        while solver.iteration() < spec.iterations {
            solver.step()?;
            let k = solver.iteration();
            if k % 2 == 1 {
                continue;
            }
            let t = solver.plan()?;
            let y = round_to_polytope(&t, &inst.a, &inst.b)?;
            let projected = y.cost(&inst.cost)? - lp.objective;
            let unprojected = t.cost(&inst.cost)? - lp.objective;
            let bound = ot_gap_bound(k, tau, eta, r, u, &inst.cost, n, c3)?;
            if !(projected <= bound) {
                violations += 1;
            }
            if projected < -LP_OPTIMALITY_TOL {
                lp_violations += 1;
            }
            if k % spec.record_stride == 0 {
                series.push(vec![
                    seed.into(),
                    k.into(),
                    projected.into(),
                    unprojected.into(),
                    bound.into(),
                    asym.into(),
                ]);
            }
            last = Some((k, projected, unprojected));
        }
        if let Some((k, p, q)) = last {
            finals.push(json!({"seed": seed, "iter": k, "ot_value": lp.objective,
                               "projected_gap": p, "nonprojected_gap": q,
                               "relative_projected_gap": p / lp.objective, "asymptote": asym}));
        }
    }
    let worst_rel = finals
        .iter()
        .filter_map(|f| f["relative_projected_gap"].as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut verdicts = Map::new();
    verdicts.insert("final".into(), json!(finals));
    verdicts.insert("lp_optimality_violations".into(), json!(lp_violations));
    verdicts.insert(
        "worst_final_relative_projected_gap".into(),
        json!(worst_rel),
    );
    Ok(finish(
        spec,
        vec![series],
        violations + lp_violations,
        verdicts,
    ))
}

struct StoppingCell {
    seed: u64,
    tau: f64,
    epsilon: f64,
    eta: f64,
    k_f: u64,
    k_c: Option<u64>,
}

/// First even `k ≥ 2` with `|f(Tᵏ) − f_ref| ≤ ε`, or `None` past `cap`.
fn measured_stopping(
    inst: &ProblemInstance,
    tau: f64,
    eta: f64,
    f_ref: f64,
    epsilon: f64,
    cap: u64,
) -> Result<Option<u64>> {
    let mut solver = sr_solver(inst, tau, eta)?;
    while (solver.iteration() as u64) < cap {
        solver.step()?;
        solver.step()?;
        let f = evaluate_f(inst, &solver.plan()?, tau)?;
        if (f - f_ref).abs() <= epsilon {
            return Ok(Some(solver.iteration() as u64));
        }
    }
    Ok(None)
}

/// Theoretical stopping iteration against the measured one on an (ε, τ) grid.
pub fn run_iteration_bounds(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    check_id(spec, ExperimentId::IterationBounds)?;
    let epsilons = spec.epsilon_grid.values();
    let instances = spec
        .seeds
        .iter()
        .map(|&s| instance(&spec.generator, s).map(|i| (s, i)))
        .collect::<Result<Vec<_>>>()?;

    let ref_keys: Vec<(usize, f64)> = (0..instances.len())
        .flat_map(|i| spec.taus.iter().map(move |&t| (i, t)))
        .collect();
    let references: Vec<KlSrotReference> = ref_keys
        .par_iter()
        .map(|&(i, tau)| kl_srot_reference(&instances[i].1, tau, &spec.reference))
        .collect::<Result<_>>()?;

    let cell_keys: Vec<(usize, f64)> = (0..ref_keys.len())
        .flat_map(|r| epsilons.iter().map(move |&e| (r, e)))
        .collect();
    let cells: Vec<StoppingCell> = cell_keys
        .par_iter()
        .map(|&(ri, epsilon)| {
            let (ii, tau) = ref_keys[ri];
            let (seed, inst) = &instances[ii];
            let pr = prescribe_functional(inst, tau, epsilon)?;
            let cap = (spec.censor_factor * pr.stopping_iteration as f64).ceil() as u64;
            let k_c = measured_stopping(inst, tau, pr.eta, references[ri].value, epsilon, cap)?;
            Ok(StoppingCell {
                seed: *seed,
                tau,
                epsilon,
                eta: pr.eta,
                k_f: pr.stopping_iteration,
                k_c,
            })
        })
        .collect::<Result<_>>()?;

    let mut stopping = Series::new(
        "stopping",
        &[
            ("seed", "instance seed"),
            ("tau", "KL weight"),
            ("epsilon", "target functional gap"),
            ("eta", "prescribed entropy weight epsilon/(2 c2)"),
            ("k_f", "theoretical stopping iteration"),
            (
                "k_c",
                "first even k with |f(T_k) - f_ref| <= epsilon (blank if censored)",
            ),
            ("ratio", "k_f / k_c"),
            (
                "censored",
                "true if k_c was not reached within censor_factor * k_f",
            ),
        ],
    );
    let mut violations = 0;
    let mut censored = 0;
    let mut min_ratio = f64::INFINITY;
    for c in &cells {
        let ratio = c.k_c.map(|kc| c.k_f as f64 / kc as f64);
        match c.k_c {
            None => censored += 1,
            Some(kc) if kc > c.k_f => violations += 1,
            _ => {}
        }
        if let Some(r) = ratio {
            min_ratio = min_ratio.min(r);
        }
        stopping.push(vec![
            c.seed.into(),
            c.tau.into(),
            c.epsilon.into(),
            c.eta.into(),
            c.k_f.into(),
            c.k_c.into(),
            ratio.into(),
            c.k_c.is_none().into(),
        ]);
    }

    let mut refs = Series::new(
        "reference",
        &[
            ("seed", "instance seed"),
            ("tau", "KL weight"),
            (
                "f_ref",
                "continuation estimate of the unregularized optimum",
            ),
            ("error_estimate", "successive-difference error estimate"),
            ("monotone", "f non-increasing along the eta schedule"),
            ("half_iterations", "total half-iterations across stages"),
        ],
    );
    for (&(ii, tau), r) in ref_keys.iter().zip(&references) {
        refs.push(vec![
            instances[ii].0.into(),
            tau.into(),
            r.value.into(),
            r.error_estimate.into(),
            r.monotone.into(),
            r.stages
                .iter()
                .map(|s| s.half_iterations)
                .sum::<usize>()
                .into(),
        ]);
    }

    let mut series = vec![stopping, refs];
    if spec.seeds.len() > 1 {
        let mut stats = Series::new(
            "ratio_stats",
            &[
                ("tau", "KL weight"),
                ("epsilon", "target functional gap"),
                ("mean", "mean of k_f/k_c over seeds"),
                ("std", "population standard deviation over seeds"),
                ("count", "uncensored seeds"),
            ],
        );
        for &tau in &spec.taus {
            for &eps in &epsilons {
                let rs: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.tau == tau && c.epsilon == eps)
                    .filter_map(|c| c.k_c.map(|kc| c.k_f as f64 / kc as f64))
                    .collect();
                let n = rs.len() as f64;
                let mean = rs.iter().sum::<f64>() / n;
                let std = (rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
                stats.push(vec![
                    tau.into(),
                    eps.into(),
                    mean.into(),
                    std.into(),
                    rs.len().into(),
                ]);
            }
        }
        series.push(stats);
    }

    let mut verdicts = Map::new();
    verdicts.insert("cells".into(), json!(cells.len()));
    verdicts.insert("censored_cells".into(), json!(censored));
    verdicts.insert("min_ratio".into(), json!(min_ratio));
    verdicts.insert(
        "references_monotone".into(),
        json!(references.iter().all(|r| r.monotone)),
    );
    verdicts.insert(
        "max_reference_error_estimate".into(),
        json!(references
            .iter()
            .map(|r| r.error_estimate)
            .fold(0.0, f64::max)),
    );
    Ok(finish(spec, series, violations, verdicts))
}

/// Balanced, semi-relaxed and unbalanced Sinkhorn side by side.
pub fn run_sinkhorn_compare(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    check_id(spec, ExperimentId::SinkhornCompare)?;
    let cfg =
        SolverConfig::new(spec.tau, spec.eta, spec.iterations).trace_every(spec.record_stride);
    let cols: &[(&str, &str)] = &[
        ("seed", "instance seed"),
        ("iter", "half-iteration k"),
        ("parity", "which update produced the iterate"),
        ("sinkhorn", "balanced Sinkhorn"),
        ("sr_sinkhorn", "semi-relaxed Sinkhorn"),
        ("uot_sinkhorn", "unbalanced Sinkhorn"),
    ];
    let mut distance = Series::new("distance", cols);
    let mut row_gap = Series::new("row_gap", cols);
    let mut col_gap = Series::new("col_gap", cols);
    let mut violations = 0;
    let mut finals = Vec::new();
    for &seed in &spec.seeds {
        let inst = instance(&spec.generator, seed)?;
        let runs: Vec<SolverOutput> = vec![
            standard_sinkhorn(&inst, &cfg)?,
            sr_sinkhorn(&inst, &cfg)?,
            uot_sinkhorn(&inst, spec.tau1, spec.tau2, &cfg)?,
        ];
        let bmax = inst.b.max();
        let [sk, sr, uot] = [&runs[0].trace, &runs[1].trace, &runs[2].trace];
        for (i, rec) in sr.records.iter().enumerate() {
            let row = |f: &dyn Fn(&TraceRecord) -> f64| -> Vec<Cell> {
                vec![
                    seed.into(),
                    rec.iter.into(),
                    rec.parity.as_str().into(),
                    f(&sk.records[i]).into(),
                    f(rec).into(),
                    f(&uot.records[i]).into(),
                ]
            };
            distance.push(row(&|r| r.distance));
            row_gap.push(row(&|r| r.row_gap_inf));
            col_gap.push(row(&|r| r.col_gap_inf));
            if rec.parity == LastUpdate::OddV && rec.col_gap_inf > RESTORATION_TOL * bmax {
                violations += 1;
            }
        }
        let last = |t: &SolverTrace| t.last().cloned().expect("nonempty trace");
        let (a, b, c) = (last(sk), last(sr), last(uot));
        let lo = a.row_gap_inf.min(c.row_gap_inf);
        let hi = a.row_gap_inf.max(c.row_gap_inf);
        finals.push(json!({
            "seed": seed,
            "iter": b.iter,
            "parity": b.parity.as_str(),
            "row_gap": {"sinkhorn": a.row_gap_inf, "sr_sinkhorn": b.row_gap_inf, "uot_sinkhorn": c.row_gap_inf},
            "col_gap": {"sinkhorn": a.col_gap_inf, "sr_sinkhorn": b.col_gap_inf, "uot_sinkhorn": c.col_gap_inf},
            "distance": {"sinkhorn": a.distance, "sr_sinkhorn": b.distance, "uot_sinkhorn": c.distance},
            "sr_row_gap_between": lo <= b.row_gap_inf && b.row_gap_inf <= hi,
            "sr_col_gap_restored": b.parity == LastUpdate::OddV && b.col_gap_inf <= FINAL_COLUMN_TOL,
        }));
    }
    let all = |key: &str| finals.iter().all(|f| f[key].as_bool() == Some(true));
    let mut verdicts = Map::new();
    verdicts.insert(
        "sr_row_gap_between".into(),
        json!(all("sr_row_gap_between")),
    );
    verdicts.insert(
        "sr_col_gap_restored".into(),
        json!(all("sr_col_gap_restored")),
    );
    verdicts.insert("final".into(), json!(finals));
    Ok(finish(
        spec,
        vec![distance, row_gap, col_gap],
        violations,
        verdicts,
    ))
}

/// `‖T̂1 − a‖₁` of the continuation reference against `n‖C‖∞/τ`.
pub fn run_unregularized_bound(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    check_id(spec, ExperimentId::UnregularizedBound)?;
    let instances = spec
        .seeds
        .iter()
        .map(|&s| {
            let inst = instance(&spec.generator, s)?;
            inst.a.require_simplex("a")?;
            Ok((s, inst))
        })
        .collect::<Result<Vec<_>>>()?;
    let keys: Vec<(usize, f64)> = (0..instances.len())
        .flat_map(|i| spec.taus.iter().map(move |&t| (i, t)))
        .collect();
    let rows: Vec<(f64, f64, bool)> = keys
        .par_iter()
        .map(|&(i, tau)| {
            let inst = &instances[i].1;
            let r = kl_srot_reference(inst, tau, &spec.reference)?;
            let gap: f64 = r
                .plan
                .row_marginal()
                .iter()
                .zip(inst.a.weights())
                .map(|(x, y)| (x - y).abs())
                .sum();
            Ok((
                gap,
                unregularized_marginal_bound(inst.rows(), &inst.cost, tau),
                r.monotone,
            ))
        })
        .collect::<Result<_>>()?;

    let mut series = Series::new(
        "unregularized",
        &[
            ("seed", "instance seed"),
            ("tau", "KL weight"),
            ("gap_l1", "sum_i |(T_ref 1)_i - a_i|"),
            ("bound", "n |C|_inf / tau"),
            ("monotone", "continuation f non-increasing"),
        ],
    );
    let mut violations = 0;
    for (&(i, tau), &(gap, bound, mono)) in keys.iter().zip(&rows) {
        if !(gap <= bound) {
            violations += 1;
        }
        series.push(vec![
            instances[i].0.into(),
            tau.into(),
            gap.into(),
            bound.into(),
            mono.into(),
        ]);
    }
    let mut slopes = Vec::new();
    for (i, (seed, _)) in instances.iter().enumerate() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = keys
            .iter()
            .zip(&rows)
            .filter(|((j, _), (gap, _, _))| *j == i && *gap > 0.0)
            .map(|((_, tau), (gap, _, _))| (tau.ln(), gap.ln()))
            .unzip();
        let slope = if xs.len() >= 2 {
            ls_slope(&xs, &ys)
        } else {
            f64::NAN
        };
        slopes.push(json!({"seed": seed, "slope": slope}));
    }
    let vals: Vec<f64> = slopes.iter().filter_map(|s| s["slope"].as_f64()).collect();
    let mut verdicts = Map::new();
    verdicts.insert("slopes".into(), json!(slopes));
    verdicts.insert(
        "slope_mean".into(),
        json!(vals.iter().sum::<f64>() / vals.len() as f64),
    );
    verdicts.insert(
        "slope_min".into(),
        json!(vals.iter().copied().fold(f64::INFINITY, f64::min)),
    );
    verdicts.insert(
        "slope_max".into(),
        json!(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    );
    Ok(finish(spec, vec![series], violations, verdicts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        assert!((ls_slope(&xs, &ys) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn small_marginal_gap_run() {
        let mut spec = ExperimentSpec::default_for(ExperimentId::MarginalGap);
        spec.generator = GeneratorParams::small_cost(8);
        spec.iterations = 40;
        let res = run_marginal_gap(&spec).unwrap();
        assert_eq!(res.bound_violations, 0);
        assert_eq!(res.series("marginal_gap").unwrap().rows.len(), 20);
        assert!(res.verdicts.contains_key("warnings"));
    }

    #[test]
    fn wrong_id_rejected() {
        let spec = ExperimentSpec::default_for(ExperimentId::OtGap);
        assert!(run_marginal_gap(&spec).is_err());
    }
}
