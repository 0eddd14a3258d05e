use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;
use srot_core::bounds::{
    prescribe_functional, prescribe_marginal, prescribe_ot, BoundKind, BoundRecord, BoundReport,
};
use srot_core::exact::solve_ot_exact;
use srot_core::harness::{run_experiment, write_result, ExperimentId, ExperimentSpec};
use srot_core::io::{read_matrix_csv, write_matrix_csv};
use srot_core::rounding::round_to_polytope;
use srot_core::solvers::{
    pot_column_min, sr_sinkhorn, standard_sinkhorn, uot_sinkhorn, SolverConfig, SolverOutput,
};
use srot_core::{generate_instance, GeneratorParams, ProblemInstance, TransportPlan};

use crate::args::{
    BoundsArgs, Command, ExperimentArgs, Format, GenerateArgs, InstanceArgs, RoundArgs, SolveArgs,
    SolverKind,
};
use crate::config::merge;
use crate::{json, CliError};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(a) => {
            let path = a.config.clone();
            solve(merge(a, path.as_deref())?)
        }
        Command::Bounds(a) => {
            let path = a.config.clone();
            bounds(merge(a, path.as_deref())?)
        }
        Command::Experiment(a) => {
            let (path, id) = (a.config.clone(), a.id.clone());
            let mut merged = merge(a, path.as_deref())?;
            merged.id = id;
            experiment(merged)
        }
        Command::Round(a) => {
            let path = a.config.clone();
            round(merge(a, path.as_deref())?)
        }
        Command::Generate(a) => {
            let path = a.config.clone();
            generate(merge(a, path.as_deref())?)
        }
    }
}

fn generator(src: &InstanceArgs) -> GeneratorParams {
    let base = GeneratorParams::small_cost(src.n.unwrap_or(50));
    GeneratorParams {
        cost_lo: src.cost_lo.unwrap_or(base.cost_lo),
        cost_hi: src.cost_hi.unwrap_or(base.cost_hi),
        weight_lo: src.weight_lo.unwrap_or(base.weight_lo),
        weight_hi: src.weight_hi.unwrap_or(base.weight_hi),
        normalize: !src.no_normalize.unwrap_or(false),
        ..base
    }
}

fn load_instance(src: &InstanceArgs) -> Result<ProblemInstance, CliError> {
    match &src.instance {
        Some(path) => {
            let generated = src.n.is_some()
                || src.seed.is_some()
                || src.cost_lo.is_some()
                || src.cost_hi.is_some()
                || src.weight_lo.is_some()
                || src.weight_hi.is_some()
                || src.no_normalize.is_some();
            if generated {
                return Err(CliError::Config(
                    "--instance cannot be combined with generator flags".into(),
                ));
            }
            Ok(ProblemInstance::load(path)?)
        }
        None => Ok(generate_instance(&generator(src), src.seed.unwrap_or(0))?),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(
        File::create(path).map_err(srot_core::Error::from)?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(srot_core::Error::from)?;
    Ok(())
}

fn max_gap(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

fn marginal_gaps(inst: &ProblemInstance, plan: &TransportPlan) -> (f64, f64) {
    (
        max_gap(plan.row_marginal().as_slice().unwrap(), inst.a.as_slice()),
        max_gap(plan.col_marginal().as_slice().unwrap(), inst.b.as_slice()),
    )
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.source)?;
    if let Some(path) = &args.emit_instance {
        inst.save(path)?;
    }
    let solver = args.solver.unwrap_or(SolverKind::SrSinkhorn);
    let tau = args.tau.unwrap_or(1.0);
    let eta = args.eta.unwrap_or(0.1);
    let cfg = SolverConfig::new(tau, eta, args.iters.unwrap_or(1000))
        .trace_every(args.trace_every.unwrap_or(1))
        .convergence_tol(args.tol.unwrap_or(0.0));
    let name = serde_json::to_value(solver).expect("enum serializes");

    let (plan, summary, output) = match solver {
        SolverKind::Pot => {
            let (plan, value) = pot_column_min(&inst);
            let (rg, cg) = marginal_gaps(&inst, &plan);
            (
                plan,
                json!({"solver": name, "distance": value, "row_gap_inf": rg, "col_gap_inf": cg}),
                None,
            )
        }
        SolverKind::ExactOt => {
            let lp = solve_ot_exact(&inst)?;
            let (rg, cg) = marginal_gaps(&inst, &lp.plan);
            let summary = json!({
                "solver": name,
                "objective": lp.objective,
                "status": lp.status,
                "iterations": lp.iterations,
                "row_gap_inf": rg,
                "col_gap_inf": cg,
            });
            (lp.plan, summary, None)
        }
        _ => {
            let out: SolverOutput = match solver {
                SolverKind::SrSinkhorn => sr_sinkhorn(&inst, &cfg)?,
                SolverKind::Sinkhorn => standard_sinkhorn(&inst, &cfg)?,
                _ => uot_sinkhorn(
                    &inst,
                    args.tau1.unwrap_or(tau),
                    args.tau2.unwrap_or(tau),
                    &cfg,
                )?,
            };
            let last = out.trace.last().expect("final iterate is always traced");
            let summary = json!({
                "solver": name,
                "rows": inst.rows(),
                "cols": inst.cols(),
                "iterations": last.iter,
                "parity": last.parity.as_str(),
                "converged": out.converged,
                "distance": last.distance,
                "f": last.f,
                "g": last.g,
                "dual_objective": last.dual_obj,
                "row_gap_inf": last.row_gap_inf,
                "col_gap_inf": last.col_gap_inf,
            });
            (out.plan.clone(), summary, Some(out))
        }
    };

    let text = json::to_string(&summary);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(srot_core::Error::from)?;
        write_matrix_csv(create(&dir.join("plan.csv"))?, plan.entries())?;
        if let Some(out) = &output {
            match args.format.unwrap_or(Format::Csv) {
                Format::Csv => out.trace.write_csv(create(&dir.join("trace.csv"))?)?,
                Format::Json => write_text(&dir.join("trace.json"), &json::to_string(&out.trace))?,
            }
        }
        write_text(&dir.join("summary.json"), &(text.clone() + "\n"))?;
    }
    println!("{text}");
    Ok(())
}

fn parse_prescription(args: &BoundsArgs) -> Result<Option<(String, f64)>, CliError> {
    let raw = match (&args.prescribe, args.epsilon_f) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either --prescribe or --epsilon-f, not both".into(),
            ));
        }
        (Some(p), None) => p.clone(),
        (None, Some(e)) => return Ok(Some(("ef".into(), e))),
        (None, None) => return Ok(None),
    };
    let (kind, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--prescribe expects kind=value, got {raw:?}")))?;
    let value: f64 = value
        .parse()
        .map_err(|_| CliError::Config(format!("bad epsilon in --prescribe {raw:?}")))?;
    match kind {
        "ef" | "ec" | "ed" => Ok(Some((kind.to_string(), value))),
        _ => Err(CliError::Config(format!(
            "unknown prescription {kind:?}; use ef, ec or ed"
        ))),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bounds(args: BoundsArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.source)?;
    let tau = args.tau.unwrap_or(1.0);
    let eta = args.eta.unwrap_or(0.1);
    if let Some((kind, eps)) = parse_prescription(&args)? {
        let value = match kind.as_str() {
            "ef" => serde_json::to_value(prescribe_functional(&inst, tau, eps)?),
            "ec" => serde_json::to_value(prescribe_marginal(&inst, eta, eps)?),
            _ => serde_json::to_value(prescribe_ot(&inst, eps)?),
        }
        .expect("prescriptions serialize");
        return emit(
            &(json::to_string(&json!({"prescription": kind, "parameters": value})) + "\n"),
            args.out.as_deref(),
        );
    }

    let mut report = BoundReport::new(&inst, tau, eta, args.u_star)?;
    if args.bound.is_empty() {
        report.add_iterations(&inst, &BoundKind::ALL, &args.k)?;
    } else {
        let kinds = args
            .bound
            .iter()
            .map(|t| {
                BoundKind::parse(t).ok_or_else(|| CliError::Config(format!("unknown bound {t:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for &k in &args.k {
            for &kind in &kinds {
                let value = report.evaluate(&inst, kind, k)?;
                report.records.push(BoundRecord {
                    bound: kind,
                    k,
                    value,
                });
            }
        }
    }
    match args.format.unwrap_or(Format::Json) {
        Format::Json => emit(&(json::to_string(&report) + "\n"), args.out.as_deref()),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(
                &String::from_utf8(buf).expect("CSV is UTF-8"),
                args.out.as_deref(),
            )
        }
    }
}

fn experiment_spec(args: &ExperimentArgs) -> Result<ExperimentSpec, CliError> {
    let id: ExperimentId = args.id.parse()?;
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(srot_core::Error::from)?;
            let spec: ExperimentSpec =
                serde_json::from_str(&text).map_err(srot_core::Error::from)?;
            if spec.id != id {
                return Err(CliError::Config(format!(
                    "{} holds a {} spec, not {id}",
                    path.display(),
                    spec.id
                )));
            }
            spec
        }
        None => ExperimentSpec::default_for(id),
    };
    if !args.seed.is_empty() {
        spec.seeds = args.seed.clone();
    }
    if let Some(n) = args.n {
        spec.generator.n = n;
    }
    let sweep = matches!(
        id,
        ExperimentId::IterationBounds | ExperimentId::UnregularizedBound
    );
    match (sweep, args.tau.as_slice()) {
        (_, []) => {}
        (true, taus) => spec.taus = taus.to_vec(),
        (false, [t]) => spec.tau = *t,
        (false, _) => return Err(CliError::Config(format!("{id} takes a single --tau"))),
    }
    if let Some(x) = args.eta {
        spec.eta = x;
    }
    if let Some(x) = args.tau1 {
        spec.tau1 = x;
    }
    if let Some(x) = args.tau2 {
        spec.tau2 = x;
    }
    if let Some(x) = args.iters {
        spec.iterations = x;
    }
    if let Some(x) = args.stride {
        spec.record_stride = x;
    }
    if let Some(x) = args.epsilon_count {
        spec.epsilon_grid.count = x;
    }
    if let Some(x) = args.censor_factor {
        spec.censor_factor = x;
    }
    if let Some(x) = args.reference_dual_norm {
        spec.reference_dual_norm = x;
    }
    spec.validate()?;
    Ok(spec)
}

fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let spec = experiment_spec(&args)?;
    let result = run_experiment(&spec)?;
    let dir = args.out.clone().unwrap_or_else(|| "results".into());
    let files = write_result(&result, &dir)?;
    let summary = json!({
        "experiment": result.id,
        "bound_violations": result.bound_violations,
        "verdicts": result.verdicts,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    println!("{}", json::to_string(&summary));
    if result.bound_violations > 0 {
        return Err(CliError::Violations(result.bound_violations));
    }
    Ok(())
}

fn round(args: RoundArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.source)?;
    let path = args
        .plan
        .as_ref()
        .ok_or_else(|| CliError::Config("round needs --plan".into()))?;
    let x = TransportPlan::new(read_matrix_csv(
        File::open(path).map_err(srot_core::Error::from)?,
    )?)?;
    let y = round_to_polytope(&x, &inst.a, &inst.b)?;
    let l1 = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(s, t)| (s - t).abs()).sum::<f64>();
    let err_in = l1(x.row_marginal().as_slice().unwrap(), inst.a.as_slice())
        + l1(x.col_marginal().as_slice().unwrap(), inst.b.as_slice());
    let (rg, cg) = marginal_gaps(&inst, &y);
    let summary = json!({
        "input_marginal_error_l1": err_in,
        "distance_l1": y.l1_distance(&x),
        "row_gap_inf": rg,
        "col_gap_inf": cg,
        "cost": y.cost(&inst.cost)?,
    });
    if let Some(out) = &args.out {
        let mut w = create(out)?;
        write_matrix_csv(&mut w, y.entries())?;
        w.flush().map_err(srot_core::Error::from)?;
    }
    println!("{}", json::to_string(&summary));
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    if args.source.instance.is_some() {
        return Err(CliError::Config(
            "generate takes generator flags, not --instance".into(),
        ));
    }
    let inst = load_instance(&args.source)?;
    match &args.out {
        Some(path) => inst.save(path)?,
        None => println!("{}", inst.to_json()?),
    }
    Ok(())
}
