use srot_core::harness::{run_experiment, write_result, ExperimentId, ExperimentSpec};
use srot_core::GeneratorParams;

#[test]
fn outputs_have_documented_columns() {
    let mut spec = ExperimentSpec::default_for(ExperimentId::OtGap);
    spec.generator = GeneratorParams::small_cost(10);
    spec.iterations = 60;
    spec.record_stride = 10;
    let res = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_result(&res, dir.path()).unwrap();
    assert_eq!(files.len(), 3);

    let csv = std::fs::read_to_string(dir.path().join("ot-gap_ot_gap.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seed,iter,projected_gap,nonprojected_gap,bound,asymptote"
    );
    assert_eq!(lines.count(), 6);

    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("ot-gap_schema.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(schema["series"][0]["columns"].as_array().unwrap().len(), 6);

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("ot-gap_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["bound_violations"], 0);
    let spec_back: ExperimentSpec =
        serde_json::from_value(summary["provenance"]["spec"].clone()).unwrap();
    assert_eq!(spec_back, spec);
}

#[test]
fn asymptote_scales_inversely_with_tau() {
    let mut spec = ExperimentSpec::default_for(ExperimentId::MarginalGap);
    spec.generator = GeneratorParams::small_cost(10);
    spec.iterations = 4;
    let base = run_experiment(&spec).unwrap();
    spec.tau = 1e9;
    let stiff = run_experiment(&spec).unwrap();
    let asym = |r: &srot_core::harness::ExperimentResult| {
        r.verdicts["final"][0]["asymptote"].as_f64().unwrap()
    };
    let ratio = asym(&base) / asym(&stiff);
    assert!((ratio / 1e3 - 1.0).abs() < 1e-6, "ratio {ratio}");
}

#[test]
fn iteration_bound_sweep_reports_statistics_over_seeds() {
    let mut spec = ExperimentSpec::default_for(ExperimentId::IterationBounds);
    spec.generator = GeneratorParams::wide_cost(5);
    spec.seeds = vec![0, 1, 2];
    spec.taus = vec![5.0];
    spec.epsilon_grid.count = 4;
    spec.reference.etas = vec![1e-1, 1e-2, 1e-3];
    let res = run_experiment(&spec).unwrap();
    assert_eq!(res.bound_violations, 0);
    let stats = res.series("ratio_stats").unwrap();
    assert_eq!(stats.rows.len(), 4);
    let k_f = res.series("stopping").unwrap().column("k_f");
    // Smaller epsilon never lowers the stopping iteration.
    for seed in 0..3 {
        let per_seed = &k_f[seed * 4..seed * 4 + 4];
        assert!(per_seed.windows(2).all(|w| w[0] <= w[1]));
    }
}
