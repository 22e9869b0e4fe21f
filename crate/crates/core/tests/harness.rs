use critgraph::harness::{
    read_results_jsonl, run_experiment, write_results, ExperimentKind, ExperimentSpec,
    OutputFormat, ProbSpec, VerdictReport, CSV_HEADER,
};

fn small_report(seed: u64) -> VerdictReport {
    let spec = ExperimentSpec::new(ExperimentKind::TailC1, 1000, ProbSpec::Critical, 300, seed)
        .with_scale(2.0);
    run_experiment(&spec).unwrap()
}

fn without_wall_time(mut r: VerdictReport) -> VerdictReport {
    r.manifest.wall_time_secs = 0.0;
    r
}

#[test]
fn jsonl_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let window = ExperimentSpec::new(
        ExperimentKind::WalkIdentity,
        4096,
        ProbSpec::Lambda(-1.5),
        500,
        3,
    );
    let reports = vec![small_report(1), run_experiment(&window).unwrap()];
    write_results(&reports, &path, OutputFormat::JsonLines).unwrap();
    let back = read_results_jsonl(&path).unwrap();
    assert_eq!(back, reports);
}

#[test]
fn empty_outputs_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("e.jsonl");
    let csv = dir.path().join("e.csv");
    write_results(&[], &jsonl, OutputFormat::JsonLines).unwrap();
    write_results(&[], &csv, OutputFormat::CsvSummary).unwrap();
    assert!(read_results_jsonl(&jsonl).unwrap().is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.trim_end(), CSV_HEADER.join(","));
}

#[test]
fn one_report_one_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    write_results(&[small_report(2)], &csv, OutputFormat::CsvSummary).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("tail_c1,1000,0.001,0,2,,"));
}

#[test]
fn rerun_is_identical_except_wall_time() {
    let a = without_wall_time(small_report(9));
    let b = without_wall_time(small_report(9));
    assert_eq!(a, b);
}

#[test]
fn unwritable_path_reports_the_path() {
    let err = write_results(
        &[],
        std::path::Path::new("/nonexistent-dir/x.jsonl"),
        OutputFormat::JsonLines,
    )
    .unwrap_err();
    assert!(
        err.to_string().contains("/nonexistent-dir/x.jsonl"),
        "{err}"
    );
}

#[test]
fn counts_do_not_depend_on_worker_count() {
    let specs = [
        ExperimentSpec::new(ExperimentKind::TailC1, 5000, ProbSpec::Critical, 2000, 4)
            .with_scale(1.0),
        ExperimentSpec::new(
            ExperimentKind::TailCv,
            5000,
            ProbSpec::Lambda(2.0),
            20_000,
            4,
        )
        .with_scale(1.0),
        ExperimentSpec::new(
            ExperimentKind::TwoStage,
            100_000,
            ProbSpec::Critical,
            3000,
            4,
        )
        .with_scale(0.05),
    ];
    for spec in &specs {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| without_wall_time(run_experiment(spec).unwrap()))
        };
        let one = run(1);
        assert_eq!(one, run(4), "{spec:?}");
        assert_eq!(one, run(8), "{spec:?}");
    }
}

#[test]
fn per_vertex_tail_example() {
    let spec = ExperimentSpec::new(
        ExperimentKind::TailCv,
        10_000,
        ProbSpec::Critical,
        100_000,
        11,
    )
    .with_scale(9.0);
    let r = run_experiment(&spec).unwrap();
    let est = r.estimate.as_ref().unwrap();
    let bound = r.bound.as_ref().unwrap();
    assert!(est.ci_low <= bound.value);
    assert!(r.pass, "{:?}", r.checks);
}

#[test]
fn lower_tail_example() {
    let spec = ExperimentSpec::new(
        ExperimentKind::LowerC1,
        1_000_000,
        ProbSpec::Critical,
        10_000,
        12,
    )
    .with_scale(0.001);
    let r = run_experiment(&spec).unwrap();
    assert_eq!(r.threshold, Some(10));
    assert!(r.estimate.as_ref().unwrap().ci_low <= 0.2378);
    assert!(r.pass);
}

#[test]
fn oracle_equivalence_example() {
    let spec = ExperimentSpec::new(
        ExperimentKind::OracleEquivalence,
        4,
        ProbSpec::Value(0.25),
        1_000_000,
        13,
    );
    let r = run_experiment(&spec).unwrap();
    for c in &r.checks {
        assert!(c.value <= 0.005, "{c:?}");
    }
}

#[test]
fn verdict_uses_lower_confidence_bound() {
    // the check compares the lower confidence limit, not p_hat
    let spec = ExperimentSpec::new(ExperimentKind::TailC1, 1000, ProbSpec::Critical, 40, 14)
        .with_scale(1.2);
    let r = run_experiment(&spec).unwrap();
    let est = r.estimate.unwrap();
    let bound = r.bound.unwrap();
    assert_eq!(r.checks[0].value, est.ci_low);
    assert_eq!(r.checks[0].pass, est.ci_low <= bound.value);
}
