use modewise::experiment::{
    parse_csv, read_report_json, run_experiment, run_experiment_with_progress, to_csv,
    write_report, Ensemble, ExperimentSpec, ReportFormat, Scheme, Structure, CSV_HEADER,
};
use modewise::Execution;

fn small_grid() -> ExperimentSpec {
    ExperimentSpec {
        n: 6,
        d: 4,
        kappa: 2,
        rank: vec![1; 4],
        schemes: vec![
            Scheme::new(Structure::Vectorized, Ensemble::Gaussian),
            Scheme::new(Structure::TwoStage, Ensemble::Sors),
        ],
        intermediate_m: vec![20],
        m0: vec![150, 300, 600],
        trials: 6,
        max_iterations: 300,
        seed: 5,
        ..ExperimentSpec::default()
    }
}

#[test]
fn paired_success_is_mostly_monotone_in_m0() {
    let spec = ExperimentSpec {
        schemes: vec![Scheme::new(Structure::Vectorized, Ensemble::Gaussian)],
        m0: vec![60, 120, 240, 480],
        trials: 40,
        ..small_grid()
    };
    let report = run_experiment_with_progress(&spec, Execution::Parallel, true, |_| {}).unwrap();
    let mut monotone = 0;
    for t in 0..spec.trials {
        let path: Vec<bool> = report.rows.iter().map(|r| r.outcomes[t].success).collect();
        if path.windows(2).all(|w| w[0] <= w[1]) {
            monotone += 1;
        } else {
            eprintln!("trial {t}: non-monotone success pattern {path:?}");
        }
    }
    assert!(monotone * 100 >= 95 * spec.trials, "{monotone}/{} monotone", spec.trials);
    let fractions: Vec<f64> = report.rows.iter().map(|r| r.fraction).collect();
    assert!(fractions.last() > fractions.first(), "{fractions:?}");
}

#[test]
fn reports_round_trip_and_are_consistent() {
    let spec = small_grid();
    let report = run_experiment(&spec, Execution::Parallel).unwrap();
    // m=20 gives a 400-entry first stage, so m0=600 is skipped for two-stage.
    assert_eq!(report.rows.len(), 3 + 2);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].cell.m0, 600);

    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("sweep.csv");
    let json_path = dir.path().join("sweep.json");
    write_report(&report, ReportFormat::Csv, &csv_path).unwrap();
    write_report(&report, ReportFormat::Json, &json_path).unwrap();

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with(&format!("{CSV_HEADER}\n")));
    assert_eq!(csv.lines().count(), report.rows.len() + 1);
    assert!(!csv.contains('\r'));
    for row in parse_csv(&csv).unwrap() {
        assert_eq!(row.fraction, row.successes as f64 / row.trials as f64);
        assert!(row.successes <= row.trials);
    }
    let back = read_report_json(&json_path).unwrap();
    assert_eq!(back, report);
    assert_eq!(to_csv(&back.rows), csv);
}

#[test]
fn rows_do_not_depend_on_execution_mode() {
    let spec = small_grid();
    let a = run_experiment(&spec, Execution::Sequential).unwrap();
    let b = run_experiment(&spec, Execution::Parallel).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(
            (x.scheme, x.m_intermediate, x.m0, x.successes, x.mean_iters_success, x.storage_entries),
            (y.scheme, y.m_intermediate, y.m0, y.successes, y.mean_iters_success, y.storage_entries)
        );
    }
}

#[test]
fn different_master_seeds_draw_different_trials() {
    let spec = ExperimentSpec {
        schemes: vec![Scheme::new(Structure::Vectorized, Ensemble::Gaussian)],
        m0: vec![150],
        ..small_grid()
    };
    let a = run_experiment_with_progress(&spec, Execution::Parallel, true, |_| {}).unwrap();
    let b = run_experiment_with_progress(&ExperimentSpec { seed: 6, ..spec }, Execution::Parallel, true, |_| {}).unwrap();
    let errs = |r: &modewise::experiment::ExperimentReport| {
        r.rows[0].outcomes.iter().map(|o| o.final_relative_error).collect::<Vec<_>>()
    };
    assert_ne!(errs(&a), errs(&b));
}
