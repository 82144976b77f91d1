mod common;

use lgt_core::baselines::{run_no_tuning, run_random_search};
use lgt_core::data::{make_synthetic, Splits, SyntheticKind, SyntheticParams};
use lgt_core::orchestrator::{Budget, Method, RunConfig, RunRecord};
use lgt_core::report::{emit_report, loss_curve_name, summarize, ReportError, LOSS_CURVE_DIR};
use lgt_core::space::ConfigurationSpace;
use lgt_core::TaskType;

const EPOCHS: usize = 4;

fn run(method: Method, seed: u64) -> RunConfig {
    RunConfig {
        dataset: "blobs".into(),
        method,
        seed,
        budget: Budget {
            max_configurations: 3,
            epochs_per_evaluation: EPOCHS,
            iterations: 3,
        },
    }
}

fn records() -> Vec<RunRecord> {
    let space = common::blobs_space();
    let mut out = Vec::new();
    for seed in [42, 43, 44, 45] {
        let splits = common::blobs_splits(seed);
        out.push(run_no_tuning(&run(Method::NoTuning, seed), &splits, &space));
        if seed == 42 {
            out.push(run_random_search(&run(Method::Random, seed), &splits, &space).0);
        }
    }
    out
}

#[test]
fn summary_matches_a_one_pass_oracle() {
    let recs = records();
    let rows = summarize(&recs);
    let losses: Vec<f64> = recs
        .iter()
        .filter(|r| r.method() == Method::NoTuning)
        .map(|r| r.final_test_loss.unwrap())
        .collect();
    let (mean, std) = common::welford(&losses);
    let row = rows.iter().find(|r| r.method == Method::NoTuning && r.metric == "test_loss").unwrap();
    assert_eq!(row.n, 4);
    assert!((row.mean - mean).abs() < 1e-12);
    assert!((row.std - std).abs() < 1e-12);
    let accs: Vec<f64> = recs
        .iter()
        .filter(|r| r.method() == Method::NoTuning)
        .map(|r| r.final_test_metrics.as_ref().unwrap().accuracy().unwrap())
        .collect();
    let acc = rows.iter().find(|r| r.method == Method::NoTuning && r.metric == "accuracy").unwrap();
    assert!((acc.mean - common::welford(&accs).0).abs() < 1e-12);

    let single = rows.iter().find(|r| r.method == Method::Random && r.metric == "test_loss").unwrap();
    assert_eq!((single.n, single.std), (1, 0.0));
}

#[test]
fn report_files_round_trip() {
    let recs = records();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&recs, dir.path()).unwrap();

    let rows = summarize(&recs);
    let mut reader = csv::Reader::from_path(&files.summary_csv).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, ["method", "metric", "mean", "std", "n", "single_sample"]);
    let parsed: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(parsed.len(), rows.len());
    for (rec, row) in parsed.iter().zip(&rows) {
        assert_eq!(&rec[0], row.method.as_str());
        assert_eq!(&rec[1], row.metric);
        let mean: f64 = rec[2].parse().unwrap();
        let std: f64 = rec[3].parse().unwrap();
        assert!((mean - row.mean).abs() <= 1e-9 * row.mean.abs().max(1.0));
        assert!((std - row.std).abs() <= 1e-9 * row.std.abs().max(1.0));
        assert_eq!(rec[4].parse::<usize>().unwrap(), row.n);
        assert_eq!(&rec[5], if row.n == 1 { "true" } else { "false" });
    }

    assert_eq!(files.loss_curves.len(), recs.len());
    for r in &recs {
        let path = dir.path().join(LOSS_CURVE_DIR).join(loss_curve_name(r.method(), r.seed()));
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), EPOCHS);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[0].parse::<usize>().unwrap(), i + 1);
            let val: f64 = row[2].parse().unwrap();
            assert_eq!(val, r.history[i].metrics.val_loss);
        }
    }
    let text = std::fs::read_to_string(&files.summary_txt).unwrap();
    assert!(text.contains("no_tuning") && text.contains("random"));
    assert!(files.config_evolution_csv.exists());
}

#[test]
fn mixed_tasks_and_empty_input_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_report(&[], dir.path()), Err(ReportError::Empty)));

    let data = make_synthetic(SyntheticKind::LinearRegression, &SyntheticParams::default(), 1);
    let splits = Splits::prepare(&data, 0.8, 1).unwrap();
    let regression = run_no_tuning(&run(Method::NoTuning, 1), &splits, &ConfigurationSpace::for_task(TaskType::Regression));
    let mut recs = records();
    recs.push(regression);
    assert!(matches!(emit_report(&recs, dir.path()), Err(ReportError::MixedTasks)));
}
