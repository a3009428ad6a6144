use std::path::{Path, PathBuf};

use tsoc::clm::{ClassifierConfig, ClassifierKind};
use tsoc::data::read_ts_file;
use tsoc::harness::{run_experiment, Pipeline, ResultsTable, RunManifest, FAILURES_FILE, RESULTS_FILE};
use tsoc::metrics::{ccr, Metric};
use tsoc::transform::{TransformConfig, Variant};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn basic_motions_shapes() {
    let train = read_ts_file(fixture("BasicMotions_TRAIN.ts")).unwrap();
    let test = read_ts_file(fixture("BasicMotions_TEST.ts")).unwrap();
    for d in [&train, &test] {
        assert_eq!(d.len(), 40);
        assert_eq!(d.n_channels(), 6);
        assert_eq!(d.series_length(), 100);
        assert_eq!(d.class_names().len(), 4);
    }
}

#[test]
fn minirocket_logistic_at_beats_majority() {
    let train = read_ts_file(fixture("BasicMotions_TRAIN.ts")).unwrap();
    let test = read_ts_file(fixture("BasicMotions_TEST.ts")).unwrap();
    let cfg = TransformConfig::for_variant(Variant::Minirocket).with_seed(3);
    let mut clf = ClassifierConfig::new(ClassifierKind::LogisticAt);
    clf.lambda = Some(1.0);
    let pipeline = Pipeline::fit(&train, Some(&cfg), &clf).unwrap();
    let pred = pipeline.predict(&test).unwrap();
    let counts = test.class_counts();
    let majority = *counts.iter().max().unwrap() as f64 / test.len() as f64;
    let score = ccr(test.labels(), &pred).unwrap();
    assert!(score > majority, "ccr {score} vs majority {majority}");
}

fn manifest(dir: &Path, train: &Path) -> RunManifest {
    let json = serde_json::json!({
        "datasets": [
            {"name": "BasicMotions", "train": train, "test": fixture("BasicMotions_TEST.ts")},
        ],
        "methods": [
            {"name": "N-Flatten", "features": "flatten", "classifier": "multinomial", "lambda": 1.0},
            {"name": "O-Flatten", "features": "flatten", "classifier": "logistic_at", "lambda": 1.0},
        ],
        "resamples": 1,
        "output_dir": dir.join("out"),
    });
    RunManifest::from_json(&json.to_string()).unwrap()
}

#[test]
fn run_writes_every_metric_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path(), &fixture("BasicMotions_TRAIN.ts"));
    let (table, summary) = run_experiment(&m).unwrap();
    assert_eq!(table.records.len(), 2 * m.metrics.len());
    assert_eq!(summary.cells_run, 2);
    assert!(table.records.iter().all(|r| r.value.is_some()));

    let path = dir.path().join("out").join(RESULTS_FILE);
    let before = std::fs::read_to_string(&path).unwrap();
    let (_, again) = run_experiment(&m).unwrap();
    assert_eq!((again.cells_run, again.cells_skipped), (0, 2));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), before);
    assert_eq!(ResultsTable::read_csv(&path).unwrap().completed_cells(&Metric::ALL).len(), 2);
}

#[test]
fn missing_dataset_is_recorded_and_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = manifest(dir.path(), &dir.path().join("absent_TRAIN.ts"));
    let extra = manifest(dir.path(), &fixture("BasicMotions_TRAIN.ts")).datasets.remove(0);
    m.datasets[0].name = "Absent".into();
    m.datasets.push(extra);
    let (table, summary) = run_experiment(&m).unwrap();
    assert_eq!(summary.cells_failed, 2);
    let absent: Vec<_> = table.records.iter().filter(|r| r.dataset == "Absent").collect();
    assert_eq!(absent.len(), 2 * m.metrics.len());
    assert!(absent.iter().all(|r| r.value.is_none()));
    assert!(table.records.iter().any(|r| r.dataset == "BasicMotions" && r.value.is_some()));
    let failures = std::fs::read_to_string(dir.path().join("out").join(FAILURES_FILE)).unwrap();
    assert_eq!(failures.lines().count(), 2);
}
