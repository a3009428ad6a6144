//! Manifest-driven experiments: resampled splits, feature extraction,
//! classifier fitting and scoring, with an append-only results ledger and
//! the statistical reports built from it.

mod manifest;
mod pipeline;
mod report;
mod results;
mod runner;

pub use manifest::{DatasetSpec, FeatureKind, MethodSpec, RunManifest, SeedPolicy, TargetSpec, DEFAULT_RESAMPLES};
pub use pipeline::{fit_features, FittedFeatures, Pipeline};
pub use report::{
    build_report, comparison_report, runtime_report, ComparisonReport, Report, ReportKind, ReportOptions, RuntimeReport,
    RuntimeRow,
};
pub use results::{
    FailureRecord, Ledger, Pairing, ResultRecord, ResultsTable, FAILURES_FILE, HEADER, RESULTS_FILE, RUN_FILE,
    SUMMARY_FILE,
};
pub use runner::{load_results_dir, run_experiment, worker_count, RunSummary, SummaryRow, WORKERS_ENV};
