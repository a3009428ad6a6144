use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{FeatureKind, MethodSpec, RunManifest};
use super::pipeline::{fit_features, FittedFeatures};
use super::results::{FailureRecord, Ledger, ResultRecord, ResultsTable, RESULTS_FILE, RUN_FILE, SUMMARY_FILE};
use crate::clm::{ClassifierConfig, CvOptions};
use crate::data::{stratified_resample, OrdinalDataset, SplitPair};
use crate::metrics::Metric;
use crate::transform::FeatureMatrix;
use crate::{Error, Result};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "TSOC_WORKERS";

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::InvalidArgument(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub cells_total: usize,
    pub cells_run: usize,
    pub cells_skipped: usize,
    pub cells_failed: usize,
    /// Per method, dataset and metric: mean and count over resamples.
    pub means: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub dataset: String,
    pub metric: Metric,
    pub mean: Option<f64>,
    pub n: usize,
    pub mean_fit_ms: Option<f64>,
    pub mean_predict_ms: Option<f64>,
}

struct Features {
    train: FeatureMatrix,
    test: FeatureMatrix,
    fit_ms: f64,
    predict_ms: f64,
}

type FeatureKey = (FeatureKind, Option<usize>, Option<usize>);

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn compute_features(method: &MethodSpec, split: &SplitPair, seed: u64) -> Result<Features> {
    let start = Instant::now();
    let cfg = method.transform_config(seed);
    let fitted = FittedFeatures::fit(cfg.as_ref(), &split.train)?;
    let train = fitted.apply(&split.train)?;
    let fit_ms = ms(start);
    let start = Instant::now();
    let test = fitted.apply(&split.test)?;
    Ok(Features {
        train,
        test,
        fit_ms,
        predict_ms: ms(start),
    })
}

struct CellOutcome {
    records: Vec<ResultRecord>,
    failures: Vec<FailureRecord>,
}

fn run_cell(
    manifest: &RunManifest,
    method: &MethodSpec,
    split: &SplitPair,
    seed: u64,
    cache: &mut HashMap<FeatureKey, Arc<Features>>,
) -> Result<CellOutcome> {
    let key = (method.features, method.num_features, method.num_kernels);
    let feats = match cache.get(&key) {
        Some(f) => f.clone(),
        None => {
            let f = Arc::new(compute_features(method, split, seed)?);
            cache.insert(key, f.clone());
            f
        }
    };
    let config = ClassifierConfig {
        kind: method.classifier,
        cv: CvOptions {
            seed,
            n_folds: method.folds.unwrap_or(CvOptions::default().n_folds),
            ..CvOptions::default()
        },
        lambda: method.lambda,
    };
    let start = Instant::now();
    let clf = fit_features(&feats.train, &split.train, &config)?;
    let fit_ms = feats.fit_ms + ms(start);
    let start = Instant::now();
    let pred = clf.predict(feats.test.values())?;
    let predict_ms = feats.predict_ms + ms(start);

    let q = split.train.n_classes();
    let mut out = CellOutcome {
        records: Vec::new(),
        failures: Vec::new(),
    };
    for &metric in &manifest.metrics {
        let value = match metric.evaluate(split.test.labels(), &pred, q) {
            Ok(v) => Some(v),
            Err(e) => {
                out.failures.push(failure(method, split, &e, Some(metric)));
                None
            }
        };
        out.records.push(ResultRecord {
            method: method.name.clone(),
            dataset: split.train.name().to_string(),
            resample: split.resample_id,
            metric,
            value,
            fit_ms: Some(fit_ms),
            predict_ms: Some(predict_ms),
        });
    }
    Ok(out)
}

fn failure(method: &MethodSpec, split: &SplitPair, e: &Error, metric: Option<Metric>) -> FailureRecord {
    FailureRecord {
        method: method.name.clone(),
        dataset: split.train.name().to_string(),
        resample: Some(split.resample_id),
        kind: e.kind().to_string(),
        reason: match metric {
            Some(m) => format!("{}: {e}", m.name()),
            None => e.to_string(),
        },
    }
}

fn missing_records(manifest: &RunManifest, method: &str, dataset: &str, resample: u64) -> Vec<ResultRecord> {
    manifest
        .metrics
        .iter()
        .map(|&metric| ResultRecord {
            method: method.to_string(),
            dataset: dataset.to_string(),
            resample,
            metric,
            value: None,
            fit_ms: None,
            predict_ms: None,
        })
        .collect()
}

/// Runs every (dataset, resample, method) cell not already complete in the
/// output directory, appending results as cells finish, then rewrites the
/// results CSV in sorted order and writes a summary.
pub fn run_experiment(manifest: &RunManifest) -> Result<(ResultsTable, RunSummary)> {
    manifest.validate()?;
    let out_dir = manifest.output_path();
    let ledger = Ledger::open(&out_dir)?;
    let results_path = out_dir.join(RESULTS_FILE);
    let done = ResultsTable::read_csv(&results_path)?.completed_cells(&manifest.metrics);
    write_run_file(manifest)?;

    let loaded: Vec<(String, Result<(OrdinalDataset, OrdinalDataset)>)> = manifest
        .datasets
        .iter()
        .map(|d| (d.name.clone(), d.load(&manifest.base_dir)))
        .collect();

    let mut jobs = Vec::new();
    let mut skipped = 0;
    let mut failed = 0;
    for (name, data) in &loaded {
        for resample in 0..manifest.resamples as u64 {
            let todo: Vec<&MethodSpec> = manifest
                .methods
                .iter()
                .filter(|m| !done.contains(&(m.name.clone(), name.clone(), resample)))
                .collect();
            skipped += manifest.methods.len() - todo.len();
            if todo.is_empty() {
                continue;
            }
            match data {
                Ok(d) => jobs.push((d, resample, todo)),
                Err(e) => {
                    for m in todo {
                        failed += 1;
                        ledger.append(&missing_records(manifest, &m.name, name, resample))?;
                        ledger.fail(&FailureRecord {
                            method: m.name.clone(),
                            dataset: name.clone(),
                            resample: Some(resample),
                            kind: e.kind().to_string(),
                            reason: e.to_string(),
                        })?;
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let ran: Vec<Result<(usize, usize)>> = pool.install(|| {
        jobs.par_iter()
            .map(|((train, test), resample, methods)| -> Result<(usize, usize)> {
                let seed = manifest.seed.seed_for(*resample);
                let split = match stratified_resample(train, test, *resample) {
                    Ok(s) => s,
                    Err(e) => {
                        for m in methods {
                            ledger.append(&missing_records(manifest, &m.name, train.name(), *resample))?;
                            ledger.fail(&FailureRecord {
                                method: m.name.clone(),
                                dataset: train.name().to_string(),
                                resample: Some(*resample),
                                kind: e.kind().to_string(),
                                reason: e.to_string(),
                            })?;
                        }
                        return Ok((0, methods.len()));
                    }
                };
                let mut cache = HashMap::new();
                let mut n_failed = 0;
                for m in methods {
                    match run_cell(manifest, m, &split, seed, &mut cache) {
                        Ok(cell) => {
                            ledger.append(&cell.records)?;
                            for f in &cell.failures {
                                ledger.fail(f)?;
                            }
                        }
                        Err(e) => {
                            n_failed += 1;
                            log::warn!("{} on {} resample {}: {e}", m.name, train.name(), resample);
                            ledger.append(&missing_records(manifest, &m.name, train.name(), *resample))?;
                            ledger.fail(&failure(m, &split, &e, None))?;
                        }
                    }
                }
                Ok((methods.len() - n_failed, n_failed))
            })
            .collect()
    });
    let mut cells_run = 0;
    for r in ran {
        let (ok, bad) = r?;
        cells_run += ok + bad;
        failed += bad;
    }
    drop(ledger);

    let table = ResultsTable::read_csv(&results_path)?;
    table.write_canonical(&results_path)?;
    let summary = RunSummary {
        cells_total: manifest.datasets.len() * manifest.resamples * manifest.methods.len(),
        cells_run,
        cells_skipped: skipped,
        cells_failed: failed,
        means: summarize(&table),
    };
    let path = out_dir.join(SUMMARY_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&path, e))?;
    Ok((table, summary))
}

/// Copy of the manifest with resolved paths, read back by the statistics.
fn write_run_file(manifest: &RunManifest) -> Result<()> {
    let mut resolved = manifest.clone();
    for d in &mut resolved.datasets {
        d.train = manifest.resolve(&d.train);
        d.test = manifest.resolve(&d.test);
    }
    resolved.external_results = manifest.external_results.iter().map(|p| manifest.resolve(p)).collect();
    resolved.output_dir = manifest.output_path();
    let path = manifest.output_path().join(RUN_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&resolved)?).map_err(|e| Error::io(&path, e))
}

fn summarize(table: &ResultsTable) -> Vec<SummaryRow> {
    #[derive(Default)]
    struct Acc {
        sum: f64,
        n: usize,
        fit: (f64, usize),
        predict: (f64, usize),
    }
    let mut acc: BTreeMap<(String, String, Metric), Acc> = BTreeMap::new();
    for r in &table.records {
        let a = acc.entry((r.method.clone(), r.dataset.clone(), r.metric)).or_default();
        if let Some(v) = r.value {
            a.sum += v;
            a.n += 1;
        }
        if let Some(v) = r.fit_ms {
            a.fit.0 += v;
            a.fit.1 += 1;
        }
        if let Some(v) = r.predict_ms {
            a.predict.0 += v;
            a.predict.1 += 1;
        }
    }
    let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
    acc.into_iter()
        .map(|((method, dataset, metric), a)| SummaryRow {
            method,
            dataset,
            metric,
            mean: mean((a.sum, a.n)),
            n: a.n,
            mean_fit_ms: mean(a.fit),
            mean_predict_ms: mean(a.predict),
        })
        .collect()
}

/// Reads a results directory written by [`run_experiment`], merging any
/// external results named in its run file and in `extra`.
pub fn load_results_dir(dir: &std::path::Path, extra: &[std::path::PathBuf]) -> Result<ResultsTable> {
    let mut table = ResultsTable::read_csv(dir.join(RESULTS_FILE))?;
    let run = dir.join(RUN_FILE);
    let mut externals: BTreeSet<std::path::PathBuf> = extra.iter().cloned().collect();
    if run.exists() {
        let text = std::fs::read_to_string(&run).map_err(|e| Error::io(&run, e))?;
        let m: RunManifest = serde_json::from_str(&text)?;
        externals.extend(m.external_results);
    }
    for p in externals {
        table.merge(ResultsTable::read_csv(&p)?);
    }
    Ok(table)
}
