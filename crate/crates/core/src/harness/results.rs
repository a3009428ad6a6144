use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::metrics::Metric;
use crate::stats::ScoreTable;
use crate::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const FAILURES_FILE: &str = "failures.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RUN_FILE: &str = "run.json";
pub const HEADER: [&str; 7] = ["method", "dataset", "resample", "metric", "value", "fit_ms", "predict_ms"];
const MISSING: &str = "NA";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub method: String,
    pub dataset: String,
    pub resample: u64,
    pub metric: Metric,
    /// `None` when the cell failed or the metric was undefined.
    pub value: Option<f64>,
    pub fit_ms: Option<f64>,
    pub predict_ms: Option<f64>,
}

impl ResultRecord {
    pub fn key(&self) -> (&str, &str, u64, Metric) {
        (&self.method, &self.dataset, self.resample, self.metric)
    }

    fn to_fields(&self) -> [String; 7] {
        let opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map_or_else(|| MISSING.to_string(), f);
        [
            self.method.clone(),
            self.dataset.clone(),
            self.resample.to_string(),
            self.metric.name().to_string(),
            opt(self.value, &|v| format!("{v}")),
            opt(self.fit_ms, &|v| format!("{v:.3}")),
            opt(self.predict_ms, &|v| format!("{v:.3}")),
        ]
    }

    fn from_fields(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        let field = |i: usize| {
            rec.get(i).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {}", HEADER[i]),
            })
        };
        let perr = |what: &str, v: &str| Error::Parse {
            line,
            message: format!("bad {what} {v:?}"),
        };
        let num = |i: usize| -> Result<Option<f64>> {
            match rec.get(i).map(str::trim) {
                None | Some("") | Some(MISSING) => Ok(None),
                Some(v) => match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Some(x)),
                    _ => Err(perr(HEADER[i], v)),
                },
            }
        };
        let resample = field(2)?;
        let metric = field(3)?;
        Ok(ResultRecord {
            method: field(0)?.to_string(),
            dataset: field(1)?.to_string(),
            resample: resample.trim().parse().map_err(|_| perr("resample", resample))?,
            metric: metric.trim().parse().map_err(|_| perr("metric", metric))?,
            value: num(4)?,
            fit_ms: num(5)?,
            predict_ms: num(6)?,
        })
    }
}

/// How observations are paired for statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// One observation per dataset: the mean over its resamples.
    #[default]
    Datasets,
    /// One observation per (dataset, resample).
    Resamples,
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "datasets" => Ok(Pairing::Datasets),
            "resamples" => Ok(Pairing::Resamples),
            _ => Err(Error::InvalidArgument(format!("unknown pairing {s:?}"))),
        }
    }
}

/// All records of a run, at most one per key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub records: Vec<ResultRecord>,
}

impl ResultsTable {
    /// Reads a results CSV. Later records for a key replace earlier ones.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
        let mut table = ResultsTable::default();
        for (i, rec) in reader.records().enumerate() {
            table.records.push(ResultRecord::from_fields(&rec?, i + 2)?);
        }
        table.dedup();
        Ok(table)
    }

    pub fn merge(&mut self, other: ResultsTable) {
        self.records.extend(other.records);
        self.dedup();
    }

    fn dedup(&mut self) {
        let mut last = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            last.insert((r.method.clone(), r.dataset.clone(), r.resample, r.metric), i);
        }
        let keep: BTreeSet<usize> = last.into_values().collect();
        let mut i = 0;
        self.records.retain(|_| {
            i += 1;
            keep.contains(&(i - 1))
        });
    }

    /// Sorted by dataset, method, resample and metric.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            (&a.dataset, &a.method, a.resample, a.metric).cmp(&(&b.dataset, &b.method, b.resample, b.metric))
        });
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(HEADER)?;
        for r in &self.records {
            w.write_record(r.to_fields())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Rewrites `path` in sorted order through a temporary file.
    pub fn write_canonical(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut sorted = self.clone();
        sorted.sort();
        let tmp = path.with_extension("csv.tmp");
        sorted.write_csv(&tmp)?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn methods(&self) -> Vec<String> {
        self.records.iter().map(|r| r.method.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn datasets(&self) -> Vec<String> {
        self.records.iter().map(|r| r.dataset.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// `(method, dataset, resample)` cells that have every metric and at
    /// least one value.
    pub fn completed_cells(&self, metrics: &[Metric]) -> BTreeSet<(String, String, u64)> {
        let mut seen: BTreeMap<(String, String, u64), (usize, bool)> = BTreeMap::new();
        for r in &self.records {
            if metrics.contains(&r.metric) {
                let e = seen.entry((r.method.clone(), r.dataset.clone(), r.resample)).or_default();
                e.0 += 1;
                e.1 |= r.value.is_some();
            }
        }
        seen.into_iter()
            .filter(|(_, (n, any))| *n == metrics.len() && *any)
            .map(|(k, _)| k)
            .collect()
    }

    /// Scores per method and observation unit. With [`Pairing::Datasets`]
    /// each value is the mean over the resamples that have one.
    pub fn score_table(&self, metric: Metric, pairing: Pairing) -> Result<(ScoreTable, Vec<String>)> {
        let methods = self.methods();
        let mut warnings = Vec::new();
        let mut sums: BTreeMap<(usize, String), (f64, usize, usize)> = BTreeMap::new();
        let mut units = BTreeSet::new();
        for r in self.records.iter().filter(|r| r.metric == metric) {
            let m = methods.binary_search(&r.method).unwrap_or(0);
            let unit = match pairing {
                Pairing::Datasets => r.dataset.clone(),
                Pairing::Resamples => format!("{}#{}", r.dataset, r.resample),
            };
            units.insert(unit.clone());
            let e = sums.entry((m, unit)).or_default();
            e.2 += 1;
            if let Some(v) = r.value {
                e.0 += v;
                e.1 += 1;
            }
        }
        if units.is_empty() {
            return Err(Error::EmptyInput);
        }
        let units: Vec<String> = units.into_iter().collect();
        let mut values = vec![vec![None; units.len()]; methods.len()];
        for ((m, unit), (sum, n, total)) in sums {
            let u = units.binary_search(&unit).unwrap_or(0);
            if n < total {
                warnings.push(format!("{} on {unit}: {} of {total} values missing", methods[m], total - n));
            }
            if n > 0 {
                values[m][u] = Some(sum / n as f64);
            }
        }
        Ok((ScoreTable::new(methods, units, values, metric.higher_is_better())?, warnings))
    }
}

/// Append-only writer shared by concurrent jobs.
pub struct Ledger {
    results: Mutex<csv::Writer<File>>,
    failures: Mutex<File>,
    results_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub method: String,
    pub dataset: String,
    pub resample: Option<u64>,
    pub kind: String,
    pub reason: String,
}

impl Ledger {
    /// Opens the ledger in `dir`, writing a header if the results file is new.
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let results_path = dir.join(RESULTS_FILE);
        let fresh = std::fs::metadata(&results_path).map(|m| m.len() == 0).unwrap_or(true);
        let open = |p: &Path| {
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p, e))
        };
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(open(&results_path)?);
        if fresh {
            w.write_record(HEADER)?;
            w.flush().map_err(|e| Error::io(&results_path, e))?;
        }
        Ok(Ledger {
            results: Mutex::new(w),
            failures: Mutex::new(open(&dir.join(FAILURES_FILE))?),
            results_path,
        })
    }

    /// Appends all records of one cell and flushes.
    pub fn append(&self, records: &[ResultRecord]) -> Result<()> {
        let mut w = self.results.lock().unwrap_or_else(|e| e.into_inner());
        for r in records {
            w.write_record(r.to_fields())?;
        }
        w.flush().map_err(|e| Error::io(&self.results_path, e))
    }

    pub fn fail(&self, failure: &FailureRecord) -> Result<()> {
        let line = serde_json::to_string(failure)?;
        let mut f = self.failures.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(f, "{line}").map_err(|e| Error::io(FAILURES_FILE, e))
    }
}
