use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::results::{Pairing, ResultsTable};
use crate::metrics::Metric;
use crate::stats::{
    build_cliques, mcm, mean_ranks, pairwise_tests, relative_mae, McmCell, PairwiseTest, RelativeMae,
    RelativeMaeFormula, DEFAULT_ALPHA,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    /// Mean ranks and cliques of a critical difference diagram.
    Cdd,
    Mcm,
    Relmae,
    Pairwise,
    /// Mean fit and predict times next to mean metric values.
    Runtime,
}

impl ReportKind {
    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Cdd => "cdd",
            ReportKind::Mcm => "mcm",
            ReportKind::Relmae => "relmae",
            ReportKind::Pairwise => "pairwise",
            ReportKind::Runtime => "runtime",
        }
    }
}

impl std::str::FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ReportKind::Cdd, ReportKind::Mcm, ReportKind::Relmae, ReportKind::Pairwise, ReportKind::Runtime]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown report {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub metric: Metric,
    pub pairing: Pairing,
    pub alpha: f64,
    pub relmae_formula: RelativeMaeFormula,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            metric: Metric::Mae,
            pairing: Pairing::Datasets,
            alpha: DEFAULT_ALPHA,
            relmae_formula: RelativeMaeFormula::Balanced,
        }
    }
}

/// Full comparison of all methods on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric: Metric,
    pub higher_is_better: bool,
    pub pairing: Pairing,
    /// How resamples were combined before comparing.
    pub aggregation: String,
    pub alpha: f64,
    pub methods: Vec<String>,
    pub units: usize,
    pub mean_ranks: Vec<f64>,
    pub pairwise: Vec<PairwiseTest>,
    pub cliques: Vec<Vec<String>>,
    pub mcm_cells: Vec<McmCell>,
    pub warnings: Vec<String>,
}

pub fn comparison_report(results: &ResultsTable, opts: &ReportOptions) -> Result<ComparisonReport> {
    let (table, mut warnings) = results.score_table(opts.metric, opts.pairing)?;
    let ranks = mean_ranks(&table)?;
    warnings.extend(ranks.warnings);
    Ok(ComparisonReport {
        metric: opts.metric,
        higher_is_better: opts.metric.higher_is_better(),
        pairing: opts.pairing,
        aggregation: match opts.pairing {
            Pairing::Datasets => "mean over resamples per dataset".into(),
            Pairing::Resamples => "none; one observation per dataset and resample".into(),
        },
        alpha: opts.alpha,
        methods: table.methods.clone(),
        units: ranks.datasets_used,
        mean_ranks: ranks.mean_ranks,
        pairwise: pairwise_tests(&table, opts.alpha)?,
        cliques: build_cliques(&table, opts.alpha)?,
        mcm_cells: mcm(&table)?,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub method: String,
    /// Means over datasets of the per-dataset mean times.
    pub fit_ms: f64,
    pub predict_ms: f64,
    pub metric_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub metric: Metric,
    pub rows: Vec<RuntimeRow>,
}

pub fn runtime_report(results: &ResultsTable, metric: Metric) -> Result<RuntimeReport> {
    // (method, dataset) -> (fit sum, predict sum, timed cells, metric sum, metric count)
    let mut per: BTreeMap<(String, String), (f64, f64, usize, f64, usize)> = BTreeMap::new();
    for r in results.records.iter().filter(|r| r.metric == metric) {
        let e = per.entry((r.method.clone(), r.dataset.clone())).or_default();
        if let (Some(f), Some(p)) = (r.fit_ms, r.predict_ms) {
            e.0 += f;
            e.1 += p;
            e.2 += 1;
        }
        if let Some(v) = r.value {
            e.3 += v;
            e.4 += 1;
        }
    }
    if per.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_method: BTreeMap<String, (Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((method, _), (f, p, n, v, nv)) in per {
        let e = by_method.entry(method).or_default();
        if n > 0 {
            e.0.push(f / n as f64);
            e.1.push(p / n as f64);
        }
        if nv > 0 {
            e.2.push(v / nv as f64);
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok(RuntimeReport {
        metric,
        rows: by_method
            .into_iter()
            .map(|(method, (f, p, v))| RuntimeRow {
                method,
                fit_ms: mean(&f).unwrap_or(f64::NAN),
                predict_ms: mean(&p).unwrap_or(f64::NAN),
                metric_mean: mean(&v),
            })
            .collect(),
    })
}

/// One rendered report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
pub enum Report {
    Cdd(ComparisonReport),
    Mcm(ComparisonReport),
    Pairwise(ComparisonReport),
    Relmae(RelativeMae),
    Runtime(RuntimeReport),
}

pub fn build_report(results: &ResultsTable, kind: ReportKind, opts: &ReportOptions) -> Result<Report> {
    Ok(match kind {
        ReportKind::Cdd => Report::Cdd(comparison_report(results, opts)?),
        ReportKind::Mcm => Report::Mcm(comparison_report(results, opts)?),
        ReportKind::Pairwise => Report::Pairwise(comparison_report(results, opts)?),
        ReportKind::Relmae => {
            if opts.metric != Metric::Mae {
                return Err(Error::InvalidArgument("relative MAE needs --metric mae".into()));
            }
            let (table, warnings) = results.score_table(Metric::Mae, opts.pairing)?;
            let mut r = relative_mae(&table, opts.relmae_formula)?;
            r.warnings.extend(warnings);
            Report::Relmae(r)
        }
        ReportKind::Runtime => Report::Runtime(runtime_report(results, opts.metric)?),
    })
}

impl Report {
    pub fn kind(&self) -> ReportKind {
        match self {
            Report::Cdd(_) => ReportKind::Cdd,
            Report::Mcm(_) => ReportKind::Mcm,
            Report::Pairwise(_) => ReportKind::Pairwise,
            Report::Relmae(_) => ReportKind::Relmae,
            Report::Runtime(_) => ReportKind::Runtime,
        }
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        match self {
            Report::Cdd(r) => {
                header(&mut s, r);
                let mut order: Vec<usize> = (0..r.methods.len()).collect();
                order.sort_by(|&a, &b| r.mean_ranks[a].total_cmp(&r.mean_ranks[b]));
                let _ = writeln!(s, "mean rank  method");
                for i in order {
                    let _ = writeln!(s, "{:9.4}  {}", r.mean_ranks[i], r.methods[i]);
                }
                let _ = writeln!(s, "cliques (no Holm-significant difference at {}):", r.alpha);
                for c in &r.cliques {
                    let _ = writeln!(s, "  [{}]", c.join(", "));
                }
            }
            Report::Mcm(r) => {
                header(&mut s, r);
                let _ = writeln!(s, "row vs col: mean(row - col) | wins/ties/losses for row | Wilcoxon p");
                for c in &r.mcm_cells {
                    if c.row != c.col {
                        let _ = writeln!(
                            s,
                            "{} vs {}: {:+.4} | {}/{}/{} | {:.4}",
                            c.row, c.col, c.mean_diff, c.wins, c.ties, c.losses, c.p_value
                        );
                    }
                }
            }
            Report::Pairwise(r) => {
                header(&mut s, r);
                let _ = writeln!(s, "pair  n  p  p_holm");
                for p in &r.pairwise {
                    let mark = if p.significant { " *" } else { "" };
                    let _ = writeln!(s, "{} vs {}  {}  {:.6}  {:.6}{mark}", p.a, p.b, p.n_datasets, p.p_value, p.p_holm);
                }
            }
            Report::Relmae(r) => {
                let _ = writeln!(s, "relative MAE ({:?}) over {} datasets", r.formula, r.datasets.len());
                for (m, vals) in r.methods.iter().zip(&r.values) {
                    let mut v: Vec<f64> = vals.iter().flatten().copied().collect();
                    v.sort_by(f64::total_cmp);
                    if v.is_empty() {
                        let _ = writeln!(s, "{m}: no values");
                        continue;
                    }
                    let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
                    let _ = writeln!(
                        s,
                        "{m}: min {:.4}  q1 {:.4}  median {:.4}  q3 {:.4}  max {:.4}",
                        v[0],
                        q(0.25),
                        q(0.5),
                        q(0.75),
                        v[v.len() - 1]
                    );
                }
                warnings(&mut s, &r.warnings);
            }
            Report::Runtime(r) => {
                let _ = writeln!(s, "method  fit_ms  predict_ms  mean {}", r.metric.name());
                for row in &r.rows {
                    let m = row.metric_mean.map_or("NA".to_string(), |v| format!("{v:.4}"));
                    let _ = writeln!(s, "{}  {:.1}  {:.1}  {m}", row.method, row.fit_ms, row.predict_ms);
                }
            }
        }
        s
    }

    /// Writes `<kind>_<metric>.json` and `.txt` under `dir`.
    pub fn write(&self, dir: &Path, metric: Metric) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = format!("{}_{}", self.kind().name(), metric.name());
        let json = dir.join(format!("{stem}.json"));
        let text = dir.join(format!("{stem}.txt"));
        std::fs::write(&json, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&text, self.render_text()).map_err(|e| Error::io(&text, e))?;
        Ok((json, text))
    }
}

fn header(s: &mut String, r: &ComparisonReport) {
    let dir = if r.higher_is_better { "higher" } else { "lower" };
    let _ = writeln!(
        s,
        "metric {} ({dir} is better), {} units paired by {:?}, {}",
        r.metric.name(),
        r.units,
        r.pairing,
        r.aggregation
    );
    warnings(s, &r.warnings);
}

fn warnings(s: &mut String, w: &[String]) {
    for line in w {
        let _ = writeln!(s, "warning: {line}");
    }
}
