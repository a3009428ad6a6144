//! Comparisons of several methods over a common set of datasets.

use serde::{Deserialize, Serialize};

use super::{holm_adjust, wilcoxon_signed_rank, average_ranks, WilcoxonResult};
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;
/// Per-dataset differences within this count as ties.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Scores of each method on each dataset (or dataset × resample pair),
/// already aggregated. `values[m][d]` is `None` when missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub higher_is_better: bool,
}

impl ScoreTable {
    pub fn new(
        methods: Vec<String>,
        datasets: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
        higher_is_better: bool,
    ) -> Result<Self> {
        if values.len() != methods.len() {
            return Err(Error::DimensionMismatch {
                expected: methods.len(),
                actual: values.len(),
            });
        }
        if let Some(r) = values.iter().find(|r| r.len() != datasets.len()) {
            return Err(Error::DimensionMismatch {
                expected: datasets.len(),
                actual: r.len(),
            });
        }
        Ok(ScoreTable {
            methods,
            datasets,
            values,
            higher_is_better,
        })
    }

    fn require_two(&self) -> Result<()> {
        if self.methods.len() < 2 {
            return Err(Error::InvalidArgument("comparisons need at least two methods".into()));
        }
        Ok(())
    }

    /// Datasets where every method has a value.
    pub fn complete_datasets(&self) -> Vec<usize> {
        (0..self.datasets.len())
            .filter(|&d| self.values.iter().all(|r| r[d].is_some()))
            .collect()
    }

    /// Paired values of methods `a` and `b` over datasets where both exist.
    pub fn paired(&self, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
        self.values[a]
            .iter()
            .zip(&self.values[b])
            .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
            .unzip()
    }

    fn missing_warnings(&self) -> Vec<String> {
        (0..self.datasets.len())
            .filter_map(|d| {
                let missing: Vec<&str> = self
                    .methods
                    .iter()
                    .zip(&self.values)
                    .filter(|(_, r)| r[d].is_none())
                    .map(|(m, _)| m.as_str())
                    .collect();
                (!missing.is_empty()).then(|| format!("{}: missing for {}", self.datasets[d], missing.join(", ")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub methods: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub datasets_used: usize,
    pub warnings: Vec<String>,
}

/// Average rank of each method (1 = best) over datasets where all methods
/// have a value.
pub fn mean_ranks(table: &ScoreTable) -> Result<RankSummary> {
    table.require_two()?;
    let used = table.complete_datasets();
    let mut warnings = table.missing_warnings();
    if used.is_empty() {
        return Err(Error::Degenerate("no dataset has scores for every method".into()));
    }
    if used.len() < table.datasets.len() {
        warnings.push(format!("ranks use {} of {} datasets", used.len(), table.datasets.len()));
    }
    let m = table.methods.len();
    let mut sum = vec![0.0; m];
    for &d in &used {
        let col: Vec<f64> = table
            .values
            .iter()
            .map(|r| {
                let v = r[d].unwrap_or(f64::NAN);
                if table.higher_is_better {
                    -v
                } else {
                    v
                }
            })
            .collect();
        for (s, r) in sum.iter_mut().zip(average_ranks(&col)) {
            *s += r;
        }
    }
    Ok(RankSummary {
        methods: table.methods.clone(),
        mean_ranks: sum.into_iter().map(|s| s / used.len() as f64).collect(),
        datasets_used: used.len(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub n_datasets: usize,
    pub p_value: f64,
    pub p_holm: f64,
    pub significant: bool,
    pub degenerate: bool,
}

/// Wilcoxon test for every unordered pair, Holm-adjusted over all pairs.
pub fn pairwise_tests(table: &ScoreTable, alpha: f64) -> Result<Vec<PairwiseTest>> {
    table.require_two()?;
    let m = table.methods.len();
    let mut raw: Vec<(usize, usize, usize, WilcoxonResult)> = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let (x, y) = table.paired(a, b);
            let r = if x.is_empty() {
                WilcoxonResult {
                    p_value: 1.0,
                    statistic: 0.0,
                    n: 0,
                    exact: true,
                    degenerate: true,
                }
            } else {
                wilcoxon_signed_rank(&x, &y)?
            };
            raw.push((a, b, x.len(), r));
        }
    }
    let adjusted = holm_adjust(&raw.iter().map(|r| r.3.p_value).collect::<Vec<_>>())?;
    Ok(raw
        .into_iter()
        .zip(adjusted)
        .map(|((a, b, n, r), p_holm)| PairwiseTest {
            a: table.methods[a].clone(),
            b: table.methods[b].clone(),
            n_datasets: n,
            p_value: r.p_value,
            p_holm,
            significant: p_holm < alpha,
            degenerate: r.degenerate,
        })
        .collect())
}

/// Groups of methods with no significant pairwise difference. Starting from
/// each method in rank order, a clique takes the following methods while
/// each stays indistinguishable from every member; cliques contained in
/// another are dropped. Every method ends up in at least one clique.
pub fn build_cliques(table: &ScoreTable, alpha: f64) -> Result<Vec<Vec<String>>> {
    let ranks = mean_ranks(table)?;
    let tests = pairwise_tests(table, alpha)?;
    let m = table.methods.len();
    let mut sig = vec![vec![false; m]; m];
    for t in &tests {
        let a = table.methods.iter().position(|x| *x == t.a).unwrap_or(0);
        let b = table.methods.iter().position(|x| *x == t.b).unwrap_or(0);
        sig[a][b] = t.significant;
        sig[b][a] = t.significant;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| ranks.mean_ranks[a].total_cmp(&ranks.mean_ranks[b]).then(a.cmp(&b)));
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for start in 0..m {
        let mut clique = vec![order[start]];
        for &next in &order[start + 1..] {
            if clique.iter().any(|&c| sig[c][next]) {
                break;
            }
            clique.push(next);
        }
        if !cliques.iter().any(|c| clique.iter().all(|x| c.contains(x))) {
            cliques.push(clique);
        }
    }
    Ok(cliques
        .into_iter()
        .map(|c| c.into_iter().map(|i| table.methods[i].clone()).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmCell {
    pub row: String,
    pub col: String,
    /// Mean of `row − col` over shared datasets.
    pub mean_diff: f64,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub p_value: f64,
    pub degenerate: bool,
}

/// Multi-comparison matrix cells for every ordered pair, including the
/// diagonal. Wins are counted from the row method's point of view.
pub fn mcm(table: &ScoreTable) -> Result<Vec<McmCell>> {
    table.require_two()?;
    let m = table.methods.len();
    let mut cells = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let (x, y) = table.paired(a, b);
            if x.is_empty() {
                return Err(Error::Degenerate(format!(
                    "{} and {} share no dataset",
                    table.methods[a], table.methods[b]
                )));
            }
            let (mut wins, mut ties, mut losses) = (0, 0, 0);
            for (u, v) in x.iter().zip(&y) {
                let d = if table.higher_is_better { u - v } else { v - u };
                if d.abs() <= TIE_TOLERANCE {
                    ties += 1;
                } else if d > 0.0 {
                    wins += 1;
                } else {
                    losses += 1;
                }
            }
            let w = wilcoxon_signed_rank(&x, &y)?;
            cells.push(McmCell {
                row: table.methods[a].clone(),
                col: table.methods[b].clone(),
                mean_diff: x.iter().zip(&y).map(|(u, v)| u - v).sum::<f64>() / x.len() as f64,
                wins,
                ties,
                losses,
                p_value: w.p_value,
                degenerate: w.degenerate,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelativeMaeFormula {
    /// `mae / (mae + median)`: 0.5 at the median.
    #[default]
    Balanced,
    /// `mae / median`: 1 at the median.
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeMae {
    pub formula: RelativeMaeFormula,
    pub datasets: Vec<String>,
    /// `values[m][d]`; `None` when undefined for that dataset.
    pub values: Vec<Vec<Option<f64>>>,
    pub methods: Vec<String>,
    pub warnings: Vec<String>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Each method's MAE scaled by the median MAE of all methods on the same
/// dataset. Datasets with any missing MAE are skipped.
pub fn relative_mae(table: &ScoreTable, formula: RelativeMaeFormula) -> Result<RelativeMae> {
    if table.higher_is_better {
        return Err(Error::InvalidArgument("relative MAE expects a lower-is-better table".into()));
    }
    let used = table.complete_datasets();
    let mut warnings = table.missing_warnings();
    let mut values = vec![Vec::with_capacity(used.len()); table.methods.len()];
    for &d in &used {
        let col: Vec<f64> = table.values.iter().map(|r| r[d].unwrap_or(0.0)).collect();
        let med = median(&mut col.clone());
        for (m, &v) in col.iter().enumerate() {
            let r = match formula {
                RelativeMaeFormula::Balanced if v + med == 0.0 => Some(0.5),
                RelativeMaeFormula::Balanced => Some(v / (v + med)),
                RelativeMaeFormula::Ratio if med == 0.0 && v == 0.0 => Some(1.0),
                RelativeMaeFormula::Ratio if med == 0.0 => {
                    warnings.push(format!("{}: median MAE is 0, ratio undefined for {}", table.datasets[d], table.methods[m]));
                    None
                }
                RelativeMaeFormula::Ratio => Some(v / med),
            };
            values[m].push(r);
        }
    }
    Ok(RelativeMae {
        formula,
        datasets: used.iter().map(|&d| table.datasets[d].clone()).collect(),
        values,
        methods: table.methods.clone(),
        warnings,
    })
}
