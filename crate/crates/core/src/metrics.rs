//! Ordinal classification metrics over 1-based labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check(y: &[usize], pred: &[usize]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: pred.len(),
        });
    }
    if y.iter().chain(pred).any(|&l| l == 0) {
        return Err(Error::InvalidArgument("labels are 1-based".into()));
    }
    Ok(())
}

fn infer_classes(y: &[usize], pred: &[usize]) -> usize {
    y.iter().chain(pred).copied().max().unwrap_or(0)
}

/// Correct classification rate.
pub fn ccr(y: &[usize], pred: &[usize]) -> Result<f64> {
    check(y, pred)?;
    let hits = y.iter().zip(pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Mean absolute error on the label scale.
pub fn mae(y: &[usize], pred: &[usize]) -> Result<f64> {
    check(y, pred)?;
    let total: usize = y.iter().zip(pred).map(|(&a, &b)| a.abs_diff(b)).sum();
    Ok(total as f64 / y.len() as f64)
}

/// Fraction of predictions at most one class away from the truth.
pub fn one_off(y: &[usize], pred: &[usize]) -> Result<f64> {
    check(y, pred)?;
    let hits = y.iter().zip(pred).filter(|(&a, &b)| a.abs_diff(b) <= 1).count();
    Ok(hits as f64 / y.len() as f64)
}

/// 1-OFF as the mass of the tridiagonal band of the confusion matrix over
/// its total.
pub fn one_off_banded(y: &[usize], pred: &[usize]) -> Result<f64> {
    let cm = confusion(y, pred, infer_classes(y, pred))?;
    let q = cm.n_classes();
    let mut band = 0u64;
    for i in 0..q {
        for j in i.saturating_sub(1)..(i + 2).min(q) {
            band += cm.counts[i * q + j];
        }
    }
    Ok(band as f64 / cm.total() as f64)
}

/// Quadratic weighted kappa with `Q` inferred from the largest label seen.
pub fn qwk(y: &[usize], pred: &[usize]) -> Result<f64> {
    qwk_with_classes(y, pred, infer_classes(y, pred))
}

/// Quadratic weighted kappa over `n_classes` classes. Errors when the
/// expected disagreement is zero.
pub fn qwk_with_classes(y: &[usize], pred: &[usize], n_classes: usize) -> Result<f64> {
    let cm = confusion(y, pred, n_classes)?;
    let q = n_classes;
    if q < 2 {
        return Err(Error::Degenerate("QWK needs at least two classes".into()));
    }
    let n = cm.total() as f64;
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let scale = ((q - 1) * (q - 1)) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..q {
        for j in 0..q {
            let w = (i.abs_diff(j) * i.abs_diff(j)) as f64 / scale;
            num += w * cm.counts[i * q + j] as f64;
            den += w * rows[i] as f64 * cols[j] as f64 / n;
        }
    }
    if den == 0.0 {
        return Err(Error::Degenerate(
            "QWK undefined: expected disagreement is zero".into(),
        ));
    }
    Ok(1.0 - num / den)
}

/// `counts[i][j]` = number of samples with true class `i + 1` predicted as `j + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, true_label: usize, predicted: usize) -> u64 {
        self.counts[(true_label - 1) * self.n_classes + predicted - 1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.n_classes).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let q = self.n_classes;
        (0..q).map(|j| (0..q).map(|i| self.counts[i * q + j]).sum()).collect()
    }
}

pub fn confusion(y: &[usize], pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    check(y, pred)?;
    if let Some(&bad) = y.iter().chain(pred).find(|&&l| l > n_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside 1..={n_classes}"
        )));
    }
    let mut counts = vec![0u64; n_classes * n_classes];
    for (&a, &b) in y.iter().zip(pred) {
        counts[(a - 1) * n_classes + b - 1] += 1;
    }
    Ok(ConfusionMatrix { n_classes, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ccr,
    Mae,
    Qwk,
    OneOff,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ccr, Metric::Mae, Metric::Qwk, Metric::OneOff];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ccr => "ccr",
            Metric::Mae => "mae",
            Metric::Qwk => "qwk",
            Metric::OneOff => "one_off",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Mae)
    }

    pub fn evaluate(self, y: &[usize], pred: &[usize], n_classes: usize) -> Result<f64> {
        match self {
            Metric::Ccr => ccr(y, pred),
            Metric::Mae => mae(y, pred),
            Metric::Qwk => qwk_with_classes(y, pred, n_classes),
            Metric::OneOff => one_off(y, pred),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric {s:?}")))
    }
}
