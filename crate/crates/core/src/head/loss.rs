//! Losses over an `N × Q` matrix of class probabilities, with their
//! gradients with respect to those probabilities.

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Below this the QWK loss denominator is treated as zero.
pub const QWK_DENOMINATOR_GUARD: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadLoss {
    #[default]
    Qwk,
    CrossEntropy,
}

/// `ω[j][q] = (j − q)² / (Q − 1)²`.
pub fn qwk_penalty(n_classes: usize) -> Matrix {
    let q = n_classes;
    let scale = ((q - 1) * (q - 1)) as f64;
    let mut w = Matrix::zeros(q, q);
    for i in 0..q {
        for j in 0..q {
            w.set(i, j, (i.abs_diff(j) * i.abs_diff(j)) as f64 / scale);
        }
    }
    w
}

fn check(probs: &Matrix, labels: &[usize]) -> Result<()> {
    if probs.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if probs.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.rows(),
            actual: labels.len(),
        });
    }
    let q = probs.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > q) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 1..={q}")));
    }
    Ok(())
}

struct QwkParts {
    num: f64,
    den: f64,
    /// `β_j = Σ_q (N_q / N) ω[j][q]`, the derivative of the denominator
    /// with respect to any `P[i][j]`.
    beta: Vec<f64>,
}

fn qwk_parts(probs: &Matrix, labels: &[usize], penalty: &Matrix) -> Result<QwkParts> {
    check(probs, labels)?;
    let q = probs.cols();
    if penalty.rows() != q || penalty.cols() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            actual: penalty.rows(),
        });
    }
    let n = labels.len() as f64;
    let mut share = vec![0.0; q];
    for &l in labels {
        share[l - 1] += 1.0 / n;
    }
    let beta: Vec<f64> = (0..q)
        .map(|j| (0..q).map(|c| share[c] * penalty.get(j, c)).sum())
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for (row, &l) in probs.iter_rows().zip(labels) {
        let w = penalty.row(l - 1);
        for j in 0..q {
            num += w[j] * row[j];
            den += beta[j] * row[j];
        }
    }
    if den < QWK_DENOMINATOR_GUARD {
        return Err(Error::Degenerate(format!(
            "QWK loss denominator {den:e} below {QWK_DENOMINATOR_GUARD:e}"
        )));
    }
    Ok(QwkParts { num, den, beta })
}

/// QWK loss: observed over chance-expected weighted disagreement.
pub fn qwk_loss(probs: &Matrix, labels: &[usize]) -> Result<f64> {
    qwk_loss_with_penalty(probs, labels, &qwk_penalty(probs.cols()))
}

pub fn qwk_loss_with_penalty(probs: &Matrix, labels: &[usize], penalty: &Matrix) -> Result<f64> {
    let p = qwk_parts(probs, labels, penalty)?;
    Ok(p.num / p.den)
}

/// `∂L/∂P[i][j] = ω[y_i][j] / D − (Num / D²) β_j`.
pub fn qwk_loss_gradient(probs: &Matrix, labels: &[usize]) -> Result<Matrix> {
    let penalty = qwk_penalty(probs.cols());
    let p = qwk_parts(probs, labels, &penalty)?;
    let q = probs.cols();
    let mut g = Matrix::zeros(probs.rows(), q);
    let scale = p.num / (p.den * p.den);
    for (i, &l) in labels.iter().enumerate() {
        let w = penalty.row(l - 1);
        let row = g.row_mut(i);
        for j in 0..q {
            row[j] = w[j] / p.den - scale * p.beta[j];
        }
    }
    Ok(g)
}

/// Mean negative log-likelihood of the true classes.
pub fn cross_entropy_loss(probs: &Matrix, labels: &[usize]) -> Result<f64> {
    check(probs, labels)?;
    let n = labels.len() as f64;
    Ok(probs
        .iter_rows()
        .zip(labels)
        .map(|(r, &l)| -r[l - 1].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / n)
}

pub fn cross_entropy_gradient(probs: &Matrix, labels: &[usize]) -> Result<Matrix> {
    check(probs, labels)?;
    let n = labels.len() as f64;
    let mut g = Matrix::zeros(probs.rows(), probs.cols());
    for (i, &l) in labels.iter().enumerate() {
        g.set(i, l - 1, -1.0 / (n * probs.get(i, l - 1).max(f64::MIN_POSITIVE)));
    }
    Ok(g)
}

impl HeadLoss {
    pub fn value(self, probs: &Matrix, labels: &[usize]) -> Result<f64> {
        match self {
            HeadLoss::Qwk => qwk_loss(probs, labels),
            HeadLoss::CrossEntropy => cross_entropy_loss(probs, labels),
        }
    }

    pub fn gradient(self, probs: &Matrix, labels: &[usize]) -> Result<Matrix> {
        match self {
            HeadLoss::Qwk => qwk_loss_gradient(probs, labels),
            HeadLoss::CrossEntropy => cross_entropy_gradient(probs, labels),
        }
    }
}
