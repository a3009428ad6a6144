use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Columns whose standard deviation falls below this are mapped to zero.
pub const MIN_STD: f64 = 1e-12;

/// Column-wise standardisation with population statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::EmptyInput);
        }
        let n = x.rows() as f64;
        let mut mean = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for r in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Scaler { mean, std })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.cols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            self.transform_row(out.row_mut(i));
        }
        Ok(out)
    }

    pub(crate) fn transform_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = if *s < MIN_STD { 0.0 } else { (*v - m) / s };
        }
    }
}

pub fn fit_scaler(x: &Matrix) -> Result<Scaler> {
    Scaler::fit(x)
}

pub fn apply_scaler(scaler: &Scaler, x: &Matrix) -> Result<Matrix> {
    scaler.transform(x)
}
