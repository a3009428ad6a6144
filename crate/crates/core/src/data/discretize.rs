//! Turning continuous targets into ordered classes.
//!
//! All binnings use right-closed intervals: a value equal to an edge belongs
//! to the lower class.

use crate::{Error, Result};

/// Inner edges of the weekly stock-return classes
/// `(−∞, −0.05], (−0.05, −0.02], (−0.02, 0.02], (0.02, 0.05], (0.05, ∞)`.
pub const RETURN_THRESHOLDS: [f64; 4] = [-0.05, -0.02, 0.02, 0.05];

/// Class index in `1..=edges.len() + 1` for sorted inner `edges`.
pub fn discretize_thresholds(value: f64, edges: &[f64]) -> usize {
    1 + edges.iter().filter(|&&e| value > e).count()
}

/// Stock-return class in `1..=5`.
pub fn discretize_returns(value: f64) -> usize {
    discretize_thresholds(value, &RETURN_THRESHOLDS)
}

/// Inner edges splitting `[min, max]` of `values` into `bins` equal-width
/// intervals.
pub fn uniform_edges(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidArgument("need at least two bins".into()));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::Degenerate("constant input cannot be binned".into()));
    }
    let width = (max - min) / bins as f64;
    Ok((1..bins).map(|k| min + k as f64 * width).collect())
}

/// Splits `[min, max]` into `bins` equal-width intervals.
pub fn discretize_uniform(values: &[f64], bins: usize) -> Result<Vec<usize>> {
    let edges = uniform_edges(values, bins)?;
    // the maximum exceeds every inner edge, so it lands in the top bin
    Ok(values.iter().map(|&v| discretize_thresholds(v, &edges)).collect())
}
