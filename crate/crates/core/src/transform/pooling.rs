//! Pooling operators over one convolution output `z`.
//!
//! Only strictly positive entries count as positive. When `z` has no
//! positive entry MPV is 0, MIPV is −1 and LSPV is 0.

use crate::{Error, Result};

fn non_empty(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        Err(Error::EmptyInput)
    } else {
        Ok(())
    }
}

/// Proportion of positive values.
pub fn ppv(z: &[f64]) -> Result<f64> {
    non_empty(z)?;
    Ok(z.iter().filter(|&&v| v > 0.0).count() as f64 / z.len() as f64)
}

/// Global max pooling.
pub fn gmp(z: &[f64]) -> Result<f64> {
    non_empty(z)?;
    Ok(z.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Mean of positive values.
pub fn mpv(z: &[f64]) -> Result<f64> {
    non_empty(z)?;
    let (sum, n) = z
        .iter()
        .filter(|&&v| v > 0.0)
        .fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Mean of the 0-based indices of positive values.
pub fn mipv(z: &[f64]) -> Result<f64> {
    non_empty(z)?;
    let (sum, n) = z
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .fold((0usize, 0usize), |(s, n), (i, _)| (s + i, n + 1));
    Ok(if n == 0 { -1.0 } else { sum as f64 / n as f64 })
}

/// Longest stretch of consecutive positive values.
pub fn lspv(z: &[f64]) -> Result<f64> {
    non_empty(z)?;
    let mut best = 0usize;
    let mut run = 0usize;
    for &v in z {
        if v > 0.0 {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    Ok(best as f64)
}

/// PPV, MPV, MIPV and LSPV of `c − threshold` in one pass, without
/// materialising the shifted output. `c` must be non-empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Pooled {
    pub ppv: f64,
    pub mpv: f64,
    pub mipv: f64,
    pub lspv: f64,
}

#[inline]
pub(crate) fn pool_shifted(c: &[f64], threshold: f64) -> Pooled {
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut index_sum = 0usize;
    let mut run = 0usize;
    let mut best = 0usize;
    for (i, &v) in c.iter().enumerate() {
        let z = v - threshold;
        if z > 0.0 {
            count += 1;
            sum += z;
            index_sum += i;
            run += 1;
            if run > best {
                best = run;
            }
        } else {
            run = 0;
        }
    }
    let n = count as f64;
    Pooled {
        ppv: n / c.len() as f64,
        mpv: if count == 0 { 0.0 } else { sum / n },
        mipv: if count == 0 { -1.0 } else { index_sum as f64 / n },
        lspv: best as f64,
    }
}

#[inline]
pub(crate) fn ppv_shifted(c: &[f64], threshold: f64) -> f64 {
    c.iter().filter(|&&v| v > threshold).count() as f64 / c.len() as f64
}
