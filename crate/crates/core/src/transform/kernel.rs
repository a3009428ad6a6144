use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesInstance;
use crate::{Error, Result};

/// One dilated convolution kernel.
///
/// `padding` is the number of zeros added at *each* end of the series.
/// `channels` holds 0-based channel indices whose responses are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub weights: Vec<f64>,
    pub dilation: usize,
    pub padding: usize,
    pub bias: f64,
    pub channels: Vec<usize>,
}

impl Kernel {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Distance covered by one kernel application, `(n − 1)·d + 1`.
    pub fn span(&self) -> usize {
        (self.len() - 1) * self.dilation + 1
    }

    /// Output length for an input of length `t`, or an error if the kernel
    /// does not fit.
    pub fn output_len(&self, t: usize) -> Result<usize> {
        let padded = t + 2 * self.padding;
        if self.is_empty() || self.dilation == 0 || self.span() > padded {
            return Err(Error::KernelTooLong {
                span: if self.is_empty() { 0 } else { self.span() },
                padded,
            });
        }
        Ok(padded - self.span() + 1)
    }

    /// Unbiased response of one channel, added into `out`.
    pub(crate) fn accumulate(&self, series: &[f64], out: &mut [f64]) {
        let t = series.len() as isize;
        let p = self.padding as isize;
        let d = self.dilation as isize;
        for (j, o) in out.iter_mut().enumerate() {
            let start = j as isize - p;
            let mut s = 0.0;
            for (k, &w) in self.weights.iter().enumerate() {
                let idx = start + k as isize * d;
                if idx >= 0 && idx < t {
                    s += w * series[idx as usize];
                }
            }
            *o += s;
        }
    }

    /// Response summed over this kernel's channels, bias included.
    pub fn apply(&self, instance: &TimeSeriesInstance) -> Result<Vec<f64>> {
        let len = self.output_len(instance.len())?;
        let mut out = vec![self.bias; len];
        for &c in &self.channels {
            if c >= instance.n_channels() {
                return Err(Error::DimensionMismatch {
                    expected: instance.n_channels(),
                    actual: c + 1,
                });
            }
            self.accumulate(instance.channel(c), &mut out);
        }
        Ok(out)
    }
}

/// Sliding dot product `z_j = b + Σ_k w_k · s[j + k·d]` over the series
/// zero-padded by `kernel.padding` at both ends.
pub fn convolve(series: &[f64], kernel: &Kernel) -> Result<Vec<f64>> {
    let len = kernel.output_len(series.len())?;
    let mut out = vec![kernel.bias; len];
    kernel.accumulate(series, &mut out);
    Ok(out)
}
