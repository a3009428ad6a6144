//! MiniROCKET: 84 fixed length-9 kernels with weights in {−1, 2}, a fixed
//! set of dilations per input length, and biases taken from quantiles of
//! training convolution outputs.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pooling::{pool_shifted, ppv_shifted};
use super::{check_shape, ColumnMeta, FeatureMatrix, Kernel, Pooling, Representation, TransformConfig};
use crate::data::{OrdinalDataset, TimeSeriesInstance};
use crate::rng::{mix, stream_rng};
use crate::{Error, Matrix, Result};

pub const NUM_MINIROCKET_KERNELS: usize = 84;
const KERNEL_LENGTH: usize = 9;
const MIN_LENGTH: usize = 9;

const STREAM_CHANNELS: u64 = 0x6368_616e;
const STREAM_EXAMPLES: u64 = 0x6578_616d;

/// Positions of the three weights equal to 2, for all `C(9, 3)` kernels in
/// lexicographic order. The other six weights are −1.
pub fn minirocket_kernel_indices() -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(NUM_MINIROCKET_KERNELS);
    for a in 0..KERNEL_LENGTH {
        for b in a + 1..KERNEL_LENGTH {
            for c in b + 1..KERNEL_LENGTH {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn kernel_weights(idx: [usize; 3]) -> Vec<f64> {
    let mut w = vec![-1.0; KERNEL_LENGTH];
    for i in idx {
        w[i] = 2.0;
    }
    w
}

/// Dilations `⌊2^e⌋` for `e` evenly spaced over `[0, log2((T−1)/8)]`,
/// deduplicated, with the per-kernel feature budget spread over them.
pub(crate) fn fit_dilations(
    length: usize,
    features_per_kernel: usize,
    max_dilations: usize,
) -> (Vec<usize>, Vec<usize>) {
    let true_max = features_per_kernel.min(max_dilations).max(1);
    let multiplier = features_per_kernel as f64 / true_max as f64;
    let max_exponent = ((length - 1) as f64 / (KERNEL_LENGTH - 1) as f64).log2();
    let step = if true_max > 1 {
        max_exponent / (true_max - 1) as f64
    } else {
        0.0
    };
    let mut dilations: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..true_max {
        let e = if i + 1 == true_max && true_max > 1 {
            max_exponent
        } else {
            i as f64 * step
        };
        let d = 2f64.powf(e) as usize;
        match dilations.last() {
            Some(&last) if last == d => *counts.last_mut().unwrap() += 1,
            _ => {
                dilations.push(d);
                counts.push(1);
            }
        }
    }
    let mut per_dilation: Vec<usize> = counts
        .iter()
        .map(|&c| (c as f64 * multiplier) as usize)
        .collect();
    let mut remainder = features_per_kernel - per_dilation.iter().sum::<usize>();
    let mut i = 0;
    while remainder > 0 {
        per_dilation[i] += 1;
        remainder -= 1;
        i = (i + 1) % per_dilation.len();
    }
    (dilations, per_dilation)
}

/// Low-discrepancy points `frac(i·φ)`, `i = 1..=n`.
fn golden_quantiles(n: usize) -> Vec<f64> {
    let phi = (5f64.sqrt() + 1.0) / 2.0;
    (1..=n).map(|i| (i as f64 * phi) % 1.0).collect()
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Which pooled values each (kernel, dilation, bias) slot emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PoolSet {
    PpvOnly,
    /// PPV, MPV, MIPV, LSPV.
    Four,
}

impl PoolSet {
    fn ops(self) -> &'static [Pooling] {
        match self {
            PoolSet::PpvOnly => &[Pooling::Ppv],
            PoolSet::Four => &[Pooling::Ppv, Pooling::Mpv, Pooling::Mipv, Pooling::Lspv],
        }
    }
}

/// Shifted copies `X_k[t] = x[t + (k − 4)·d]` (zero outside the series) for
/// every channel, plus `A = −Σ_k X_k`.
struct Shifts {
    t: usize,
    /// `[channel][k][t]` flattened.
    shifted: Vec<f64>,
    /// `[channel][t]`.
    neg_sum: Vec<f64>,
}

impl Shifts {
    fn compute(inst: &TimeSeriesInstance, dilation: usize, shifts: &mut Shifts) {
        let t = inst.len();
        let c = inst.n_channels();
        shifts.t = t;
        shifts.shifted.clear();
        shifts.shifted.resize(c * KERNEL_LENGTH * t, 0.0);
        shifts.neg_sum.clear();
        shifts.neg_sum.resize(c * t, 0.0);
        let half = (KERNEL_LENGTH / 2) as isize;
        for ch in 0..c {
            let x = inst.channel(ch);
            let ns = &mut shifts.neg_sum[ch * t..(ch + 1) * t];
            for k in 0..KERNEL_LENGTH {
                let offset = (k as isize - half) * dilation as isize;
                let dst = &mut shifts.shifted[(ch * KERNEL_LENGTH + k) * t..(ch * KERNEL_LENGTH + k + 1) * t];
                // valid range of output positions j with 0 <= j + offset < t
                let lo = (-offset).max(0) as usize;
                let hi = ((t as isize - offset).min(t as isize)).max(0) as usize;
                for j in lo..hi.max(lo) {
                    let v = x[(j as isize + offset) as usize];
                    dst[j] = v;
                    ns[j] -= v;
                }
            }
        }
    }

    fn new() -> Self {
        Shifts {
            t: 0,
            shifted: Vec::new(),
            neg_sum: Vec::new(),
        }
    }

    /// Full-length ("same"-padded) response of one kernel summed over `channels`.
    fn response(&self, idx: [usize; 3], channels: &[usize], out: &mut Vec<f64>) {
        let t = self.t;
        out.clear();
        out.resize(t, 0.0);
        for &ch in channels {
            let a = &self.neg_sum[ch * t..(ch + 1) * t];
            let base = ch * KERNEL_LENGTH;
            let x0 = &self.shifted[(base + idx[0]) * t..(base + idx[0] + 1) * t];
            let x1 = &self.shifted[(base + idx[1]) * t..(base + idx[1] + 1) * t];
            let x2 = &self.shifted[(base + idx[2]) * t..(base + idx[2] + 1) * t];
            for j in 0..t {
                out[j] += a[j] + 3.0 * (x0[j] + x1[j] + x2[j]);
            }
        }
    }
}

/// Fitted dilations, channel subsets and bias thresholds for one input
/// representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct DilatedBank {
    series_length: usize,
    n_channels: usize,
    dilations: Vec<usize>,
    features_per_dilation: Vec<usize>,
    /// Per (dilation, kernel) channel subset.
    channels: Vec<Vec<usize>>,
    /// Quantile thresholds, ordered by dilation, kernel, then bias.
    thresholds: Vec<f64>,
}

impl DilatedBank {
    pub(crate) fn fit(
        instances: &[TimeSeriesInstance],
        features_per_kernel: usize,
        max_dilations: usize,
        seed: u64,
    ) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyInput)?;
        let (c, t) = (first.n_channels(), first.len());
        if t < MIN_LENGTH {
            return Err(Error::SeriesTooShort {
                length: t,
                required: MIN_LENGTH,
            });
        }
        if features_per_kernel == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature budget below {NUM_MINIROCKET_KERNELS}"
            )));
        }
        let (dilations, features_per_dilation) = fit_dilations(t, features_per_kernel, max_dilations);
        let kernels = minirocket_kernel_indices();
        let quantiles = golden_quantiles(NUM_MINIROCKET_KERNELS * features_per_kernel);

        let n_slots = dilations.len() * NUM_MINIROCKET_KERNELS;
        let channels: Vec<Vec<usize>> = (0..n_slots)
            .map(|slot| {
                if c == 1 {
                    return vec![0];
                }
                let mut rng = stream_rng(mix(seed, STREAM_CHANNELS), slot as u64);
                let upper = ((c.min(KERNEL_LENGTH) + 1) as f64).log2();
                let k = (2f64.powf(upper * rng.random::<f64>()) as usize).clamp(1, c);
                let mut s = sample(&mut rng, c, k).into_vec();
                s.sort_unstable();
                s
            })
            .collect();

        let mut thresholds = Vec::with_capacity(NUM_MINIROCKET_KERNELS * features_per_kernel);
        let mut shifts = Shifts::new();
        let mut response = Vec::new();
        let mut q_start = 0;
        for (di, (&d, &nf)) in dilations.iter().zip(&features_per_dilation).enumerate() {
            for (k, &idx) in kernels.iter().enumerate() {
                let slot = di * NUM_MINIROCKET_KERNELS + k;
                let mut rng = stream_rng(mix(seed, STREAM_EXAMPLES), slot as u64);
                let example = &instances[rng.random_range(0..instances.len())];
                Shifts::compute(example, d, &mut shifts);
                shifts.response(idx, &channels[slot], &mut response);
                response.sort_by(f64::total_cmp);
                thresholds.extend(
                    quantiles[q_start..q_start + nf]
                        .iter()
                        .map(|&q| quantile_sorted(&response, q)),
                );
                q_start += nf;
            }
        }
        Ok(DilatedBank {
            series_length: t,
            n_channels: c,
            dilations,
            features_per_dilation,
            channels,
            thresholds,
        })
    }

    pub(crate) fn n_slots(&self) -> usize {
        self.thresholds.len()
    }

    pub(crate) fn dilations(&self) -> &[usize] {
        &self.dilations
    }

    fn padded(di: usize, k: usize) -> bool {
        (di % 2 + k) % 2 == 0
    }

    pub(crate) fn column_meta(&self, pools: PoolSet, representation: Representation) -> Vec<ColumnMeta> {
        let mut meta = Vec::with_capacity(self.n_slots() * pools.ops().len());
        for (di, (&d, &nf)) in self.dilations.iter().zip(&self.features_per_dilation).enumerate() {
            for k in 0..NUM_MINIROCKET_KERNELS {
                for _ in 0..nf {
                    for &pooling in pools.ops() {
                        meta.push(ColumnMeta::Kernel {
                            kernel: k,
                            pooling,
                            dilation: d,
                            padded: Self::padded(di, k),
                            representation,
                        });
                    }
                }
            }
        }
        meta
    }

    /// Appends this instance's features to `out`.
    pub(crate) fn transform_instance(&self, inst: &TimeSeriesInstance, pools: PoolSet, out: &mut Vec<f64>) {
        let kernels = minirocket_kernel_indices();
        let mut shifts = Shifts::new();
        let mut response = Vec::with_capacity(inst.len());
        let mut b = 0;
        for (di, (&d, &nf)) in self.dilations.iter().zip(&self.features_per_dilation).enumerate() {
            Shifts::compute(inst, d, &mut shifts);
            let p = (KERNEL_LENGTH - 1) * d / 2;
            for (k, &idx) in kernels.iter().enumerate() {
                shifts.response(idx, &self.channels[di * NUM_MINIROCKET_KERNELS + k], &mut response);
                let z = if Self::padded(di, k) {
                    &response[..]
                } else {
                    &response[p..response.len() - p]
                };
                for &thr in &self.thresholds[b..b + nf] {
                    match pools {
                        PoolSet::PpvOnly => out.push(ppv_shifted(z, thr)),
                        PoolSet::Four => {
                            let r = pool_shifted(z, thr);
                            out.extend_from_slice(&[r.ppv, r.mpv, r.mipv, r.lspv]);
                        }
                    }
                }
                b += nf;
            }
        }
    }

    /// Every slot as a generic [`Kernel`], in feature order (one entry per bias).
    pub(crate) fn kernels(&self) -> Vec<Kernel> {
        let idx = minirocket_kernel_indices();
        let mut out = Vec::with_capacity(self.n_slots());
        let mut b = 0;
        for (di, (&d, &nf)) in self.dilations.iter().zip(&self.features_per_dilation).enumerate() {
            for (k, &positions) in idx.iter().enumerate() {
                for &thr in &self.thresholds[b..b + nf] {
                    out.push(Kernel {
                        weights: kernel_weights(positions),
                        dilation: d,
                        padding: if Self::padded(di, k) { (KERNEL_LENGTH - 1) * d / 2 } else { 0 },
                        bias: -thr,
                        channels: self.channels[di * NUM_MINIROCKET_KERNELS + k].clone(),
                    });
                }
                b += nf;
            }
        }
        out
    }

    pub(crate) fn check(&self, data: &OrdinalDataset) -> Result<()> {
        check_shape(data, self.n_channels, self.series_length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiniRocket {
    bank: DilatedBank,
}

impl MiniRocket {
    pub fn fit(config: &TransformConfig, train: &OrdinalDataset) -> Result<Self> {
        let bank = DilatedBank::fit(
            train.instances(),
            config.num_features / NUM_MINIROCKET_KERNELS,
            config.max_dilations_per_kernel,
            config.seed,
        )?;
        Ok(MiniRocket { bank })
    }

    pub fn num_features(&self) -> usize {
        self.bank.n_slots()
    }

    pub fn dilations(&self) -> &[usize] {
        self.bank.dilations()
    }

    /// One kernel per output column, biases included.
    pub fn kernels(&self) -> Vec<Kernel> {
        self.bank.kernels()
    }

    pub fn transform(&self, data: &OrdinalDataset) -> Result<FeatureMatrix> {
        self.bank.check(data)?;
        let rows: Vec<Vec<f64>> = data
            .instances()
            .par_iter()
            .map(|inst| {
                let mut row = Vec::with_capacity(self.num_features());
                self.bank.transform_instance(inst, PoolSet::PpvOnly, &mut row);
                row
            })
            .collect();
        Ok(FeatureMatrix::new(
            Matrix::from_rows(&rows)?,
            self.bank.column_meta(PoolSet::PpvOnly, Representation::Base),
        ))
    }
}

/// Fits MiniROCKET on `train` and transforms both sets.
pub fn minirocket_transform(
    train: &OrdinalDataset,
    test: &OrdinalDataset,
    config: &TransformConfig,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let m = MiniRocket::fit(config, train)?;
    Ok((m.transform(train)?, m.transform(test)?))
}
