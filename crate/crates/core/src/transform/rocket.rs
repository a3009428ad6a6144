use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_shape, ColumnMeta, FeatureMatrix, Kernel, Pooling, Representation, TransformConfig};
use crate::data::OrdinalDataset;
use crate::rng::stream_rng;
use crate::{Error, Matrix, Result};

const LENGTHS: [usize; 3] = [7, 9, 11];
const MIN_LENGTH: usize = 12;

/// Draws `num_kernels` random kernels for series of length `series_length`
/// with `n_channels` channels. Kernel `i` depends only on `(seed, i)`.
pub fn generate_rocket_kernels(
    series_length: usize,
    n_channels: usize,
    num_kernels: usize,
    seed: u64,
    center_weights: bool,
) -> Result<Vec<Kernel>> {
    if series_length < MIN_LENGTH {
        return Err(Error::SeriesTooShort {
            length: series_length,
            required: MIN_LENGTH,
        });
    }
    if num_kernels == 0 || n_channels == 0 {
        return Err(Error::InvalidArgument(
            "need at least one kernel and one channel".into(),
        ));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok((0..num_kernels)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let n = LENGTHS[rng.random_range(0..LENGTHS.len())];
            let mut weights: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            if center_weights {
                let mean = weights.iter().sum::<f64>() / n as f64;
                weights.iter_mut().for_each(|w| *w -= mean);
            }
            let bias = rng.random_range(-1.0..1.0);
            let a = ((series_length - 1) as f64 / (n - 1) as f64).log2();
            let x = a * rng.random::<f64>();
            let dilation = (2f64.powf(x) as usize).max(1);
            let padding = if rng.random_bool(0.5) {
                (n - 1) * dilation / 2
            } else {
                0
            };
            let channels = if n_channels == 1 {
                vec![0]
            } else {
                let k = rng.random_range(1..=n_channels);
                let mut c = sample(&mut rng, n_channels, k).into_vec();
                c.sort_unstable();
                c
            };
            Kernel {
                weights,
                dilation,
                padding,
                bias,
                channels,
            }
        })
        .collect())
}

/// ROCKET: random kernels, each pooled with PPV and GMP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rocket {
    series_length: usize,
    n_channels: usize,
    kernels: Vec<Kernel>,
}

impl Rocket {
    pub fn fit(config: &TransformConfig, train: &OrdinalDataset) -> Result<Self> {
        let kernels = generate_rocket_kernels(
            train.series_length(),
            train.n_channels(),
            config.num_kernels,
            config.seed,
            config.center_weights,
        )?;
        Ok(Rocket {
            series_length: train.series_length(),
            n_channels: train.n_channels(),
            kernels,
        })
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn num_features(&self) -> usize {
        2 * self.kernels.len()
    }

    pub fn column_meta(&self) -> Vec<ColumnMeta> {
        self.kernels
            .iter()
            .enumerate()
            .flat_map(|(i, k)| {
                [Pooling::Ppv, Pooling::Gmp].map(|pooling| ColumnMeta::Kernel {
                    kernel: i,
                    pooling,
                    dilation: k.dilation,
                    padded: k.padding > 0,
                    representation: Representation::Base,
                })
            })
            .collect()
    }

    pub fn transform(&self, data: &OrdinalDataset) -> Result<FeatureMatrix> {
        check_shape(data, self.n_channels, self.series_length)?;
        let width = self.num_features();
        let rows: Vec<Vec<f64>> = data
            .instances()
            .par_iter()
            .map(|inst| {
                let mut row = Vec::with_capacity(width);
                let mut buf = Vec::new();
                for k in &self.kernels {
                    let len = k.output_len(inst.len()).expect("dilation bounded by fit");
                    buf.clear();
                    buf.resize(len, k.bias);
                    for &c in &k.channels {
                        k.accumulate(inst.channel(c), &mut buf);
                    }
                    let positive = buf.iter().filter(|&&v| v > 0.0).count();
                    row.push(positive as f64 / len as f64);
                    row.push(buf.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                }
                row
            })
            .collect();
        let values = Matrix::from_rows(&rows)?;
        Ok(FeatureMatrix::new(values, self.column_meta()))
    }
}

/// Fits ROCKET on `train` and transforms both sets.
pub fn rocket_transform(
    train: &OrdinalDataset,
    test: &OrdinalDataset,
    config: &TransformConfig,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let rocket = Rocket::fit(config, train)?;
    Ok((rocket.transform(train)?, rocket.transform(test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{gmp, ppv};

    #[test]
    fn dilation_law_and_lengths() {
        for t in [12usize, 50, 128, 640] {
            let ks = generate_rocket_kernels(t, 1, 500, 3, true).unwrap();
            for k in &ks {
                let n = k.len();
                assert!(LENGTHS.contains(&n));
                let bound = (t - 1) as f64 / (n - 1) as f64;
                assert!(k.dilation >= 1 && k.dilation as f64 <= bound + 1e-12);
                assert!(k.padding == 0 || k.padding == (n - 1) * k.dilation / 2);
                assert!((-1.0..1.0).contains(&k.bias));
                assert!(k.weights.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn t128_n9_dilations_below_16() {
        let ks = generate_rocket_kernels(128, 1, 2000, 11, true).unwrap();
        let max9 = ks.iter().filter(|k| k.len() == 9).map(|k| k.dilation).max().unwrap();
        assert!(max9 <= 15);
        assert!(max9 >= 8, "x ~ U(0, A) should reach the upper octave");
    }

    #[test]
    fn seeded_and_order_free() {
        let a = generate_rocket_kernels(100, 3, 50, 9, true).unwrap();
        let b = generate_rocket_kernels(100, 3, 50, 9, true).unwrap();
        assert_eq!(a, b);
        // kernel i is independent of how many kernels were requested
        let c = generate_rocket_kernels(100, 3, 10, 9, true).unwrap();
        assert_eq!(&a[..10], &c[..]);
        assert!(a.iter().all(|k| !k.channels.is_empty() && k.channels.iter().all(|&c| c < 3)));
    }

    #[test]
    fn short_series_rejected() {
        assert!(generate_rocket_kernels(11, 1, 5, 0, true).is_err());
    }

    #[test]
    fn features_match_reference_pooling() {
        let ds = crate::transform::tests_support::toy_dataset(6, 2, 30, 1);
        let config = TransformConfig {
            num_kernels: 3,
            ..TransformConfig::rocket()
        };
        let (tr, te) = rocket_transform(&ds, &ds, &config).unwrap();
        assert_eq!(tr.cols(), 6);
        assert_eq!(tr, te);
        let rocket = Rocket::fit(&config, &ds).unwrap();
        for (i, inst) in ds.instances().iter().enumerate() {
            for (j, k) in rocket.kernels().iter().enumerate() {
                let z = k.apply(inst).unwrap();
                assert_eq!(tr.values().get(i, 2 * j), ppv(&z).unwrap());
                assert_eq!(tr.values().get(i, 2 * j + 1), gmp(&z).unwrap());
            }
        }
    }
}
