//! Random and deterministic convolutional kernel transforms.
//!
//! | variant     | kernel length | weights      | pooling                 | default width |
//! |-------------|---------------|--------------|-------------------------|---------------|
//! | ROCKET      | 7, 9 or 11    | N(0, 1)      | PPV, GMP                | 20,000        |
//! | MiniROCKET  | 9             | {−1, 2}      | PPV                     | 9,996         |
//! | MultiROCKET | 9             | {−1, 2}      | PPV, MPV, MIPV, LSPV ×2 | 49,728        |
//!
//! MultiROCKET convolves both the series and its first-order difference.

mod io;
mod kernel;
mod minirocket;
mod multirocket;
mod pooling;
mod rocket;

pub use io::{read_feature_matrix, write_feature_matrix};
pub use kernel::{convolve, Kernel};
pub use minirocket::{minirocket_kernel_indices, minirocket_transform, MiniRocket, NUM_MINIROCKET_KERNELS};
pub use multirocket::{multirocket_transform, MultiRocket};
pub use pooling::{gmp, lspv, mipv, mpv, ppv};
pub use rocket::{generate_rocket_kernels, rocket_transform, Rocket};

use serde::{Deserialize, Serialize};

use crate::data::OrdinalDataset;
use crate::{Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Ppv,
    Gmp,
    Mpv,
    Mipv,
    Lspv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Base,
    Diff,
}

/// Where a feature column came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnMeta {
    /// A raw series value (flattened input).
    Raw { channel: usize, time: usize },
    /// A pooled convolution output.
    Kernel {
        kernel: usize,
        pooling: Pooling,
        dilation: usize,
        padded: bool,
        representation: Representation,
    },
}

/// `N × F` feature table plus per-column provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    values: Matrix,
    column_meta: Vec<ColumnMeta>,
}

impl FeatureMatrix {
    pub fn new(values: Matrix, column_meta: Vec<ColumnMeta>) -> Self {
        assert_eq!(values.cols(), column_meta.len(), "one meta entry per column");
        FeatureMatrix {
            values,
            column_meta,
        }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn column_meta(&self) -> &[ColumnMeta] {
        &self.column_meta
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    /// Hex SHA-256 of the serialised column metadata; identifies the feature
    /// layout a model was trained on.
    pub fn provenance_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(&self.column_meta).expect("meta serialises");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Rocket,
    Minirocket,
    Multirocket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformConfig {
    pub variant: Variant,
    /// ROCKET kernel count (two features each).
    pub num_kernels: usize,
    /// Feature budget for MiniROCKET and MultiROCKET.
    pub num_features: usize,
    /// Upper bound on distinct dilations per kernel (MiniROCKET/MultiROCKET).
    pub max_dilations_per_kernel: usize,
    /// Mean-centre ROCKET weights after sampling.
    pub center_weights: bool,
    pub seed: u64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig::minirocket()
    }
}

impl TransformConfig {
    pub fn rocket() -> Self {
        TransformConfig {
            variant: Variant::Rocket,
            num_kernels: 10_000,
            num_features: 20_000,
            max_dilations_per_kernel: 32,
            center_weights: true,
            seed: 0,
        }
    }

    pub fn minirocket() -> Self {
        TransformConfig {
            variant: Variant::Minirocket,
            num_features: 10_000,
            ..TransformConfig::rocket()
        }
    }

    pub fn multirocket() -> Self {
        TransformConfig {
            variant: Variant::Multirocket,
            num_features: 50_000,
            ..TransformConfig::rocket()
        }
    }

    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Rocket => Self::rocket(),
            Variant::Minirocket => Self::minirocket(),
            Variant::Multirocket => Self::multirocket(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A transform whose kernels, dilations and biases are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FittedTransform {
    Rocket(Rocket),
    Minirocket(MiniRocket),
    Multirocket(MultiRocket),
}

impl FittedTransform {
    pub fn fit(config: &TransformConfig, train: &OrdinalDataset) -> Result<Self> {
        Ok(match config.variant {
            Variant::Rocket => FittedTransform::Rocket(Rocket::fit(config, train)?),
            Variant::Minirocket => FittedTransform::Minirocket(MiniRocket::fit(config, train)?),
            Variant::Multirocket => FittedTransform::Multirocket(MultiRocket::fit(config, train)?),
        })
    }

    pub fn transform(&self, data: &OrdinalDataset) -> Result<FeatureMatrix> {
        match self {
            FittedTransform::Rocket(t) => t.transform(data),
            FittedTransform::Minirocket(t) => t.transform(data),
            FittedTransform::Multirocket(t) => t.transform(data),
        }
    }

    pub fn num_features(&self) -> usize {
        match self {
            FittedTransform::Rocket(t) => t.num_features(),
            FittedTransform::Minirocket(t) => t.num_features(),
            FittedTransform::Multirocket(t) => t.num_features(),
        }
    }
}

/// Fits on `train` and transforms both sets.
pub fn transform_pair(
    config: &TransformConfig,
    train: &OrdinalDataset,
    test: &OrdinalDataset,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let fitted = FittedTransform::fit(config, train)?;
    Ok((fitted.transform(train)?, fitted.transform(test)?))
}

/// Checks that `data` has the shape a transform was fitted on.
pub(crate) fn check_shape(data: &OrdinalDataset, channels: usize, length: usize) -> Result<()> {
    if data.n_channels() != channels {
        return Err(crate::Error::DimensionMismatch {
            expected: channels,
            actual: data.n_channels(),
        });
    }
    if data.series_length() != length {
        return Err(crate::Error::DimensionMismatch {
            expected: length,
            actual: data.series_length(),
        });
    }
    Ok(())
}
