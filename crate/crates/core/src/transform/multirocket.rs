//! MultiROCKET: the MiniROCKET kernels applied to the series and to its
//! first-order difference, each output pooled four ways.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minirocket::{DilatedBank, PoolSet};
use super::{FeatureMatrix, Representation, TransformConfig, NUM_MINIROCKET_KERNELS};
use crate::data::{OrdinalDataset, TimeSeriesInstance};
use crate::rng::mix;
use crate::{Error, Matrix, Result};

const POOLS_PER_SLOT: usize = 4;
const REPRESENTATIONS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRocket {
    base: DilatedBank,
    diff: DilatedBank,
}

impl MultiRocket {
    pub fn fit(config: &TransformConfig, train: &OrdinalDataset) -> Result<Self> {
        if train.series_length() < 10 {
            return Err(Error::SeriesTooShort {
                length: train.series_length(),
                required: 10,
            });
        }
        let per_kernel = config.num_features / (REPRESENTATIONS * POOLS_PER_SLOT * NUM_MINIROCKET_KERNELS);
        let diffs = train
            .instances()
            .iter()
            .map(TimeSeriesInstance::diff)
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiRocket {
            base: DilatedBank::fit(train.instances(), per_kernel, config.max_dilations_per_kernel, config.seed)?,
            diff: DilatedBank::fit(&diffs, per_kernel, config.max_dilations_per_kernel, mix(config.seed, 1))?,
        })
    }

    pub fn num_features(&self) -> usize {
        POOLS_PER_SLOT * (self.base.n_slots() + self.diff.n_slots())
    }

    pub fn transform(&self, data: &OrdinalDataset) -> Result<FeatureMatrix> {
        self.base.check(data)?;
        let width = self.num_features();
        let rows: Vec<Vec<f64>> = data
            .instances()
            .par_iter()
            .map(|inst| {
                let mut row = Vec::with_capacity(width);
                self.base.transform_instance(inst, PoolSet::Four, &mut row);
                let d = inst.diff().expect("length checked at fit");
                self.diff.transform_instance(&d, PoolSet::Four, &mut row);
                row
            })
            .collect();
        let mut meta = self.base.column_meta(PoolSet::Four, Representation::Base);
        meta.extend(self.diff.column_meta(PoolSet::Four, Representation::Diff));
        Ok(FeatureMatrix::new(Matrix::from_rows(&rows)?, meta))
    }
}

/// Fits MultiROCKET on `train` and transforms both sets.
pub fn multirocket_transform(
    train: &OrdinalDataset,
    test: &OrdinalDataset,
    config: &TransformConfig,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let m = MultiRocket::fit(config, train)?;
    Ok((m.transform(train)?, m.transform(test)?))
}
