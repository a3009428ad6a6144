use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::OrdinalDataset;
use crate::rng::{fnv1a, stream_rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPair {
    pub train: OrdinalDataset,
    pub test: OrdinalDataset,
    pub resample_id: u64,
    /// Seed of the permutation stream; `0` for the default split.
    pub seed: u64,
}

/// Re-splits the pooled default partition, keeping each class's training
/// count equal to the default split's.
///
/// Resample 0 is the default partition. Other resamples are a deterministic
/// function of the training set's name and `resample_id`.
pub fn stratified_resample(
    default_train: &OrdinalDataset,
    default_test: &OrdinalDataset,
    resample_id: u64,
) -> Result<SplitPair> {
    if !default_train.same_layout(default_test) {
        return Err(Error::InvalidDataset(
            "train and test differ in classes, channels or length".into(),
        ));
    }
    if resample_id == 0 {
        return Ok(SplitPair {
            train: default_train.clone(),
            test: default_test.clone(),
            resample_id,
            seed: 0,
        });
    }

    let n_train = default_train.len();
    let pooled_labels: Vec<usize> = default_train
        .labels()
        .iter()
        .chain(default_test.labels())
        .copied()
        .collect();
    let train_counts = default_train.class_counts();
    let seed = fnv1a(default_train.name().as_bytes());
    let mut rng = stream_rng(seed, resample_id);

    let mut train_idx = Vec::with_capacity(n_train);
    let mut test_idx = Vec::with_capacity(pooled_labels.len() - n_train);
    for (q, &want) in train_counts.iter().enumerate() {
        let mut members: Vec<usize> = pooled_labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == q + 1)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "class {:?} is absent from the pooled data",
                default_train.class_names()[q]
            )));
        }
        members.shuffle(&mut rng);
        train_idx.extend_from_slice(&members[..want]);
        test_idx.extend_from_slice(&members[want..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |i: usize| {
        if i < n_train {
            (&default_train.instances()[i], default_train.labels()[i])
        } else {
            let j = i - n_train;
            (&default_test.instances()[j], default_test.labels()[j])
        }
    };
    let build = |idx: &[usize], name: &str| {
        let (inst, labels): (Vec<_>, Vec<_>) = idx
            .iter()
            .map(|&i| {
                let (x, y) = pick(i);
                (x.clone(), y)
            })
            .unzip();
        OrdinalDataset::new(name, inst, labels, default_train.class_names().to_vec())
    };
    Ok(SplitPair {
        train: build(&train_idx, default_train.name())?,
        test: build(&test_idx, default_test.name())?,
        resample_id,
        seed,
    })
}
