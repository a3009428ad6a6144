//! Time series datasets with ordered labels.

mod discretize;
mod resample;
mod ts_format;

pub use discretize::{
    discretize_returns, discretize_thresholds, discretize_uniform, uniform_edges, RETURN_THRESHOLDS,
};
pub use resample::{stratified_resample, SplitPair};
pub use ts_format::{
    parse_ts_file, parse_ts_regression, read_ts_file, serialize_ts, RegressionDataset,
};

use serde::{Deserialize, Serialize};

use crate::transform::{ColumnMeta, FeatureMatrix};
use crate::{Error, Matrix, Result};

/// One (possibly multivariate) series: `channels[c][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesInstance {
    channels: Vec<Vec<f64>>,
}

impl TimeSeriesInstance {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::InvalidDataset("instance has no channels".into()));
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::InvalidDataset("empty series".into()));
        }
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::InvalidDataset(format!(
                "channels of unequal length ({} vs {})",
                len,
                bad.len()
            )));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite value in series".into()));
        }
        Ok(TimeSeriesInstance { channels })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values])
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// First-order difference of every channel (length `T − 1`).
    pub fn diff(&self) -> Result<Self> {
        if self.len() < 2 {
            return Err(Error::SeriesTooShort {
                length: self.len(),
                required: 2,
            });
        }
        Ok(TimeSeriesInstance {
            channels: self
                .channels
                .iter()
                .map(|c| c.windows(2).map(|w| w[1] - w[0]).collect())
                .collect(),
        })
    }
}

/// Equal-length labelled series whose class order is given by `class_names`.
///
/// Labels are 1-based class indices: label `q` refers to `class_names[q - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalDataset {
    name: String,
    instances: Vec<TimeSeriesInstance>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl OrdinalDataset {
    pub fn new(
        name: impl Into<String>,
        instances: Vec<TimeSeriesInstance>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::InvalidDataset("dataset has no instances".into()));
        }
        if instances.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} instances but {} labels",
                instances.len(),
                labels.len()
            )));
        }
        if class_names.len() < 2 {
            return Err(Error::InvalidDataset(
                "an ordinal dataset needs at least two classes".into(),
            ));
        }
        let q = class_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > q) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} outside 1..={q}"
            )));
        }
        let (c, t) = (instances[0].n_channels(), instances[0].len());
        if let Some(bad) = instances
            .iter()
            .find(|i| i.n_channels() != c || i.len() != t)
        {
            return Err(Error::InvalidDataset(format!(
                "instance shape {}x{} differs from {}x{}",
                bad.n_channels(),
                bad.len(),
                c,
                t
            )));
        }
        Ok(OrdinalDataset {
            name: name.into(),
            instances,
            labels,
            class_names,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instances(&self) -> &[TimeSeriesInstance] {
        &self.instances
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_channels(&self) -> usize {
        self.instances[0].n_channels()
    }

    pub fn series_length(&self) -> usize {
        self.instances[0].len()
    }

    /// Number of instances per class, indexed by `label - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l - 1] += 1;
        }
        counts
    }

    /// Share of the most frequent class.
    pub fn majority_rate(&self) -> f64 {
        let max = self.class_counts().into_iter().max().unwrap_or(0);
        max as f64 / self.len() as f64
    }

    /// Subset in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        OrdinalDataset::new(
            self.name.clone(),
            indices.iter().map(|&i| self.instances[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.class_names.clone(),
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub(crate) fn same_layout(&self, other: &OrdinalDataset) -> bool {
        self.class_names == other.class_names
            && self.n_channels() == other.n_channels()
            && self.series_length() == other.series_length()
    }
}

/// Concatenates the channels of every series into one row of length `C·T`.
pub fn flatten(dataset: &OrdinalDataset) -> FeatureMatrix {
    let (c, t) = (dataset.n_channels(), dataset.series_length());
    let mut data = Vec::with_capacity(dataset.len() * c * t);
    for inst in dataset.instances() {
        for ch in inst.channels() {
            data.extend_from_slice(ch);
        }
    }
    let meta = (0..c)
        .flat_map(|channel| (0..t).map(move |time| ColumnMeta::Raw { channel, time }))
        .collect();
    FeatureMatrix::new(
        Matrix::from_vec(dataset.len(), c * t, data).expect("shape is consistent"),
        meta,
    )
}
