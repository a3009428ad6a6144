use serde::{Deserialize, Serialize};

use crate::clm::{fit_classifier, ClassifierConfig, FittedClassifier};
use crate::data::{flatten, OrdinalDataset};
use crate::transform::{FeatureMatrix, FittedTransform, TransformConfig};
use crate::{Error, Matrix, Result};

/// Fitted feature extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedFeatures {
    Transform { transform: FittedTransform },
    Flatten { channels: usize, length: usize },
}

impl FittedFeatures {
    /// `None` selects raw flattened values.
    pub fn fit(config: Option<&TransformConfig>, train: &OrdinalDataset) -> Result<Self> {
        Ok(match config {
            Some(c) => FittedFeatures::Transform {
                transform: FittedTransform::fit(c, train)?,
            },
            None => FittedFeatures::Flatten {
                channels: train.n_channels(),
                length: train.series_length(),
            },
        })
    }

    pub fn apply(&self, data: &OrdinalDataset) -> Result<FeatureMatrix> {
        match self {
            FittedFeatures::Transform { transform } => transform.transform(data),
            FittedFeatures::Flatten { channels, length } => {
                if data.n_channels() != *channels || data.series_length() != *length {
                    return Err(Error::DimensionMismatch {
                        expected: channels * length,
                        actual: data.n_channels() * data.series_length(),
                    });
                }
                Ok(flatten(data))
            }
        }
    }
}

/// Feature extractor and classifier fitted together on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub features: FittedFeatures,
    pub classifier: FittedClassifier,
    pub class_names: Vec<String>,
}

impl Pipeline {
    pub fn fit(
        train: &OrdinalDataset,
        transform: Option<&TransformConfig>,
        classifier: &ClassifierConfig,
    ) -> Result<Self> {
        let features = FittedFeatures::fit(transform, train)?;
        let x = features.apply(train)?;
        let classifier = fit_features(&x, train, classifier)?;
        Ok(Pipeline {
            features,
            classifier,
            class_names: train.class_names().to_vec(),
        })
    }

    pub fn transform(&self, data: &OrdinalDataset) -> Result<FeatureMatrix> {
        self.features.apply(data)
    }

    pub fn predict(&self, data: &OrdinalDataset) -> Result<Vec<usize>> {
        self.classifier.predict(self.transform(data)?.values())
    }

    pub fn predict_proba(&self, data: &OrdinalDataset) -> Result<Matrix> {
        self.classifier.predict_proba(self.transform(data)?.values())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Fits a classifier on precomputed features, recording their hash.
pub fn fit_features(x: &FeatureMatrix, train: &OrdinalDataset, config: &ClassifierConfig) -> Result<FittedClassifier> {
    let mut fitted = fit_classifier(x.values(), train.labels(), train.n_classes(), config)?;
    fitted.metadata_mut().feature_hash = Some(x.provenance_hash());
    Ok(fitted)
}
