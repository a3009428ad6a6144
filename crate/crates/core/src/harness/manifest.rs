use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clm::ClassifierKind;
use crate::data::{
    discretize_thresholds, parse_ts_regression, read_ts_file, uniform_edges, OrdinalDataset, RegressionDataset,
};
use crate::metrics::Metric;
use crate::rng::mix;
use crate::transform::{TransformConfig, Variant};
use crate::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 30;

/// How a dataset's targets become ordered classes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetSpec {
    /// Class labels as given, in `@classLabel` order.
    #[default]
    Classes,
    /// Real targets binned into equal-width intervals of the training range.
    UniformBins { bins: usize },
    /// Real targets binned against fixed inner edges.
    Thresholds { edges: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default)]
    pub target: TargetSpec,
}

impl DatasetSpec {
    /// Reads the default train/test split. Relative paths resolve against
    /// `base`.
    pub fn load(&self, base: &Path) -> Result<(OrdinalDataset, OrdinalDataset)> {
        let (train_path, test_path) = (base.join(&self.train), base.join(&self.test));
        let (train, test) = match &self.target {
            TargetSpec::Classes => (read_ts_file(&train_path)?, read_ts_file(&test_path)?),
            TargetSpec::UniformBins { bins } => {
                let (train, test) = (read_regression(&train_path)?, read_regression(&test_path)?);
                let edges = uniform_edges(&train.targets, *bins)?;
                (bin(&train, &edges)?, bin(&test, &edges)?)
            }
            TargetSpec::Thresholds { edges } => {
                if edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidArgument("threshold edges must increase".into()));
                }
                (bin(&read_regression(&train_path)?, edges)?, bin(&read_regression(&test_path)?, edges)?)
            }
        };
        Ok((train.with_name(self.name.clone()), test.with_name(self.name.clone())))
    }
}

fn read_regression(path: &Path) -> Result<RegressionDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ts_regression(&text)
}

fn bin(data: &RegressionDataset, edges: &[f64]) -> Result<OrdinalDataset> {
    let labels = data.targets.iter().map(|&v| discretize_thresholds(v, edges)).collect();
    let names = (1..=edges.len() + 1).map(|q| q.to_string()).collect();
    OrdinalDataset::new(data.name.clone(), data.instances.clone(), labels, names)
}

/// Features fed to the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Rocket,
    Minirocket,
    Multirocket,
    /// Raw values, channels concatenated.
    Flatten,
}

impl FeatureKind {
    pub fn variant(self) -> Option<Variant> {
        match self {
            FeatureKind::Rocket => Some(Variant::Rocket),
            FeatureKind::Minirocket => Some(Variant::Minirocket),
            FeatureKind::Multirocket => Some(Variant::Multirocket),
            FeatureKind::Flatten => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub features: FeatureKind,
    pub classifier: ClassifierKind,
    /// Overrides the variant's default feature budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_features: Option<usize>,
    /// Overrides the ROCKET kernel count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_kernels: Option<usize>,
    /// Fixed penalty; cross-validated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
}

impl MethodSpec {
    /// Transform configuration, or `None` for raw features.
    pub fn transform_config(&self, seed: u64) -> Option<TransformConfig> {
        let mut cfg = TransformConfig::for_variant(self.features.variant()?).with_seed(seed);
        if let Some(n) = self.num_features {
            cfg.num_features = n;
        }
        if let Some(k) = self.num_kernels {
            cfg.num_kernels = k;
            if self.num_features.is_none() {
                cfg.num_features = 2 * k;
            }
        }
        Some(cfg)
    }
}

/// Seeds for transforms and CV folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedPolicy {
    pub base: u64,
    /// Derive a distinct seed for every resample; otherwise all use `base`.
    pub per_resample: bool,
}

impl Default for SeedPolicy {
    fn default() -> Self {
        SeedPolicy {
            base: 0,
            per_resample: true,
        }
    }
}

impl SeedPolicy {
    pub fn seed_for(&self, resample: u64) -> u64 {
        if self.per_resample {
            mix(self.base, resample)
        } else {
            self.base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub datasets: Vec<DatasetSpec>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: SeedPolicy,
    /// Results CSVs from other tools, merged into the statistics.
    #[serde(default)]
    pub external_results: Vec<PathBuf>,
    /// Directory relative paths resolve against; set by [`RunManifest::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

fn default_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: RunManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    /// Reads a manifest; relative paths inside it are taken relative to the
    /// manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Self::from_json(&text)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(Error::InvalidArgument("resamples must be at least 1".into()));
        }
        if self.methods.is_empty() || self.datasets.is_empty() {
            return Err(Error::InvalidArgument("manifest needs at least one dataset and one method".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidArgument("manifest needs at least one metric".into()));
        }
        unique(self.methods.iter().map(|m| m.name.as_str()), "method")?;
        unique(self.datasets.iter().map(|d| d.name.as_str()), "dataset")?;
        unique(self.metrics.iter().map(|m| m.name()), "metric")?;
        for name in self.methods.iter().map(|m| &m.name).chain(self.datasets.iter().map(|d| &d.name)) {
            if name.is_empty() || name.contains([',', '"', '\n', '\r']) {
                return Err(Error::InvalidArgument(format!("name {name:?} must be non-empty without commas, quotes or newlines")));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }
}

fn unique<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::InvalidArgument(format!("duplicate {what} name {n:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "datasets": [{"name": "D", "train": "d/D_TRAIN.ts", "test": "d/D_TEST.ts"}],
        "methods": [{"name": "O-MiniROCKET", "features": "minirocket", "classifier": "logistic_at"}],
        "output_dir": "out"
    }"#;

    #[test]
    fn defaults() {
        let m = RunManifest::from_json(MINIMAL).unwrap();
        assert_eq!(m.resamples, 30);
        assert_eq!(m.metrics, Metric::ALL.to_vec());
        assert_eq!(m.datasets[0].target, TargetSpec::Classes);
        assert!(m.seed.per_resample);
        let cfg = m.methods[0].transform_config(5).unwrap();
        assert_eq!((cfg.variant, cfg.seed, cfg.num_features), (Variant::Minirocket, 5, 10_000));
    }

    #[test]
    fn rejects_bad_manifests() {
        let dup = MINIMAL.replace(
            r#""methods": ["#,
            r#""methods": [{"name": "O-MiniROCKET", "features": "flatten", "classifier": "multinomial"}, "#,
        );
        assert!(RunManifest::from_json(&dup).is_err());
        let zero = MINIMAL.replace(r#""output_dir""#, r#""resamples": 0, "output_dir""#);
        assert!(RunManifest::from_json(&zero).is_err());
        let comma = MINIMAL.replace(r#""name": "D""#, r#""name": "a,b""#);
        assert!(RunManifest::from_json(&comma).is_err());
    }

    #[test]
    fn target_specs_parse() {
        let t: TargetSpec = serde_json::from_str(r#"{"type": "uniform_bins", "bins": 5}"#).unwrap();
        assert_eq!(t, TargetSpec::UniformBins { bins: 5 });
        let t: TargetSpec = serde_json::from_str(r#"{"type": "thresholds", "edges": [0.0, 1.0]}"#).unwrap();
        assert_eq!(t, TargetSpec::Thresholds { edges: vec![0.0, 1.0] });
    }

    #[test]
    fn seeds_vary_by_resample() {
        let p = SeedPolicy::default();
        assert_ne!(p.seed_for(0), p.seed_for(1));
        let fixed = SeedPolicy {
            base: 9,
            per_resample: false,
        };
        assert_eq!(fixed.seed_for(3), 9);
    }
}
