//! Linear classifiers on transform features: LogisticAT (ordinal) and a
//! softmax baseline (nominal), with standardisation and penalty selection.
//!
//! Both fitters pick between the primal problem and an exact reduction to the
//! row space of the training matrix ([`Solver`]); the reduction is what makes
//! ten-thousand-column problems with a few hundred rows cheap.

mod cv;
mod lbfgs;
mod logistic_at;
mod multinomial;
mod rowspace;
mod scaler;

pub use cv::{cross_validate, cross_validate_lambda, lambda_grid, stratified_folds, CVReport, CvOptions, DEFAULT_FOLDS};
pub use lbfgs::{LbfgsOptions, Termination};
pub use logistic_at::{
    at_gradient, at_loss, fit_logistic_at, fit_logistic_at_with, AtGradient, LogisticAtModel, LogisticAtOptions,
};
pub use multinomial::{
    fit_multinomial_baseline, fit_multinomial_with, multinomial_gradient, multinomial_loss, MultinomialGradient,
    MultinomialModel, MultinomialOptions,
};
pub use scaler::{apply_scaler, fit_scaler, Scaler, MIN_STD};

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Row-space reduction when there are more columns than rows.
    #[default]
    Auto,
    Primal,
    RowSpace,
}

impl Solver {
    pub(crate) fn resolve(self, x: &Matrix) -> Solver {
        match self {
            Solver::Auto if x.cols() > x.rows() => Solver::RowSpace,
            Solver::Auto => Solver::Primal,
            s => s,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingMetadata {
    pub seed: u64,
    /// Hash of the feature layout the model was trained on.
    pub feature_hash: Option<String>,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub solver: Option<Solver>,
    pub n_train: usize,
    /// Penalised objective and gradient norm at the returned parameters; the
    /// norm is taken in the coordinates the optimiser worked in.
    pub final_objective: Option<f64>,
    pub final_grad_norm: Option<f64>,
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eᶻ)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Validates a training set and returns the class count.
pub(crate) fn check_training_labels(x: &Matrix, y: &[usize], n_classes: Option<usize>) -> Result<usize> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if !x.all_finite() {
        return Err(Error::InvalidArgument("non-finite feature value".into()));
    }
    let q = n_classes.unwrap_or_else(|| y.iter().copied().max().unwrap_or(0));
    if let Some(&bad) = y.iter().find(|&&l| l == 0 || l > q) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 1..={q}")));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticAt,
    Multinomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    LogisticAt(LogisticAtModel),
    Multinomial(MultinomialModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub cv: CvOptions,
    /// Skip cross-validation and use this penalty.
    pub lambda: Option<f64>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            kind: ClassifierKind::LogisticAt,
            cv: CvOptions::default(),
            lambda: None,
        }
    }
}

impl ClassifierConfig {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierConfig {
            kind,
            ..Default::default()
        }
    }
}

/// Standardised, cross-validated and refitted classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    pub model: ClassifierModel,
    pub cv: Option<CVReport>,
}

/// Standardises `x`, selects λ by cross-validation (unless fixed) and refits
/// on all of `x`.
pub fn fit_classifier(x: &Matrix, y: &[usize], n_classes: usize, config: &ClassifierConfig) -> Result<FittedClassifier> {
    let scaler = Scaler::fit(x)?;
    let xs = scaler.transform(x)?;
    let cv_opts = CvOptions {
        n_classes: Some(n_classes),
        ..config.cv.clone()
    };
    let k = match cv_opts.solver.resolve(&xs) {
        Solver::RowSpace => Some(rowspace::gram(&xs)),
        _ => None,
    };
    let cv = match config.lambda {
        Some(_) => None,
        None => Some(cross_validate(config.kind, &xs, y, &cv_opts, k.as_ref())?),
    };
    let lambda = config.lambda.unwrap_or_else(|| cv.as_ref().map_or(1.0, |r| r.chosen_lambda));
    let meta = |m: TrainingMetadata| TrainingMetadata {
        seed: cv_opts.seed,
        ..m
    };
    let model = match config.kind {
        ClassifierKind::LogisticAt => {
            let opts = LogisticAtOptions {
                lbfgs: cv_opts.lbfgs,
                solver: cv_opts.solver,
                n_classes: Some(n_classes),
            };
            let mut m = logistic_at::fit_with_gram(&xs, y, lambda, &opts, k.as_ref())?;
            m.scaler = Some(scaler);
            m.metadata = meta(m.metadata);
            ClassifierModel::LogisticAt(m)
        }
        ClassifierKind::Multinomial => {
            let opts = MultinomialOptions {
                lbfgs: cv_opts.lbfgs,
                solver: cv_opts.solver,
                n_classes: Some(n_classes),
            };
            let mut m = multinomial::fit_with_gram(&xs, y, lambda, &opts, k.as_ref())?;
            m.scaler = Some(scaler);
            m.metadata = meta(m.metadata);
            ClassifierModel::Multinomial(m)
        }
    };
    Ok(FittedClassifier { model, cv })
}

impl FittedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            ClassifierModel::LogisticAt(_) => ClassifierKind::LogisticAt,
            ClassifierModel::Multinomial(_) => ClassifierKind::Multinomial,
        }
    }

    pub fn lambda(&self) -> f64 {
        match &self.model {
            ClassifierModel::LogisticAt(m) => m.lambda,
            ClassifierModel::Multinomial(m) => m.lambda,
        }
    }

    pub fn metadata_mut(&mut self) -> &mut TrainingMetadata {
        match &mut self.model {
            ClassifierModel::LogisticAt(m) => &mut m.metadata,
            ClassifierModel::Multinomial(m) => &mut m.metadata,
        }
    }

    pub fn metadata(&self) -> &TrainingMetadata {
        match &self.model {
            ClassifierModel::LogisticAt(m) => &m.metadata,
            ClassifierModel::Multinomial(m) => &m.metadata,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        match &self.model {
            ClassifierModel::LogisticAt(m) => m.predict(x),
            ClassifierModel::Multinomial(m) => m.predict(x),
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        match &self.model {
            ClassifierModel::LogisticAt(m) => m.predict_proba(x),
            ClassifierModel::Multinomial(m) => m.predict_proba(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
