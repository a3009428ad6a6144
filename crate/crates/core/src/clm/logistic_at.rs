//! All-threshold logistic ordinal regression.
//!
//! With latent value `f = wᵀx` and thresholds `θ_1 ≤ … ≤ θ_{Q−1}`, a sample of
//! class `y` pays `h(θ_q − f)` for every threshold below its class and
//! `h(f − θ_q)` for every threshold at or above it, with `h(z) = log(1 + eᶻ)`.

use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsOptions, Termination};
use super::rowspace::{gram, RowSpace};
use super::{check_training_labels, softplus, sigmoid, Scaler, Solver, TrainingMetadata};
use crate::matrix::dot;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticAtModel {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub lambda: f64,
    /// Applied to inputs before the linear map when present.
    pub scaler: Option<Scaler>,
    #[serde(default)]
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtGradient {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticAtOptions {
    pub lbfgs: LbfgsOptions,
    pub solver: Solver,
    /// Number of classes; inferred from the largest label when absent.
    pub n_classes: Option<usize>,
}

impl Default for LogisticAtOptions {
    fn default() -> Self {
        LogisticAtOptions {
            lbfgs: LbfgsOptions::default(),
            solver: Solver::Auto,
            n_classes: None,
        }
    }
}

/// Thresholds evenly spaced over `[−1, 1]`.
pub(crate) fn initial_thresholds(q: usize) -> Vec<f64> {
    let m = q - 1;
    if m == 1 {
        return vec![0.0];
    }
    (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect()
}

/// Penalised all-threshold loss and its gradient. `params` holds the
/// weights followed by the `Q − 1` thresholds.
pub(crate) fn at_objective(x: &Matrix, y: &[usize], lambda: f64, params: &[f64], grad: &mut [f64]) -> f64 {
    let f_dim = x.cols();
    let (w, theta) = params.split_at(f_dim);
    let (gw, gt) = grad.split_at_mut(f_dim);
    gt.iter_mut().for_each(|v| *v = 0.0);
    let mut dlat = vec![0.0; x.rows()];
    let mut loss = 0.0;
    for (i, (row, &label)) in x.iter_rows().zip(y).enumerate() {
        let f = dot(row, w);
        let mut d = 0.0;
        for (q, &t) in theta.iter().enumerate() {
            if q + 1 < label {
                let z = t - f;
                loss += softplus(z);
                let s = sigmoid(z);
                gt[q] += s;
                d -= s;
            } else {
                let z = f - t;
                loss += softplus(z);
                let s = sigmoid(z);
                gt[q] -= s;
                d += s;
            }
        }
        dlat[i] = d;
    }
    for (g, &wi) in gw.iter_mut().zip(w) {
        *g = lambda * wi;
    }
    x.tr_mul_vec_into(&dlat, gw);
    loss + 0.5 * lambda * dot(w, w)
}

fn check_eval(model: &LogisticAtModel, x: &Matrix, y: &[usize]) -> Result<()> {
    if x.cols() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            actual: x.cols(),
        });
    }
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let q = model.thresholds.len() + 1;
    if let Some(&bad) = y.iter().find(|&&l| l == 0 || l > q) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 1..={q}")));
    }
    Ok(())
}

fn pack(model: &LogisticAtModel) -> Vec<f64> {
    let mut p = model.weights.clone();
    p.extend_from_slice(&model.thresholds);
    p
}

/// Penalised all-threshold loss of `model` on already-scaled features.
pub fn at_loss(model: &LogisticAtModel, x: &Matrix, y: &[usize]) -> Result<f64> {
    check_eval(model, x, y)?;
    let p = pack(model);
    let mut g = vec![0.0; p.len()];
    Ok(at_objective(x, y, model.lambda, &p, &mut g))
}

/// Analytic gradient of [`at_loss`].
pub fn at_gradient(model: &LogisticAtModel, x: &Matrix, y: &[usize]) -> Result<AtGradient> {
    check_eval(model, x, y)?;
    let p = pack(model);
    let mut g = vec![0.0; p.len()];
    at_objective(x, y, model.lambda, &p, &mut g);
    let thresholds = g.split_off(model.weights.len());
    Ok(AtGradient {
        weights: g,
        thresholds,
    })
}

pub(crate) struct CoreFit {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub objective: f64,
    pub grad_norm: f64,
}

/// Minimises the objective on the given design from `w = 0` and evenly
/// spaced thresholds.
pub(crate) fn fit_core(x: &Matrix, y: &[usize], q: usize, lambda: f64, opts: &LbfgsOptions) -> Result<CoreFit> {
    let f_dim = x.cols();
    let mut x0 = vec![0.0; f_dim];
    x0.extend(initial_thresholds(q));
    let out = minimize(|p, g| at_objective(x, y, lambda, p, g), x0, opts)?;
    let mut weights = out.x;
    let thresholds = weights.split_off(f_dim);
    Ok(CoreFit {
        weights,
        thresholds,
        iterations: out.iterations,
        termination: out.termination,
        objective: out.f,
        grad_norm: out.grad_norm,
    })
}

/// Fits with default options; features are used as given.
pub fn fit_logistic_at(x: &Matrix, y: &[usize], lambda: f64) -> Result<LogisticAtModel> {
    fit_logistic_at_with(x, y, lambda, &LogisticAtOptions::default())
}

pub fn fit_logistic_at_with(
    x: &Matrix,
    y: &[usize],
    lambda: f64,
    opts: &LogisticAtOptions,
) -> Result<LogisticAtModel> {
    fit_with_gram(x, y, lambda, opts, None)
}

/// As [`fit_logistic_at_with`], reusing `X Xᵀ` when the caller already has it.
pub(crate) fn fit_with_gram(
    x: &Matrix,
    y: &[usize],
    lambda: f64,
    opts: &LogisticAtOptions,
    k: Option<&Matrix>,
) -> Result<LogisticAtModel> {
    let q = check_training_labels(x, y, opts.n_classes)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    let solver = opts.solver.resolve(x);
    let fit = match solver {
        Solver::RowSpace => {
            let rs = match k {
                Some(k) => RowSpace::from_gram(k)?,
                None => RowSpace::from_gram(&gram(x))?,
            };
            let core = fit_core(rs.design(), y, q, lambda, &opts.lbfgs)?;
            CoreFit {
                weights: rs.lift(x, &core.weights),
                ..core
            }
        }
        _ => fit_core(x, y, q, lambda, &opts.lbfgs)?,
    };
    Ok(LogisticAtModel {
        weights: fit.weights,
        thresholds: fit.thresholds,
        lambda,
        scaler: None,
        metadata: TrainingMetadata {
            iterations: fit.iterations,
            termination: Some(fit.termination),
            solver: Some(solver),
            n_train: x.rows(),
            final_objective: Some(fit.objective),
            final_grad_norm: Some(fit.grad_norm),
            ..TrainingMetadata::default()
        },
    })
}

impl LogisticAtModel {
    pub fn new(weights: Vec<f64>, thresholds: Vec<f64>, lambda: f64) -> Self {
        LogisticAtModel {
            weights,
            thresholds,
            lambda,
            scaler: None,
            metadata: TrainingMetadata::default(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Latent values `wᵀx` (after scaling, when a scaler is attached).
    pub fn decision_function(&self, x: &Matrix) -> Result<Vec<f64>> {
        let expected = self.scaler.as_ref().map_or(self.weights.len(), Scaler::n_features);
        if x.cols() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: x.cols(),
            });
        }
        let mut buf = vec![0.0; x.cols()];
        Ok(x
            .iter_rows()
            .map(|r| match &self.scaler {
                Some(s) => {
                    buf.copy_from_slice(r);
                    s.transform_row(&mut buf);
                    dot(&buf, &self.weights)
                }
                None => dot(r, &self.weights),
            })
            .collect())
    }

    /// Smallest `q` with `f ≤ θ_q`, else `Q`.
    pub fn class_of_latent(&self, f: f64) -> usize {
        self.thresholds
            .iter()
            .position(|&t| f <= t)
            .map_or(self.n_classes(), |q| q + 1)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self
            .decision_function(x)?
            .into_iter()
            .map(|f| self.class_of_latent(f))
            .collect())
    }

    /// `P(y ≤ q | x) = σ(θ_q − wᵀx)` for `q = 1..Q−1`, one row per sample.
    pub fn predict_cumulative(&self, x: &Matrix) -> Result<Matrix> {
        let lat = self.decision_function(x)?;
        let q = self.thresholds.len();
        let mut out = Matrix::zeros(lat.len(), q);
        for (i, f) in lat.into_iter().enumerate() {
            for (j, &t) in self.thresholds.iter().enumerate() {
                out.set(i, j, sigmoid(t - f));
            }
        }
        Ok(out)
    }

    /// Class probabilities as successive differences of the cumulative ones.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let cum = self.predict_cumulative(x)?;
        let q = self.n_classes();
        let mut out = Matrix::zeros(cum.rows(), q);
        for i in 0..cum.rows() {
            let c = cum.row(i);
            let row = out.row_mut(i);
            let mut prev = 0.0;
            for j in 0..q - 1 {
                row[j] = c[j] - prev;
                prev = c[j];
            }
            row[q - 1] = 1.0 - prev;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
