//! L2-penalised softmax regression, the nominal baseline. Intercepts are not
//! penalised.

use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsOptions, Termination};
use super::rowspace::{gram, RowSpace};
use super::{check_training_labels, Scaler, Solver, TrainingMetadata};
use crate::matrix::{axpy, dot};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialModel {
    /// One row of weights per class.
    pub weights: Matrix,
    pub intercepts: Vec<f64>,
    pub lambda: f64,
    pub scaler: Option<Scaler>,
    #[serde(default)]
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialGradient {
    pub weights: Matrix,
    pub intercepts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultinomialOptions {
    pub lbfgs: LbfgsOptions,
    pub solver: Solver,
    pub n_classes: Option<usize>,
}

impl Default for MultinomialOptions {
    fn default() -> Self {
        MultinomialOptions {
            lbfgs: LbfgsOptions::default(),
            solver: Solver::Auto,
            n_classes: None,
        }
    }
}

/// Writes softmax probabilities of `logits` in place; returns log-sum-exp.
fn softmax_in_place(logits: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    logits.iter_mut().for_each(|v| *v /= sum);
    max + sum.ln()
}

/// Negative log-likelihood plus `λ/2 ‖W‖²`. `params` is `W` (K × F, row
/// major) followed by the K intercepts.
pub(crate) fn softmax_objective(
    x: &Matrix,
    y: &[usize],
    k: usize,
    lambda: f64,
    params: &[f64],
    grad: &mut [f64],
) -> f64 {
    let f_dim = x.cols();
    let (w, b) = params.split_at(k * f_dim);
    let (gw, gb) = grad.split_at_mut(k * f_dim);
    for (g, &wi) in gw.iter_mut().zip(w) {
        *g = lambda * wi;
    }
    gb.iter_mut().for_each(|v| *v = 0.0);
    let mut loss = 0.5 * lambda * dot(w, w);
    let mut logits = vec![0.0; k];
    for (row, &label) in x.iter_rows().zip(y) {
        for c in 0..k {
            logits[c] = dot(row, &w[c * f_dim..(c + 1) * f_dim]) + b[c];
        }
        let own = logits[label - 1];
        loss += softmax_in_place(&mut logits) - own;
        logits[label - 1] -= 1.0;
        for c in 0..k {
            gb[c] += logits[c];
            axpy(logits[c], row, &mut gw[c * f_dim..(c + 1) * f_dim]);
        }
    }
    loss
}

fn pack(model: &MultinomialModel) -> Vec<f64> {
    let mut p = model.weights.as_slice().to_vec();
    p.extend_from_slice(&model.intercepts);
    p
}

fn check_eval(model: &MultinomialModel, x: &Matrix, y: &[usize]) -> Result<()> {
    if x.cols() != model.weights.cols() || x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.cols(),
            actual: x.cols(),
        });
    }
    let k = model.n_classes();
    if let Some(&bad) = y.iter().find(|&&l| l == 0 || l > k) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 1..={k}")));
    }
    Ok(())
}

pub fn multinomial_loss(model: &MultinomialModel, x: &Matrix, y: &[usize]) -> Result<f64> {
    check_eval(model, x, y)?;
    let p = pack(model);
    let mut g = vec![0.0; p.len()];
    Ok(softmax_objective(x, y, model.n_classes(), model.lambda, &p, &mut g))
}

pub fn multinomial_gradient(model: &MultinomialModel, x: &Matrix, y: &[usize]) -> Result<MultinomialGradient> {
    check_eval(model, x, y)?;
    let p = pack(model);
    let mut g = vec![0.0; p.len()];
    let k = model.n_classes();
    softmax_objective(x, y, k, model.lambda, &p, &mut g);
    let intercepts = g.split_off(k * x.cols());
    Ok(MultinomialGradient {
        weights: Matrix::from_vec(k, x.cols(), g)?,
        intercepts,
    })
}

pub(crate) struct CoreFit {
    /// K × F, row major.
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub objective: f64,
    pub grad_norm: f64,
}

pub(crate) fn fit_core(x: &Matrix, y: &[usize], k: usize, lambda: f64, opts: &LbfgsOptions) -> Result<CoreFit> {
    let n = k * x.cols();
    let out = minimize(|p, g| softmax_objective(x, y, k, lambda, p, g), vec![0.0; n + k], opts)?;
    let mut weights = out.x;
    let intercepts = weights.split_off(n);
    Ok(CoreFit {
        weights,
        intercepts,
        iterations: out.iterations,
        termination: out.termination,
        objective: out.f,
        grad_norm: out.grad_norm,
    })
}

pub fn fit_multinomial_baseline(x: &Matrix, y: &[usize], lambda: f64) -> Result<MultinomialModel> {
    fit_multinomial_with(x, y, lambda, &MultinomialOptions::default())
}

pub fn fit_multinomial_with(
    x: &Matrix,
    y: &[usize],
    lambda: f64,
    opts: &MultinomialOptions,
) -> Result<MultinomialModel> {
    fit_with_gram(x, y, lambda, opts, None)
}

pub(crate) fn fit_with_gram(
    x: &Matrix,
    y: &[usize],
    lambda: f64,
    opts: &MultinomialOptions,
    gram_matrix: Option<&Matrix>,
) -> Result<MultinomialModel> {
    let k = check_training_labels(x, y, opts.n_classes)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    let solver = opts.solver.resolve(x);
    let (weights, fit) = match solver {
        Solver::RowSpace => {
            let rs = match gram_matrix {
                Some(g) => RowSpace::from_gram(g)?,
                None => RowSpace::from_gram(&gram(x))?,
            };
            let r = rs.rank();
            let core = fit_core(rs.design(), y, k, lambda, &opts.lbfgs)?;
            let mut w = Vec::with_capacity(k * x.cols());
            for c in 0..k {
                w.extend(rs.lift(x, &core.weights[c * r..(c + 1) * r]));
            }
            (w, core)
        }
        _ => {
            let core = fit_core(x, y, k, lambda, &opts.lbfgs)?;
            (core.weights.clone(), core)
        }
    };
    Ok(MultinomialModel {
        weights: Matrix::from_vec(k, x.cols(), weights)?,
        intercepts: fit.intercepts,
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

impl MultinomialModel {
    pub fn n_classes(&self) -> usize {
        self.intercepts.len()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let expected = self.scaler.as_ref().map_or(self.weights.cols(), Scaler::n_features);
        if x.cols() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: x.cols(),
            });
        }
        let k = self.n_classes();
        let mut out = Matrix::zeros(x.rows(), k);
        let mut buf = vec![0.0; x.cols()];
        for (i, r) in x.iter_rows().enumerate() {
            buf.copy_from_slice(r);
            if let Some(s) = &self.scaler {
                s.transform_row(&mut buf);
            }
            let row = out.row_mut(i);
            for c in 0..k {
                row[c] = dot(&buf, self.weights.row(c)) + self.intercepts[c];
            }
            softmax_in_place(row);
        }
        Ok(out)
    }

    /// Most probable class; ties go to the lower label.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(p
            .iter_rows()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
                    .0
                    + 1
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
