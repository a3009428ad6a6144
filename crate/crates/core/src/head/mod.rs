//! Cumulative link output head.
//!
//! A projection maps features to one latent value `f`; ordered thresholds
//! `θ_q = θ_1 + Σ_{i<q} α_i²` turn it into class probabilities
//! `p_q = σ(θ_q − f) − σ(θ_{q−1} − f)`. Squaring keeps the thresholds ordered
//! while every parameter stays unconstrained.

mod loss;

pub use loss::{
    cross_entropy_gradient, cross_entropy_loss, qwk_loss, qwk_loss_gradient, qwk_loss_with_penalty, qwk_penalty,
    HeadLoss, QWK_DENOMINATOR_GUARD,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clm::sigmoid;
use crate::matrix::dot;
use crate::rng::stream_rng;
use crate::{Error, Matrix, Result};

pub fn build_thresholds(theta1: f64, alphas: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(alphas.len() + 1);
    let mut t = theta1;
    out.push(t);
    for a in alphas {
        t += a * a;
        out.push(t);
    }
    out
}

/// Class probabilities for latent value `latent`; length `θ.len() + 1`.
pub fn clm_forward(latent: f64, thresholds: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(thresholds.len() + 1);
    let mut prev = 0.0;
    for &t in thresholds {
        let c = sigmoid(t - latent);
        p.push(c - prev);
        prev = c;
    }
    p.push(1.0 - prev);
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadConfig {
    /// 0 means a linear projection.
    pub hidden_width: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss: HeadLoss,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            hidden_width: 0,
            learning_rate: 0.1,
            epochs: 500,
            seed: 0,
            loss: HeadLoss::Qwk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayer {
    /// `H × F`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClmHead {
    pub theta1: f64,
    /// `Q − 2` threshold increments (square roots).
    pub alphas: Vec<f64>,
    /// Output weights over the hidden units, or over the inputs when linear.
    pub projection: Vec<f64>,
    pub hidden: Option<HiddenLayer>,
    pub config: HeadConfig,
    /// Training loss before the first step and after every epoch.
    pub loss_trajectory: Vec<f64>,
}

/// Gradient of a head loss, laid out like [`ClmHead::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient {
    pub loss: f64,
    pub grad: Vec<f64>,
}

impl ClmHead {
    /// Thresholds from −1 in steps of `2 / (Q − 1)`, weights uniform in ±0.1.
    pub fn init(n_features: usize, n_classes: usize, config: &HeadConfig) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidArgument("need at least two classes".into()));
        }
        if n_features == 0 {
            return Err(Error::EmptyInput);
        }
        let mut rng = stream_rng(config.seed, 0);
        let mut uniform = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-0.1..0.1)).collect() };
        let h = config.hidden_width;
        let (hidden, projection) = if h == 0 {
            (None, uniform(n_features))
        } else {
            let w = Matrix::from_vec(h, n_features, uniform(h * n_features))?;
            (
                Some(HiddenLayer {
                    weights: w,
                    bias: vec![0.0; h],
                }),
                uniform(h),
            )
        };
        Ok(ClmHead {
            theta1: -1.0,
            alphas: vec![(2.0 / (n_classes - 1) as f64).sqrt(); n_classes - 2],
            projection,
            hidden,
            config: config.clone(),
            loss_trajectory: Vec::new(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.alphas.len() + 2
    }

    pub fn n_features(&self) -> usize {
        match &self.hidden {
            Some(h) => h.weights.cols(),
            None => self.projection.len(),
        }
    }

    pub fn thresholds(&self) -> Vec<f64> {
        build_thresholds(self.theta1, &self.alphas)
    }

    /// θ₁, α, projection, then hidden weights (row major) and biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = vec![self.theta1];
        p.extend_from_slice(&self.alphas);
        p.extend_from_slice(&self.projection);
        if let Some(h) = &self.hidden {
            p.extend_from_slice(h.weights.as_slice());
            p.extend_from_slice(&h.bias);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.params().len() {
            return Err(Error::DimensionMismatch {
                expected: self.params().len(),
                actual: p.len(),
            });
        }
        let (a, v) = (self.alphas.len(), self.projection.len());
        self.theta1 = p[0];
        self.alphas.copy_from_slice(&p[1..1 + a]);
        self.projection.copy_from_slice(&p[1 + a..1 + a + v]);
        if let Some(h) = &mut self.hidden {
            let off = 1 + a + v;
            let nw = h.weights.rows() * h.weights.cols();
            h.weights = Matrix::from_vec(h.weights.rows(), h.weights.cols(), p[off..off + nw].to_vec())?;
            h.bias.copy_from_slice(&p[off + nw..]);
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.cols(),
            });
        }
        Ok(())
    }

    fn latent_row(&self, x: &[f64], act: &mut Vec<f64>) -> f64 {
        match &self.hidden {
            None => dot(x, &self.projection),
            Some(h) => {
                act.clear();
                act.extend(h.weights.iter_rows().zip(&h.bias).map(|(w, b)| dot(w, x) + b));
                act.iter().zip(&self.projection).map(|(a, v)| a.max(0.0) * v).sum()
            }
        }
    }

    pub fn latent(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut act = Vec::new();
        Ok(x.iter_rows().map(|r| self.latent_row(r, &mut act)).collect())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let theta = self.thresholds();
        let lat = self.latent(x)?;
        let rows: Vec<Vec<f64>> = lat.iter().map(|&f| clm_forward(f, &theta)).collect();
        Matrix::from_rows(&rows)
    }

    /// Most probable class; ties go to the lower label.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(p.iter_rows()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (c, &v)| if v > b.1 { (c, v) } else { b })
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

/// Loss of `head` on a batch and its gradient with respect to every head
/// parameter.
pub fn head_gradient(head: &ClmHead, x: &Matrix, labels: &[usize], loss: HeadLoss) -> Result<HeadGradient> {
    head.check_input(x)?;
    let q = head.n_classes();
    let theta = head.thresholds();
    let n = x.rows();
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut lat = Vec::with_capacity(n);
    for r in x.iter_rows() {
        let mut a = Vec::new();
        lat.push(head.latent_row(r, &mut a));
        acts.push(a);
    }
    let rows: Vec<Vec<f64>> = lat.iter().map(|&f| clm_forward(f, &theta)).collect();
    let probs = Matrix::from_rows(&rows)?;
    let value = loss.value(&probs, labels)?;
    let gp = loss.gradient(&probs, labels)?;

    let (na, nv) = (head.alphas.len(), head.projection.len());
    let mut grad = vec![0.0; head.params().len()];
    let mut g_theta = vec![0.0; q - 1];
    let hidden_off = 1 + na + nv;
    for i in 0..n {
        let g = gp.row(i);
        let f = lat[i];
        // ∂L/∂c_q = g_q − g_{q+1}, ∂c_q/∂θ_q = s_q, ∂c_q/∂f = −s_q
        let mut g_lat = 0.0;
        for k in 0..q - 1 {
            let c = sigmoid(theta[k] - f);
            let s = c * (1.0 - c);
            let dc = g[k] - g[k + 1];
            g_theta[k] += dc * s;
            g_lat -= dc * s;
        }
        let xi = x.row(i);
        match &head.hidden {
            None => {
                for (gv, xv) in grad[1 + na..hidden_off].iter_mut().zip(xi) {
                    *gv += g_lat * xv;
                }
            }
            Some(h) => {
                let width = h.bias.len();
                let f_dim = xi.len();
                for u in 0..width {
                    let a = acts[i][u];
                    grad[1 + na + u] += g_lat * a.max(0.0);
                    if a > 0.0 {
                        let da = g_lat * head.projection[u];
                        let wrow = hidden_off + u * f_dim;
                        for (gw, xv) in grad[wrow..wrow + f_dim].iter_mut().zip(xi) {
                            *gw += da * xv;
                        }
                        grad[hidden_off + width * f_dim + u] += da;
                    }
                }
            }
        }
    }
    // θ_q depends on θ₁ with slope 1 and on α_k (k < q) with slope 2α_k
    grad[0] = g_theta.iter().sum();
    for k in 0..na {
        let tail: f64 = g_theta[k + 1..].iter().sum();
        grad[1 + k] = 2.0 * head.alphas[k] * tail;
    }
    Ok(HeadGradient { loss: value, grad })
}

/// Full-batch gradient descent with a fixed step.
pub fn fit_clm_head(x: &Matrix, labels: &[usize], n_classes: usize, config: &HeadConfig) -> Result<ClmHead> {
    if x.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::Degenerate("training labels contain a single class".into()));
    }
    let mut head = ClmHead::init(x.cols(), n_classes, config)?;
    let mut params = head.params();
    for epoch in 0..=config.epochs {
        let g = head_gradient(&head, x, labels, config.loss)?;
        if !g.loss.is_finite() || g.grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { iteration: epoch });
        }
        head.loss_trajectory.push(g.loss);
        if epoch == config.epochs {
            break;
        }
        for (p, d) in params.iter_mut().zip(&g.grad) {
            *p -= config.learning_rate * d;
        }
        head.set_params(&params)?;
    }
    Ok(head)
}
