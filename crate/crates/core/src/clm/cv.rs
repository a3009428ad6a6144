//! Penalty selection by stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgs::LbfgsOptions;
use super::rowspace::{gram, submatrix, RowSpace};
use super::{check_training_labels, logistic_at, multinomial, ClassifierKind, Solver};
use crate::matrix::dot;
use crate::metrics::{ccr, mae, Metric};
use crate::rng::stream_rng;
use crate::{Error, Matrix, Result};

pub const DEFAULT_FOLDS: usize = 5;
const TIE_TOL: f64 = 1e-12;

/// `10^(−3 + 6i/9)` for `i = 0..=9`.
pub fn lambda_grid() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub grid: Vec<f64>,
    /// `fold_mae[g][k]`: validation MAE of grid point `g` on fold `k`.
    pub fold_mae: Vec<Vec<f64>>,
    pub fold_ccr: Vec<Vec<f64>>,
    pub n_folds: usize,
    /// Metric the choice was made on.
    pub selection: Metric,
    pub chosen_lambda: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl CVReport {
    pub fn mean_mae(&self) -> Vec<f64> {
        self.fold_mae.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()
    }

    pub fn mean_ccr(&self) -> Vec<f64> {
        self.fold_ccr.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvOptions {
    pub grid: Vec<f64>,
    pub n_folds: usize,
    /// Seeds the fold assignment.
    pub seed: u64,
    pub lbfgs: LbfgsOptions,
    pub solver: Solver,
    pub n_classes: Option<usize>,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            grid: lambda_grid(),
            n_folds: DEFAULT_FOLDS,
            seed: 0,
            lbfgs: LbfgsOptions::default(),
            solver: Solver::Auto,
            n_classes: None,
        }
    }
}

/// Fold index of every sample. Members of each class are shuffled and dealt
/// round-robin, continuing the rotation across classes so fold sizes stay
/// balanced. Returns the fold count actually used, which drops below
/// `n_folds` when the smallest class is too small, with a warning.
pub fn stratified_folds(y: &[usize], n_folds: usize, seed: u64) -> Result<(Vec<usize>, usize, Vec<String>)> {
    if y.len() < 2 {
        return Err(Error::Degenerate("cross-validation needs at least two samples".into()));
    }
    let q = y.iter().copied().max().unwrap_or(0);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); q + 1];
    for (i, &l) in y.iter().enumerate() {
        members[l].push(i);
    }
    let smallest = members.iter().filter(|m| !m.is_empty()).map(Vec::len).min().unwrap_or(0);
    let mut warnings = Vec::new();
    let mut k = n_folds.max(2);
    if smallest < k {
        let reduced = smallest.max(2).min(k);
        if reduced != k {
            warnings.push(format!(
                "smallest class has {smallest} member(s); using {reduced} folds instead of {k}"
            ));
        }
        if smallest < 2 {
            warnings.push(format!(
                "a class has {smallest} member(s) and is missing from some training folds"
            ));
        }
        k = reduced;
    }
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for (class, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut stream_rng(seed, class as u64));
        for &i in m.iter() {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok((fold, k, warnings))
}

/// Training and validation designs for one fold, in whichever coordinates
/// the fitter will use.
struct FoldData {
    train: Matrix,
    train_y: Vec<usize>,
    val: Matrix,
    val_y: Vec<usize>,
}

fn fold_data(x: &Matrix, y: &[usize], k: Option<&Matrix>, tr: &[usize], va: &[usize]) -> Result<FoldData> {
    let (train, val) = match k {
        Some(k) => {
            let rs = RowSpace::from_gram(&submatrix(k, tr, tr))?;
            let val = rs.project(&submatrix(k, va, tr));
            (rs.design().clone(), val)
        }
        None => (x.select_rows(tr), x.select_rows(va)),
    };
    Ok(FoldData {
        train,
        train_y: tr.iter().map(|&i| y[i]).collect(),
        val,
        val_y: va.iter().map(|&i| y[i]).collect(),
    })
}

fn fit_and_predict(kind: ClassifierKind, d: &FoldData, q: usize, lambda: f64, opts: &LbfgsOptions) -> Result<Vec<usize>> {
    Ok(match kind {
        ClassifierKind::LogisticAt => {
            let fit = logistic_at::fit_core(&d.train, &d.train_y, q, lambda, opts)?;
            d.val
                .iter_rows()
                .map(|r| {
                    let f = dot(r, &fit.weights);
                    fit.thresholds.iter().position(|&t| f <= t).map_or(q, |p| p + 1)
                })
                .collect()
        }
        ClassifierKind::Multinomial => {
            let fit = multinomial::fit_core(&d.train, &d.train_y, q, lambda, opts)?;
            let f = d.train.cols();
            d.val
                .iter_rows()
                .map(|r| {
                    (0..q)
                        .map(|c| dot(r, &fit.weights[c * f..(c + 1) * f]) + fit.intercepts[c])
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |b, (c, v)| if v > b.1 { (c, v) } else { b })
                        .0
                        + 1
                })
                .collect()
        }
    })
}

/// Cross-validates the LogisticAT penalty over the default grid, selecting
/// by MAE.
pub fn cross_validate_lambda(x: &Matrix, y: &[usize]) -> Result<CVReport> {
    cross_validate(ClassifierKind::LogisticAt, x, y, &CvOptions::default(), None)
}

/// Grid search for either classifier. LogisticAT is selected by lowest mean
/// MAE, the nominal baseline by highest mean CCR; ties go to the larger λ.
/// `k` may carry a precomputed `X Xᵀ`.
pub fn cross_validate(
    kind: ClassifierKind,
    x: &Matrix,
    y: &[usize],
    opts: &CvOptions,
    k: Option<&Matrix>,
) -> Result<CVReport> {
    let q = check_training_labels(x, y, opts.n_classes)?;
    if opts.grid.is_empty() || opts.grid.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidArgument("λ grid must be non-empty and non-negative".into()));
    }
    let (fold, n_folds, warnings) = stratified_folds(y, opts.n_folds, opts.seed)?;

    let fold_train_size = y.len() - y.len() / n_folds;
    let reduce = opts.solver == Solver::RowSpace || (opts.solver == Solver::Auto && x.cols() > fold_train_size);
    let owned;
    let k = match (reduce, k) {
        (false, _) => None,
        (true, Some(k)) => Some(k),
        (true, None) => {
            owned = gram(x);
            Some(&owned)
        }
    };

    let per_fold: Vec<Result<Vec<(f64, f64)>>> = (0..n_folds)
        .into_par_iter()
        .map(|f| {
            let tr: Vec<usize> = (0..y.len()).filter(|&i| fold[i] != f).collect();
            let va: Vec<usize> = (0..y.len()).filter(|&i| fold[i] == f).collect();
            let d = fold_data(x, y, k, &tr, &va)?;
            opts.grid
                .iter()
                .map(|&lambda| {
                    let pred = fit_and_predict(kind, &d, q, lambda, &opts.lbfgs)?;
                    Ok((mae(&d.val_y, &pred)?, ccr(&d.val_y, &pred)?))
                })
                .collect()
        })
        .collect();
    let per_fold = per_fold.into_iter().collect::<Result<Vec<_>>>()?;

    let g = opts.grid.len();
    let fold_mae: Vec<Vec<f64>> = (0..g).map(|i| per_fold.iter().map(|f| f[i].0).collect()).collect();
    let fold_ccr: Vec<Vec<f64>> = (0..g).map(|i| per_fold.iter().map(|f| f[i].1).collect()).collect();
    let (selection, score): (Metric, Vec<f64>) = match kind {
        ClassifierKind::LogisticAt => (Metric::Mae, mean_rows(&fold_mae)),
        ClassifierKind::Multinomial => (Metric::Ccr, mean_rows(&fold_ccr).into_iter().map(|v| -v).collect()),
    };
    // minimise `score`, ties to the larger λ
    let mut best = 0;
    for i in 1..g {
        let better = score[i] < score[best] - TIE_TOL;
        let tie = (score[i] - score[best]).abs() <= TIE_TOL;
        if better || (tie && opts.grid[i] > opts.grid[best]) {
            best = i;
        }
    }
    Ok(CVReport {
        grid: opts.grid.clone(),
        fold_mae,
        fold_ccr,
        n_folds,
        selection,
        chosen_lambda: opts.grid[best],
        warnings,
    })
}

fn mean_rows(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()
}
