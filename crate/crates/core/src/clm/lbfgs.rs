//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::matrix::{axpy, dot, norm2};
use crate::{Error, Result};

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_BRACKET: usize = 25;
const MAX_ZOOM: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    /// Stop once the gradient's Euclidean norm drops below this.
    pub grad_tol: f64,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iter: 1000,
            grad_tol: 1e-8,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    /// The objective stopped decreasing at working precision.
    NoProgress,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

struct Point {
    a: f64,
    f: f64,
    d: f64,
}

/// Minimises `objective`, which returns the value at `x` and writes the
/// gradient into its second argument.
pub(crate) fn minimize<F>(mut objective: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<Outcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    if !f.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: 0 });
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha_buf = vec![0.0; opts.memory];
    let mut stalls = 0;

    for iter in 0..opts.max_iter {
        let gnorm = norm2(&g);
        if gnorm < opts.grad_tol {
            return Ok(Outcome {
                x,
                f,
                grad_norm: gnorm,
                iterations: iter,
                termination: Termination::GradientTolerance,
            });
        }

        // two-loop recursion
        dir.copy_from_slice(&g);
        for (k, (s, y, rho)) in history.iter().enumerate().rev() {
            let a = rho * dot(s, &dir);
            alpha_buf[k] = a;
            axpy(-a, y, &mut dir);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / gnorm.max(1.0),
        };
        dir.iter_mut().for_each(|v| *v *= gamma);
        for (k, (s, y, rho)) in history.iter().enumerate() {
            let b = rho * dot(y, &dir);
            axpy(alpha_buf[k] - b, s, &mut dir);
        }
        dir.iter_mut().for_each(|v| *v = -*v);

        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            for (d, gi) in dir.iter_mut().zip(&g) {
                *d = -gi / gnorm.max(1.0);
            }
            slope = dot(&g, &dir);
        }

        let found = line_search(&mut objective, &x, f, slope, &dir, &mut x_new, &mut g_new);
        let Some(f_new) = found else {
            if history.is_empty() {
                return Ok(Outcome {
                    x,
                    f,
                    grad_norm: gnorm,
                    iterations: iter,
                    termination: Termination::NoProgress,
                });
            }
            history.clear();
            continue;
        };

        let decrease = f - f_new;
        let mut s = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;

        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        if decrease <= f64::EPSILON * f.abs().max(1.0) {
            stalls += 1;
            if stalls >= 2 {
                return Ok(Outcome {
                    grad_norm: norm2(&g),
                    x,
                    f,
                    iterations: iter + 1,
                    termination: Termination::NoProgress,
                });
            }
        } else {
            stalls = 0;
        }
    }
    Ok(Outcome {
        grad_norm: norm2(&g),
        x,
        f,
        iterations: opts.max_iter,
        termination: Termination::MaxIterations,
    })
}

/// Returns the accepted objective value with `x_new`, `g_new` filled in, or
/// `None` when no decreasing step was found.
fn line_search<F>(
    objective: &mut F,
    x: &[f64],
    f0: f64,
    slope0: f64,
    dir: &[f64],
    x_new: &mut [f64],
    g_new: &mut [f64],
) -> Option<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut eval = |a: f64, x_new: &mut [f64], g_new: &mut [f64]| -> Point {
        for i in 0..x.len() {
            x_new[i] = x[i] + a * dir[i];
        }
        let f = objective(x_new, g_new);
        let d = dot(g_new, dir);
        if f.is_finite() && d.is_finite() {
            Point { a, f, d }
        } else {
            Point { a, f: f64::INFINITY, d: f64::NAN }
        }
    };
    let armijo = |p: &Point| p.f <= f0 + C1 * p.a * slope0;
    let curvature = |p: &Point| p.d.abs() <= -C2 * slope0;

    let mut prev = Point { a: 0.0, f: f0, d: slope0 };
    let mut a = 1.0;
    // best decreasing point seen, as a fallback when the search gives up
    let mut best: Option<f64> = None;

    let (mut lo, mut hi) = 'bracket: {
        for i in 0..MAX_BRACKET {
            let p = eval(a, x_new, g_new);
            if !armijo(&p) || (i > 0 && p.f >= prev.f) {
                break 'bracket (prev, p);
            }
            if curvature(&p) {
                return Some(p.f);
            }
            best = Some(p.a);
            if p.d >= 0.0 {
                break 'bracket (p, prev);
            }
            a = p.a * 2.0;
            prev = p;
        }
        return finish(&mut eval, best, x_new, g_new);
    };

    for _ in 0..MAX_ZOOM {
        let a = interpolate(&lo, &hi);
        let p = eval(a, x_new, g_new);
        if !armijo(&p) || p.f >= lo.f {
            hi = p;
        } else {
            if curvature(&p) {
                return Some(p.f);
            }
            if p.d * (hi.a - lo.a) >= 0.0 {
                hi = std::mem::replace(&mut lo, p);
            } else {
                lo = p;
            }
            best = Some(lo.a);
        }
        if (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(1.0) {
            break;
        }
    }
    if lo.a > 0.0 && lo.f < f0 {
        best = Some(lo.a);
    }
    finish(&mut eval, best, x_new, g_new)
}

fn finish<E>(eval: &mut E, best: Option<f64>, x_new: &mut [f64], g_new: &mut [f64]) -> Option<f64>
where
    E: FnMut(f64, &mut [f64], &mut [f64]) -> Point,
{
    best.map(|a| eval(a, x_new, g_new).f)
}

/// Safeguarded cubic interpolation of the step inside the bracket.
fn interpolate(lo: &Point, hi: &Point) -> f64 {
    let (a0, a1) = (lo.a, hi.a);
    let (left, right) = (a0.min(a1), a0.max(a1));
    let width = right - left;
    let bisect = 0.5 * (a0 + a1);
    if !hi.f.is_finite() || !hi.d.is_finite() {
        return bisect;
    }
    let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a0 - a1);
    let disc = d1 * d1 - lo.d * hi.d;
    if disc < 0.0 {
        return bisect;
    }
    let d2 = (a1 - a0).signum() * disc.sqrt();
    let a = a1 - (a1 - a0) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
    if a.is_finite() && a > left + 0.1 * width && a < right - 0.1 * width {
        a
    } else {
        bisect
    }
}
