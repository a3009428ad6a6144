//! Exact reduction of an L2-penalised linear model to the row space of the
//! training matrix.
//!
//! With `K = X Xᵀ = U Λ Uᵀ` (non-null eigenpairs only) the orthonormal basis
//! `V = Xᵀ U Λ^{-1/2}` spans every reachable weight vector. Writing `w = V z`
//! gives `X w = U Λ^{1/2} z` and `‖w‖ = ‖z‖`, so the penalised objective in
//! `z` is the original one restricted to that subspace. Because gradient-based
//! iterates starting from `w = 0` never leave it, L-BFGS traces the same path
//! in either parameterisation.

use rayon::prelude::*;

use crate::matrix::dot;
use crate::{Error, Matrix, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;

/// `X Xᵀ`.
pub(crate) fn gram(x: &Matrix) -> Matrix {
    let n = x.rows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| dot(x.row(i), x.row(j))).collect())
        .collect();
    let mut k = Matrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            k.set(i, i + off, v);
            k.set(i + off, i, v);
        }
    }
    k
}

/// `A Bᵀ` for row-major `A` (m × f) and `B` (n × f).
#[cfg(test)]
pub(crate) fn cross_gram(a: &Matrix, b: &Matrix) -> Matrix {
    let rows: Vec<Vec<f64>> = a
        .iter_rows()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|ra| b.iter_rows().map(|rb| dot(ra, rb)).collect())
        .collect();
    Matrix::from_rows(&rows).unwrap_or_else(|_| Matrix::zeros(a.rows(), b.rows()))
}

pub(crate) fn submatrix(k: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        let src = k.row(r);
        for (j, &c) in cols.iter().enumerate() {
            out.set(i, j, src[c]);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub(crate) struct RowSpace {
    /// `U Λ^{-1/2}` (n × r).
    inv_sqrt: Matrix,
    /// Training design in reduced coordinates, `U Λ^{1/2}` (n × r).
    design: Matrix,
}

impl RowSpace {
    pub(crate) fn from_gram(k: &Matrix) -> Result<Self> {
        let n = k.rows();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let eig = nalgebra::SymmetricEigen::new(k.to_nalgebra());
        let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let mut keep: Vec<usize> = (0..n)
            .filter(|&i| eig.eigenvalues[i] > RANK_TOL * max && max > 0.0)
            .collect();
        // deterministic column order: descending eigenvalue
        keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let r = keep.len();
        let mut inv_sqrt = Matrix::zeros(n, r);
        let mut design = Matrix::zeros(n, r);
        for (c, &e) in keep.iter().enumerate() {
            let lam = eig.eigenvalues[e];
            let (s, is) = (lam.sqrt(), 1.0 / lam.sqrt());
            for i in 0..n {
                let u = eig.eigenvectors[(i, e)];
                inv_sqrt.set(i, c, u * is);
                design.set(i, c, u * s);
            }
        }
        Ok(RowSpace { inv_sqrt, design })
    }

    pub(crate) fn rank(&self) -> usize {
        self.design.cols()
    }

    pub(crate) fn design(&self) -> &Matrix {
        &self.design
    }

    /// Reduced coordinates of new rows given their inner products with the
    /// training rows (m × n).
    pub(crate) fn project(&self, cross: &Matrix) -> Matrix {
        let (m, r) = (cross.rows(), self.rank());
        let mut out = Matrix::zeros(m, r);
        for i in 0..m {
            let row = out.row_mut(i);
            self.inv_sqrt.tr_mul_vec_into(cross.row(i), row);
        }
        out
    }

    /// Full weight vector `Xᵀ U Λ^{-1/2} z` for training matrix `x`.
    pub(crate) fn lift(&self, x: &Matrix, z: &[f64]) -> Vec<f64> {
        let coef = self.inv_sqrt.mul_vec(z);
        let mut w = vec![0.0; x.cols()];
        x.tr_mul_vec_into(&coef, &mut w);
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random(n: usize, f: usize, seed: u64) -> Matrix {
        let mut rng = stream_rng(seed, 0);
        Matrix::from_vec(n, f, (0..n * f).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn reduction_preserves_products_and_norms() {
        let x = random(6, 20, 1);
        let rs = RowSpace::from_gram(&gram(&x)).unwrap();
        assert_eq!(rs.rank(), 6);
        let z: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let w = rs.lift(&x, &z);
        let direct = x.mul_vec(&w);
        let reduced = rs.design().mul_vec(&z);
        for (a, b) in direct.iter().zip(&reduced) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((dot(&w, &w) - dot(&z, &z)).abs() < 1e-9);

        let y = random(3, 20, 2);
        let projected = rs.project(&cross_gram(&y, &x));
        let via_w = y.mul_vec(&w);
        for (a, b) in via_w.iter().zip(projected.mul_vec(&z)) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_deficient() {
        let mut x = random(5, 8, 3);
        let r0 = x.row(0).to_vec();
        x.row_mut(4).copy_from_slice(&r0);
        let rs = RowSpace::from_gram(&gram(&x)).unwrap();
        assert_eq!(rs.rank(), 4);
        let k = gram(&x);
        let sub = submatrix(&k, &[1, 3], &[0, 2]);
        assert_eq!(sub.get(1, 1), k.get(3, 2));
    }
}
