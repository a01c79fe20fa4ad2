//! Iterative and sparse direct linear solvers used by the nonlinear solvers.

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::scalar::Real;

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearStats {
    /// Matrix-vector products performed.
    pub iterations: usize,
    /// Final residual norm relative to the right-hand side.
    pub relative_residual: f64,
}

/// Restarted GMRES with right preconditioning, starting from `x = 0`.
///
/// Stops once `|b - A x| <= tol * |b|` or after `max_iter` products.
pub fn gmres<T: Real>(
    apply: &mut dyn FnMut(&[T], &mut [T]),
    precondition: &mut dyn FnMut(&mut [T]),
    b: &[T],
    restart: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<T>, LinearStats)> {
    let len = b.len();
    let mut x = vec![T::zero(); len];
    let b_norm = norm(b);
    if b_norm == T::zero() {
        return Ok((x, LinearStats { iterations: 0, relative_residual: 0.0 }));
    }
    let target = T::lit(tol) * b_norm;
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut tmp = vec![T::zero(); len];
    loop {
        let beta = norm(&r);
        if beta <= target || iterations >= max_iter {
            let rel = (beta / b_norm).to_f64_lossy();
            if beta <= target {
                return Ok((x, LinearStats { iterations, relative_residual: rel }));
            }
            return Err(Error::NotConverged { solver: "gmres".into(), residual: rel, iterations });
        }
        let mut v: Vec<Vec<T>> = vec![r.iter().map(|&ri| ri / beta).collect()];
        let mut z: Vec<Vec<T>> = Vec::with_capacity(restart);
        let mut hess = vec![vec![T::zero(); restart]; restart + 1];
        let (mut cs, mut sn) = (vec![T::zero(); restart], vec![T::zero(); restart]);
        let mut g = vec![T::zero(); restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && iterations < max_iter {
            let mut zk = v[k].clone();
            precondition(&mut zk);
            apply(&zk, &mut tmp);
            iterations += 1;
            let mut w = tmp.clone();
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                hess[i][k] = hik;
                for (wj, &vj) in w.iter_mut().zip(vi) {
                    *wj = *wj - hik * vj;
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            if d == T::zero() {
                cs[k] = T::one();
                sn[k] = T::zero();
            } else {
                cs[k] = hess[k][k] / d;
                sn[k] = hess[k + 1][k] / d;
            }
            hess[k][k] = d;
            hess[k + 1][k] = T::zero();
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            z.push(zk);
            k += 1;
            if g[k].abs() <= target || wn == T::zero() {
                break;
            }
            v.push(w.iter().map(|&wi| wi / wn).collect());
        }
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let s = (i + 1..k).fold(g[i], |acc, j| acc - hess[i][j] * y[j]);
            y[i] = s / hess[i][i];
        }
        for (zi, &yi) in z.iter().zip(&y) {
            for (xj, &zj) in x.iter_mut().zip(zi) {
                *xj = *xj + yi * zj;
            }
        }
        apply(&x, &mut tmp);
        iterations += 1;
        for ((ri, &bi), &ai) in r.iter_mut().zip(b).zip(&tmp) {
            *ri = bi - ai;
        }
    }
}

/// Sparse LU factorization of a square matrix given by `(row, col, value)` entries;
/// duplicate entries are summed.
pub struct SparseLu {
    lu: Lu<usize, f64>,
    len: usize,
}

impl SparseLu {
    /// Factors the `len x len` matrix.
    pub fn factor(len: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            entries.iter().map(|&(row, col, val)| Triplet { row, col, val }).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(len, len, &triplets)
            .map_err(|e| Error::Argument(format!("sparse assembly: {e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| Error::Argument(format!("sparse factorization: {e:?}")))?;
        Ok(Self { lu, len })
    }

    /// Solves in place.
    pub fn solve(&self, rhs: &mut [f64]) {
        debug_assert_eq!(rhs.len(), self.len);
        self.lu.solve_in_place(faer::ColMut::from_slice_mut(rhs));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_shift(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            y[i] = 3.0 * x[i] - x[(i + 1) % n] - x[(i + n - 1) % n] + 0.01 * (i as f64) * x[i];
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 50;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x, stats) = gmres(&mut laplace_shift, &mut |_| {}, &b, 10, 1e-12, 2000).unwrap();
        let mut ax = vec![0.0; n];
        laplace_shift(&x, &mut ax);
        let err = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err} {stats:?}");
    }

    #[test]
    fn sparse_lu_preconditioner_makes_gmres_exact() {
        let n = 40;
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, 3.0 + 0.01 * i as f64));
            entries.push((i, (i + 1) % n, -0.5));
            entries.push((i, (i + 1) % n, -0.5));
            entries.push((i, (i + n - 1) % n, -1.0));
        }
        let lu = SparseLu::factor(n, &entries).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let (_, stats) = gmres(&mut laplace_shift, &mut |r| lu.solve(r), &b, 10, 1e-12, 20).unwrap();
        assert!(stats.iterations <= 3, "{stats:?}");
    }

    #[test]
    fn gmres_reports_non_convergence() {
        let b = vec![1.0; 30];
        let r = gmres(&mut laplace_shift, &mut |_| {}, &b, 2, 1e-14, 3);
        assert!(matches!(r, Err(Error::NotConverged { .. })));
    }
}
