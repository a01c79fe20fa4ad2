//! Hermitian coefficient matrices of real (1,1)-forms at a point.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported complex dimension.
pub const MAX_DIM: usize = 3;

/// An `n x n` Hermitian matrix with `n` in `1..=3`.
///
/// A real (1,1)-form `i * sum M_jk dz_j ^ dz̄_k` is represented by its matrix `M`.
/// Entries outside the leading `n x n` block are kept at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix<T> {
    n: usize,
    e: [[Complex<T>; MAX_DIM]; MAX_DIM],
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension(format!("complex dimension {n} outside 1..=3")))
    }
}

impl<T: Real> HermitianMatrix<T> {
    /// Zero matrix.
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self::zeros_unchecked(n))
    }

    pub(crate) fn zeros_unchecked(n: usize) -> Self {
        Self {
            n,
            e: [[Complex::new(T::zero(), T::zero()); MAX_DIM]; MAX_DIM],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Result<Self> {
        Self::scalar(n, T::one())
    }

    /// `c` times the identity.
    pub fn scalar(n: usize, c: T) -> Result<Self> {
        check_dim(n)?;
        let mut m = Self::zeros_unchecked(n);
        for j in 0..n {
            m.e[j][j] = Complex::new(c, T::zero());
        }
        Ok(m)
    }

    /// Diagonal matrix.
    pub fn diag(d: &[T]) -> Result<Self> {
        check_dim(d.len())?;
        let mut m = Self::zeros_unchecked(d.len());
        for (j, &x) in d.iter().enumerate() {
            m.e[j][j] = Complex::new(x, T::zero());
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries, validating conjugate symmetry.
    ///
    /// Entries must satisfy `a[j][k] = conj(a[k][j])` to within `1e-12` relative; the
    /// stored matrix is the exact Hermitian part.
    pub fn from_rows(n: usize, rows: &[Complex<T>]) -> Result<Self> {
        check_dim(n)?;
        if rows.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                n * n,
                rows.len()
            )));
        }
        let scale = rows.iter().fold(T::one(), |acc, z| acc.max(z.norm()));
        let tol = T::lit(1e-12) * scale;
        let mut m = Self::zeros_unchecked(n);
        for j in 0..n {
            for k in 0..n {
                let a = rows[j * n + k];
                let b = rows[k * n + j].conj();
                if !(a - b).norm().is_finite() || (a - b).norm() > tol {
                    return Err(Error::Argument(format!(
                        "entries ({j},{k}) and ({k},{j}) are not conjugate"
                    )));
                }
                m.e[j][k] = (a + b).scale(T::lit(0.5));
            }
        }
        Ok(m)
    }

    /// Builds a matrix from its `n` real diagonal entries and the upper off-diagonal
    /// entries in the order `(0,1), (0,2), (1,2)`.
    pub(crate) fn from_parts(n: usize, diag: &[T], upper: &[Complex<T>]) -> Self {
        let mut m = Self::zeros_unchecked(n);
        let mut c = 0;
        for j in 0..n {
            m.e[j][j] = Complex::new(diag[j], T::zero());
            for k in j + 1..n {
                m.e[j][k] = upper[c];
                m.e[k][j] = upper[c].conj();
                c += 1;
            }
        }
        m
    }

    /// Complex dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(j, k)`.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex<T> {
        self.e[j][k]
    }

    /// Real diagonal entry `(j, j)`.
    #[inline]
    pub fn diag_entry(&self, j: usize) -> T {
        self.e[j][j].re
    }

    /// Row-major `n x n` entries.
    pub fn to_rows(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for j in 0..self.n {
            for k in 0..self.n {
                out.push(self.e[j][k]);
            }
        }
        out
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{} vs {}", self.n, other.n)))
        }
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(self.axpy(T::one(), other))
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(self.axpy(-T::one(), other))
    }

    /// `self + a * other`, dimensions assumed equal.
    #[inline]
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        let mut m = *self;
        for j in 0..self.n {
            for k in 0..self.n {
                m.e[j][k] = self.e[j][k] + other.e[j][k].scale(a);
            }
        }
        m
    }

    /// `c * self`.
    #[inline]
    pub fn scale(&self, c: T) -> Self {
        let mut m = *self;
        for j in 0..self.n {
            for k in 0..self.n {
                m.e[j][k] = self.e[j][k].scale(c);
            }
        }
        m
    }

    /// Trace.
    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, j| acc + self.e[j][j].re)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        let mut s = T::zero();
        for j in 0..self.n {
            for k in 0..self.n {
                s = s + self.e[j][k].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Largest absolute entry, or infinity if any entry is not finite.
    pub fn max_abs(&self) -> T {
        let mut s = T::zero();
        for j in 0..self.n {
            for k in 0..self.n {
                let a = self.e[j][k].norm();
                if !a.is_finite() {
                    return T::infinity();
                }
                s = s.max(a);
            }
        }
        s
    }

    /// Determinant (real for Hermitian matrices).
    pub fn det(&self) -> T {
        let e = &self.e;
        match self.n {
            1 => e[0][0].re,
            2 => e[0][0].re * e[1][1].re - e[0][1].norm_sqr(),
            _ => det3(&[
                [e[0][0], e[0][1], e[0][2]],
                [e[1][0], e[1][1], e[1][2]],
                [e[2][0], e[2][1], e[2][2]],
            ])
            .re,
        }
    }

    /// Adjugate `det(A) A^{-1}`, defined for singular input as well.
    pub fn adjugate(&self) -> Self {
        let e = &self.e;
        let mut m = Self::zeros_unchecked(self.n);
        match self.n {
            1 => m.e[0][0] = Complex::new(T::one(), T::zero()),
            2 => {
                m.e[0][0] = e[1][1];
                m.e[1][1] = e[0][0];
                m.e[0][1] = -e[0][1];
                m.e[1][0] = -e[1][0];
            }
            _ => {
                for j in 0..3 {
                    for k in 0..3 {
                        // cofactor of entry (k, j)
                        let (r0, r1) = ((k + 1) % 3, (k + 2) % 3);
                        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                        m.e[j][k] = e[r0][c0] * e[r1][c1] - e[r0][c1] * e[r1][c0];
                    }
                }
            }
        }
        m
    }

    /// Inverse; fails on singular input.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        let scale = self.max_abs().powi(self.n as i32);
        if !(d.abs() > T::epsilon() * scale) {
            return Err(Error::Argument("singular matrix".into()));
        }
        let e = &self.e;
        let mut m = Self::zeros_unchecked(self.n);
        match self.n {
            1 => m.e[0][0] = Complex::new(T::one() / e[0][0].re, T::zero()),
            2 => {
                let inv = T::one() / d;
                m.e[0][0] = e[1][1].scale(inv);
                m.e[1][1] = e[0][0].scale(inv);
                m.e[0][1] = -e[0][1].scale(inv);
                m.e[1][0] = -e[1][0].scale(inv);
            }
            _ => {
                let inv = T::one() / d;
                for j in 0..3 {
                    for k in 0..3 {
                        // cofactor of (k, j)
                        let r = [(k + 1) % 3, (k + 2) % 3];
                        let c = [(j + 1) % 3, (j + 2) % 3];
                        let cof = e[r[0]][c[0]] * e[r[1]][c[1]] - e[r[0]][c[1]] * e[r[1]][c[0]];
                        m.e[j][k] = cof.scale(inv);
                    }
                }
                m.symmetrize();
            }
        }
        Ok(m)
    }

    fn symmetrize(&mut self) {
        let half = T::lit(0.5);
        for j in 0..self.n {
            self.e[j][j] = Complex::new(self.e[j][j].re, T::zero());
            for k in j + 1..self.n {
                let z = (self.e[j][k] + self.e[k][j].conj()).scale(half);
                self.e[j][k] = z;
                self.e[k][j] = z.conj();
            }
        }
    }

    /// Lower-triangular Cholesky factor, or `None` if not positive definite.
    pub fn cholesky(&self) -> Option<[[Complex<T>; MAX_DIM]; MAX_DIM]> {
        let n = self.n;
        let zero = Complex::new(T::zero(), T::zero());
        let mut l = [[zero; MAX_DIM]; MAX_DIM];
        for j in 0..n {
            let mut d = self.e[j][j].re;
            for k in 0..j {
                d = d - l[j][k].norm_sqr();
            }
            if !(d > T::zero()) {
                return None;
            }
            let ljj = d.sqrt();
            l[j][j] = Complex::new(ljj, T::zero());
            for i in j + 1..n {
                let mut s = self.e[i][j];
                for k in 0..j {
                    s = s - l[i][k] * l[j][k].conj();
                }
                l[i][j] = s.unscale(ljj);
            }
        }
        Some(l)
    }

    /// Eigenvalues in ascending order; only the first `n` slots are meaningful.
    pub fn eigenvalues(&self) -> [T; MAX_DIM] {
        let mut out = [T::zero(); MAX_DIM];
        match self.n {
            1 => out[0] = self.e[0][0].re,
            2 => {
                let (lo, hi) = eig2(self.e[0][0].re, self.e[1][1].re, self.e[0][1]);
                out[0] = lo;
                out[1] = hi;
            }
            _ => {
                let mut v = jacobi_eigenvalues(self);
                v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                out = v;
            }
        }
        out
    }

    /// Smallest eigenvalue.
    #[inline]
    pub fn min_eigenvalue(&self) -> T {
        match self.n {
            1 => self.e[0][0].re,
            2 => eig2(self.e[0][0].re, self.e[1][1].re, self.e[0][1]).0,
            _ => self.eigenvalues()[0],
        }
    }

    /// Largest eigenvalue.
    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues()[self.n - 1]
    }

    /// `L^{-1} self L^{-*}` for a lower-triangular factor `L`.
    pub(crate) fn congruence_inv(&self, l: &[[Complex<T>; MAX_DIM]; MAX_DIM]) -> Self {
        let n = self.n;
        let zero = Complex::new(T::zero(), T::zero());
        // Y = L^{-1} A by forward substitution, column by column.
        let mut y = [[zero; MAX_DIM]; MAX_DIM];
        for c in 0..n {
            for i in 0..n {
                let mut s = self.e[i][c];
                for k in 0..i {
                    s = s - l[i][k] * y[k][c];
                }
                y[i][c] = s.unscale(l[i][i].re);
            }
        }
        // Z = Y L^{-*}, i.e. Z^* = L^{-1} Y^*.
        let mut z = Self::zeros_unchecked(n);
        for r in 0..n {
            let mut row = [zero; MAX_DIM];
            for i in 0..n {
                let mut s = y[r][i].conj();
                for k in 0..i {
                    s = s - l[i][k] * row[k];
                }
                row[i] = s.unscale(l[i][i].re);
            }
            for i in 0..n {
                z.e[r][i] = row[i].conj();
            }
        }
        z.symmetrize();
        z
    }
}

#[inline]
fn eig2<T: Real>(a: T, d: T, b: Complex<T>) -> (T, T) {
    let mean = (a + d) * T::lit(0.5);
    let half = (a - d) * T::lit(0.5);
    let r = half.hypot(b.norm());
    // the eigenvalue of larger magnitude is cancellation free; the other follows from the determinant
    let det = a * d - b.norm_sqr();
    if mean >= T::zero() {
        let hi = mean + r;
        let lo = if hi > T::zero() { det / hi } else { mean - r };
        (lo, hi)
    } else {
        let lo = mean - r;
        (lo, det / lo)
    }
}

pub(crate) fn det3<T: Real>(m: &[[Complex<T>; 3]; 3]) -> Complex<T> {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cyclic complex Jacobi iteration for a 3x3 Hermitian matrix.
fn jacobi_eigenvalues<T: Real>(m: &HermitianMatrix<T>) -> [T; 3] {
    let mut a = m.e;
    let zero = Complex::new(T::zero(), T::zero());
    for _sweep in 0..30 {
        let off = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
        let diag = a[0][0].norm_sqr() + a[1][1].norm_sqr() + a[2][2].norm_sqr();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            let r = apq.norm();
            if r == T::zero() {
                continue;
            }
            let phase = apq.unscale(r);
            let theta = (a[q][q].re - a[p][p].re) / (r + r);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            // U = D R with D = diag(1, conj(phase)) on (p,q)
            let mut u = [[zero; 3]; 3];
            for (i, row) in u.iter_mut().enumerate() {
                row[i] = Complex::new(T::one(), T::zero());
            }
            u[p][p] = Complex::new(c, T::zero());
            u[p][q] = Complex::new(s, T::zero());
            u[q][p] = phase.conj().scale(-s);
            u[q][q] = phase.conj().scale(c);
            let mut au = [[zero; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    au[i][j] = a[i][0] * u[0][j] + a[i][1] * u[1][j] + a[i][2] * u[2][j];
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] = u[0][i].conj() * au[0][j]
                        + u[1][i].conj() * au[1][j]
                        + u[2][i].conj() * au[2][j];
                }
            }
        }
    }
    [a[0][0].re, a[1][1].re, a[2][2].re]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn sample3() -> HermitianMatrix<f64> {
        HermitianMatrix::from_rows(
            3,
            &[
                c(2.0, 0.0),
                c(0.3, 0.4),
                c(-0.1, 0.2),
                c(0.3, -0.4),
                c(1.5, 0.0),
                c(0.5, -0.7),
                c(-0.1, -0.2),
                c(0.5, 0.7),
                c(-0.5, 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn adjugate_times_matrix_is_determinant() {
        let a = HermitianMatrix::<f64>::from_rows(
            3,
            &[
                Complex::new(2.0, 0.0),
                Complex::new(0.3, -0.4),
                Complex::new(0.1, 0.2),
                Complex::new(0.3, 0.4),
                Complex::new(1.5, 0.0),
                Complex::new(-0.2, 0.0),
                Complex::new(0.1, -0.2),
                Complex::new(-0.2, 0.0),
                Complex::new(1.0, 0.0),
            ],
        )
        .unwrap();
        for n in 1..=3 {
            let b = HermitianMatrix::from_parts(n, &[2.0, 1.5, 1.0][..n], &[a.get(0, 1), a.get(0, 2), a.get(1, 2)]);
            let adj = b.adjugate();
            let inv = b.inverse().unwrap();
            assert!(adj.sub(&inv.scale(b.det())).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(HermitianMatrix::<f64>::zeros(0).is_err());
        assert!(HermitianMatrix::<f64>::identity(4).is_err());
    }

    #[test]
    fn rejects_non_hermitian_rows() {
        let r = HermitianMatrix::from_rows(2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn eigenvalues_reproduce_trace_and_determinant() {
        let m = sample3();
        let ev = m.eigenvalues();
        assert!((ev.iter().sum::<f64>() - m.trace()).abs() < 1e-13);
        assert!((ev.iter().product::<f64>() - m.det()).abs() < 1e-13);
        assert!(ev[0] <= ev[1] && ev[1] <= ev[2]);
        // characteristic polynomial vanishes at each eigenvalue
        for &l in &ev {
            let shifted = m.axpy(-l, &HermitianMatrix::identity(3).unwrap());
            assert!(shifted.det().abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = sample3();
        let inv = m.inverse().unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let mut s = c(0.0, 0.0);
                for l in 0..3 {
                    s += m.get(j, l) * inv.get(l, k);
                }
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((s - c(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn cholesky_detects_indefinite() {
        assert!(sample3().cholesky().is_none());
        let pd = sample3().axpy(2.0, &HermitianMatrix::identity(3).unwrap());
        assert!(pd.cholesky().is_some());
    }

    #[test]
    fn congruence_inverse_of_self_is_identity() {
        let pd = sample3().axpy(2.0, &HermitianMatrix::identity(3).unwrap());
        let l = pd.cholesky().unwrap();
        let z = pd.congruence_inv(&l);
        let id = HermitianMatrix::<f64>::identity(3).unwrap();
        assert!(z.sub(&id).unwrap().norm() < 1e-13);
    }
}
