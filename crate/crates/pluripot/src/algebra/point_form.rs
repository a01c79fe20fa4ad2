//! Complex-valued `(p,q)`-forms at a single point of `C^n`.
//!
//! A form is stored as coefficients of `dz_I ^ dz̄_J` where `I` and `J` are strictly
//! increasing multi-indices with all holomorphic factors written first. Multi-indices
//! are bit masks (bit `j` set means `dz_j` is present) and are ranked in lexicographic
//! order of their sorted elements.

use num_complex::Complex;

use super::matrix::HermitianMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Strictly increasing multi-indices of length `k` in `0..n`, as bit masks in
/// lexicographic order.
pub fn index_sets(n: usize, k: usize) -> Vec<u8> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, k: usize, acc: u8, out: &mut Vec<u8>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for j in start..n {
            rec(j + 1, n, k - 1, acc | (1 << j), out);
        }
    }
    rec(0, n, k, 0, &mut out);
    out
}

/// Position of `mask` within `index_sets(n, popcount(mask))`.
pub fn index_rank(n: usize, mask: u8) -> usize {
    index_sets(n, mask.count_ones() as usize)
        .iter()
        .position(|&m| m == mask)
        .expect("mask within dimension")
}

/// `(-1)^{#{(i, k) : i in a, k in b, i > k}}`, the sign that sorts `dz_a ^ dz_b`;
/// zero when the index sets overlap.
#[inline]
pub fn merge_sign(a: u8, b: u8) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut inversions = 0;
    let mut bb = b;
    while bb != 0 {
        let k = bb.trailing_zeros();
        inversions += (a >> (k + 1)).count_ones();
        bb &= bb - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `i^n (-1)^{n(n-1)/2}`: coefficient of `dz_1..dz_n ^ dz̄_1..dz̄_n` in the unit volume
/// form `(i dz_1 ^ dz̄_1) ^ ... ^ (i dz_n ^ dz̄_n)`.
pub fn volume_sign<T: Real>(n: usize) -> Complex<T> {
    let mut z = Complex::new(T::one(), T::zero());
    for _ in 0..n {
        z = z * Complex::new(T::zero(), T::one());
    }
    if (n * (n.saturating_sub(1)) / 2) % 2 == 1 {
        z = -z;
    }
    z
}

/// A `(p,q)`-form at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointForm<T> {
    n: usize,
    p: usize,
    q: usize,
    coeffs: Vec<Complex<T>>,
}

pub(crate) fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl<T: Real> PointForm<T> {
    /// Zero form of bidegree `(p, q)`.
    pub fn zeros(n: usize, p: usize, q: usize) -> Result<Self> {
        if !(1..=3).contains(&n) || p > n || q > n {
            return Err(Error::Dimension(format!("bidegree ({p},{q}) in dimension {n}")));
        }
        Ok(Self {
            n,
            p,
            q,
            coeffs: vec![Complex::new(T::zero(), T::zero()); binom(n, p) * binom(n, q)],
        })
    }

    /// Builds a form from coefficients in `(rank(I), rank(J))` row-major order.
    pub fn from_coeffs(n: usize, p: usize, q: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        let mut f = Self::zeros(n, p, q)?;
        if coeffs.len() != f.coeffs.len() {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                f.coeffs.len(),
                coeffs.len()
            )));
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    /// The real (1,1)-form `i * sum M_jk dz_j ^ dz̄_k`.
    pub fn from_hermitian(m: &HermitianMatrix<T>) -> Self {
        let n = m.dim();
        let i = Complex::new(T::zero(), T::one());
        let mut coeffs = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                coeffs.push(i * m.get(j, k));
            }
        }
        Self { n, p: 1, q: 1, coeffs }
    }

    /// Coefficient matrix of a real (1,1)-form.
    pub fn to_hermitian(&self) -> Result<HermitianMatrix<T>> {
        if (self.p, self.q) != (1, 1) {
            return Err(Error::Dimension(format!("bidegree ({},{}) is not (1,1)", self.p, self.q)));
        }
        let minus_i = Complex::new(T::zero(), -T::one());
        let rows: Vec<Complex<T>> = self.coeffs.iter().map(|&c| minus_i * c).collect();
        HermitianMatrix::from_rows(self.n, &rows)
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Bidegree `(p, q)`.
    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    /// Coefficients in `(rank(I), rank(J))` row-major order.
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    fn slot(&self, i: u8, j: u8) -> usize {
        index_rank(self.n, i) * binom(self.n, self.q) + index_rank(self.n, j)
    }

    /// Coefficient of `dz_I ^ dz̄_J`.
    pub fn get(&self, i: u8, j: u8) -> Complex<T> {
        self.coeffs[self.slot(i, j)]
    }

    /// Sets the coefficient of `dz_I ^ dz̄_J`.
    pub fn set(&mut self, i: u8, j: u8, value: Complex<T>) {
        let s = self.slot(i, j);
        self.coeffs[s] = value;
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.n, self.p, self.q) != (other.n, other.p, other.q) {
            return Err(Error::Dimension("adding forms of different type".into()));
        }
        let mut f = self.clone();
        for (a, b) in f.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + *b;
        }
        Ok(f)
    }

    /// `c * self`.
    pub fn scale(&self, c: T) -> Self {
        let mut f = self.clone();
        for a in f.coeffs.iter_mut() {
            *a = a.scale(c);
        }
        f
    }

    /// Wedge product; the result has bidegree `(p1 + p2, q1 + q2)`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{} vs {}", self.n, other.n)));
        }
        let n = self.n;
        let mut out = Self::zeros(n, self.p + other.p, self.q + other.q)?;
        let (ai, aj) = (index_sets(n, self.p), index_sets(n, self.q));
        let (bi, bj) = (index_sets(n, other.p), index_sets(n, other.q));
        let cross = if (self.q * other.p).is_multiple_of(2) { 1 } else { -1 };
        for (ri, &i) in ai.iter().enumerate() {
            for (rj, &j) in aj.iter().enumerate() {
                let x = self.coeffs[ri * aj.len() + rj];
                if x == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for (rk, &k) in bi.iter().enumerate() {
                    let s1 = merge_sign(i, k);
                    if s1 == 0 {
                        continue;
                    }
                    for (rl, &l) in bj.iter().enumerate() {
                        let s2 = merge_sign(j, l);
                        if s2 == 0 {
                            continue;
                        }
                        let y = other.coeffs[rk * bj.len() + rl];
                        let sign = T::of_usize(1) * T::lit(f64::from(cross * s1 * s2));
                        let slot = out.slot(i | k, j | l);
                        out.coeffs[slot] = out.coeffs[slot] + (x * y).scale(sign);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Density of a top-degree form against the unit volume form.
    pub fn top_density(&self) -> Result<Complex<T>> {
        if (self.p, self.q) != (self.n, self.n) {
            return Err(Error::Dimension(format!(
                "bidegree ({},{}) is not top degree in dimension {}",
                self.p, self.q, self.n
            )));
        }
        Ok(self.coeffs[0] / volume_sign::<T>(self.n))
    }

    /// Largest deviation from the reality condition `conj(f) = f`.
    ///
    /// For a `(p,p)`-form conjugation maps `c_{IJ} dz_I ^ dz̄_J` to
    /// `(-1)^{p^2} conj(c_{IJ}) dz_J ^ dz̄_I` up to the reordering sign, so the form is
    /// real when `c_{JI} = (-1)^p conj(c_{IJ})` with the sign below.
    pub fn reality_defect(&self) -> T {
        if self.p != self.q {
            return T::infinity();
        }
        let sets = index_sets(self.n, self.p);
        // conj(dz_I ^ dz̄_J) = dz̄_I ^ dz_J = (-1)^{p^2} dz_J ^ dz̄_I
        let sign = if (self.p * self.p).is_multiple_of(2) { T::one() } else { -T::one() };
        let mut worst = T::zero();
        for &i in &sets {
            for &j in &sets {
                let d = self.get(j, i) - self.get(i, j).conj().scale(sign);
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

/// Weak-positivity test of a (2,2)-form in dimension 3.
///
/// Pairs `theta` with `i γ ^ γ̄` for every direction `γ` and returns
/// `(all pairings >= -tol, smallest pairing)`.
pub fn is_weakly_positive_22<T: Real>(
    theta: &PointForm<T>,
    directions: &super::directions::DirectionSet<T>,
    tol: T,
) -> Result<(bool, T)> {
    if theta.dim() != 3 || theta.bidegree() != (2, 2) {
        return Err(Error::Dimension("weak positivity expects a (2,2)-form with n = 3".into()));
    }
    if directions.dim() != 3 {
        return Err(Error::Dimension("direction set dimension".into()));
    }
    let mut worst = T::infinity();
    for g in directions.iter() {
        let v = theta.wedge(&PointForm::from_hermitian(&directions::rank_one_in(g, 3)))?;
        worst = worst.min(v.top_density()?.re);
    }
    Ok((worst >= -tol, worst))
}

use super::directions;
