//! Unit (1,0)-covectors used to test weak positivity of (2,2)-forms.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::HermitianMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = f64::from(base);
    let mut f = 1.0 / b;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % u64::from(base)) as f64;
        i /= u64::from(base);
        f /= b;
    }
    x
}

fn gaussian_pair(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.max(1e-300).ln()).sqrt();
    let a = 2.0 * std::f64::consts::PI * u2;
    (r * a.cos(), r * a.sin())
}

/// Ordered set of unit covectors in `C^n`.
///
/// The first half is deterministic (coordinate axes, pairwise real and imaginary
/// diagonals, then a Halton sequence pushed to the sphere); the rest is drawn from a
/// seeded generator.
#[derive(Clone, Debug)]
pub struct DirectionSet<T> {
    n: usize,
    dirs: Vec<[Complex<T>; 3]>,
}

impl<T: Real> DirectionSet<T> {
    /// `count` directions in dimension `n`.
    pub fn new(n: usize, count: usize, seed: u64) -> Result<Self> {
        if !(1..=3).contains(&n) || count == 0 {
            return Err(Error::Argument(format!("direction set n = {n}, count = {count}")));
        }
        let fixed = count.div_ceil(2);
        let mut raw: Vec<[Complex<f64>; 3]> = Vec::with_capacity(count);
        let zero = Complex::new(0.0, 0.0);
        for j in 0..n {
            let mut v = [zero; 3];
            v[j] = Complex::new(1.0, 0.0);
            raw.push(v);
        }
        for j in 0..n {
            for k in j + 1..n {
                for w in [
                    Complex::new(1.0, 0.0),
                    Complex::new(-1.0, 0.0),
                    Complex::new(0.0, 1.0),
                    Complex::new(0.0, -1.0),
                ] {
                    let mut v = [zero; 3];
                    v[j] = Complex::new(1.0, 0.0);
                    v[k] = w;
                    raw.push(v);
                }
            }
        }
        let mut h = 1u64;
        while raw.len() < fixed {
            let mut v = [zero; 3];
            for (j, slot) in v.iter_mut().enumerate().take(n) {
                let u1 = radical_inverse(h, PRIMES[2 * j]);
                let u2 = radical_inverse(h, PRIMES[2 * j + 1]);
                let (a, b) = gaussian_pair(u1, u2);
                *slot = Complex::new(a, b);
            }
            raw.push(v);
            h += 1;
        }
        raw.truncate(fixed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while raw.len() < count {
            let mut v = [zero; 3];
            for slot in v.iter_mut().take(n) {
                let (a, b) = gaussian_pair(rng.random::<f64>(), rng.random::<f64>());
                *slot = Complex::new(a, b);
            }
            raw.push(v);
        }
        let dirs = raw
            .into_iter()
            .map(|v| {
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.map(|z| Complex::new(T::lit(z.re / norm), T::lit(z.im / norm)))
            })
            .collect();
        Ok(Self { n, dirs })
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of directions.
    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    /// Always false; sets are built non-empty.
    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Iterates over the directions.
    pub fn iter(&self) -> impl Iterator<Item = &[Complex<T>; 3]> {
        self.dirs.iter()
    }

    /// Direction number `i`.
    pub fn get(&self, i: usize) -> &[Complex<T>; 3] {
        &self.dirs[i]
    }
}

/// Coefficient matrix of `i γ ^ γ̄`, namely `γ γ^*`.
pub fn rank_one<T: Real>(g: &[Complex<T>; 3]) -> HermitianMatrix<T> {
    let n = g.iter().rposition(|z| z.norm_sqr() > T::zero()).map_or(1, |p| p + 1);
    rank_one_in(g, n)
}

/// Coefficient matrix of `i γ ^ γ̄` in dimension `n`.
pub fn rank_one_in<T: Real>(g: &[Complex<T>; 3], n: usize) -> HermitianMatrix<T> {
    let mut rows = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            rows.push(g[j] * g[k].conj());
        }
    }
    HermitianMatrix::from_rows(n, &rows).expect("rank-one matrix is Hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_deterministic() {
        let a = DirectionSet::<f64>::new(3, 40, 9).unwrap();
        let b = DirectionSet::<f64>::new(3, 40, 9).unwrap();
        assert_eq!(a.len(), 40);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x, y);
            let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-14);
        }
        let c = DirectionSet::<f64>::new(3, 40, 10).unwrap();
        assert_eq!(a.get(0), c.get(0));
        assert_ne!(a.get(39), c.get(39));
    }

    #[test]
    fn rank_one_is_positive_with_unit_trace() {
        let d = DirectionSet::<f64>::new(3, 10, 1).unwrap();
        for g in d.iter() {
            let m = rank_one_in(g, 3);
            assert!((m.trace() - 1.0).abs() < 1e-14);
            assert!(m.min_eigenvalue() > -1e-14);
        }
    }
}
