//! Mixed discriminants, top-degree wedge densities and the pointwise inequalities
//! built on them.

use num_complex::Complex;

use super::matrix::{det3, HermitianMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

const PERMS3: [([usize; 3], i8); 6] = [
    ([0, 1, 2], 1),
    ([0, 2, 1], -1),
    ([1, 0, 2], -1),
    ([1, 2, 0], 1),
    ([2, 0, 1], 1),
    ([2, 1, 0], -1),
];

fn check_slots<T: Real>(mats: &[&HermitianMatrix<T>]) -> Result<usize> {
    let n = mats
        .first()
        .ok_or_else(|| Error::Dimension("empty matrix list".into()))?
        .dim();
    if mats.len() != n {
        return Err(Error::Dimension(format!(
            "expected {n} matrices for dimension {n}, got {}",
            mats.len()
        )));
    }
    if let Some(m) = mats.iter().find(|m| m.dim() != n) {
        return Err(Error::Dimension(format!("{} vs {n}", m.dim())));
    }
    Ok(n)
}

/// Top-degree density of `a_1 ^ ... ^ a_n`, i.e. `n! * D(a_1, ..., a_n)`.
///
/// Computed as the sum over permutations of determinants whose `k`-th column is taken
/// from the `k`-th column of the permuted matrix. Dimensions are not checked.
#[inline]
pub fn wedge_top_density_unchecked<T: Real>(mats: &[&HermitianMatrix<T>]) -> T {
    match mats.len() {
        1 => mats[0].diag_entry(0),
        2 => {
            let (a, b) = (mats[0], mats[1]);
            a.diag_entry(0) * b.diag_entry(1) + a.diag_entry(1) * b.diag_entry(0)
                - (a.get(0, 1) * b.get(1, 0)).re
                - (a.get(1, 0) * b.get(0, 1)).re
        }
        _ => {
            let mut s = Complex::new(T::zero(), T::zero());
            for (p, _) in PERMS3.iter() {
                let cols = [mats[p[0]], mats[p[1]], mats[p[2]]];
                let mut m = [[Complex::new(T::zero(), T::zero()); 3]; 3];
                for (r, row) in m.iter_mut().enumerate() {
                    for (k, slot) in row.iter_mut().enumerate() {
                        *slot = cols[k].get(r, k);
                    }
                }
                s = s + det3(&m);
            }
            s.re
        }
    }
}

/// Mixed discriminant `D(a_1, ..., a_n)`: `1/n!` times the coefficient of
/// `t_1 ... t_n` in `det(t_1 a_1 + ... + t_n a_n)`.
pub fn mixed_discriminant<T: Real>(mats: &[&HermitianMatrix<T>]) -> Result<T> {
    let n = check_slots(mats)?;
    Ok(wedge_top_density_unchecked(mats) / T::of_usize(factorial(n)))
}

/// Density of the top form `a_1 ^ ... ^ a_n` against the unit-mass Lebesgue measure.
///
/// The convention is fixed here once: `n! * mixed_discriminant`, so that a constant
/// identity form has `w^n` density `n!`.
pub fn wedge_top_density<T: Real>(mats: &[&HermitianMatrix<T>]) -> Result<T> {
    check_slots(mats)?;
    Ok(wedge_top_density_unchecked(mats))
}

pub(crate) fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Default positivity tolerance `1e-10 * (1 + |a|)`.
pub fn default_positivity_tol<T: Real>(a: &HermitianMatrix<T>) -> T {
    T::lit(1e-10) * (T::one() + a.norm())
}

/// Semi-positivity test: `(smallest eigenvalue >= -tol, smallest eigenvalue)`.
pub fn is_positive_11<T: Real>(a: &HermitianMatrix<T>, tol: T) -> (bool, T) {
    let worst = a.min_eigenvalue();
    (worst >= -tol, worst)
}

fn require_positive<T: Real>(what: &str, b: &HermitianMatrix<T>) -> Result<()> {
    let lo = b.min_eigenvalue();
    if lo > default_positivity_tol(b) {
        Ok(())
    } else {
        Err(Error::NotPositive {
            what: what.into(),
            eigenvalue: lo.to_f64_lossy(),
        })
    }
}

/// Relative trace `tr(b^{-1} a)` for positive definite `b`.
pub fn relative_trace<T: Real>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{} vs {}", a.dim(), b.dim())));
    }
    require_positive("reference matrix", b)?;
    let l = b.cholesky().ok_or_else(|| Error::NotPositive {
        what: "reference matrix".into(),
        eigenvalue: b.min_eigenvalue().to_f64_lossy(),
    })?;
    Ok(a.congruence_inv(&l).trace())
}

/// Both sides of the pointwise trace inequality for positive `t1, t2, t3`:
///
/// `lhs = [t1 ^ t3^{n-1} / t1^n] * [t2 ^ t1^{n-1} / t1^n]`,
/// `rhs = (1/n) * [t2 ^ t3^{n-1} / t1^n]`.
pub fn popovici_pointwise<T: Real>(
    t1: &HermitianMatrix<T>,
    t2: &HermitianMatrix<T>,
    t3: &HermitianMatrix<T>,
) -> Result<(T, T)> {
    let n = t1.dim();
    if t2.dim() != n || t3.dim() != n {
        return Err(Error::Dimension("popovici triple".into()));
    }
    require_positive("t1", t1)?;
    require_positive("t2", t2)?;
    require_positive("t3", t3)?;
    Ok(popovici_unchecked(t1, t2, t3))
}

pub(crate) fn popovici_unchecked<T: Real>(
    t1: &HermitianMatrix<T>,
    t2: &HermitianMatrix<T>,
    t3: &HermitianMatrix<T>,
) -> (T, T) {
    let n = t1.dim();
    let with = |first: &HermitianMatrix<T>, rest: &HermitianMatrix<T>| {
        let mut slots = vec![rest; n];
        slots[0] = first;
        wedge_top_density_unchecked(&slots)
    };
    let vol = with(t1, t1);
    let a = with(t1, t3) / vol;
    let b = with(t2, t1) / vol;
    let c = with(t2, t3) / vol;
    (a * b, c / T::of_usize(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = HermitianMatrix<f64>;

    fn random_herm(rng: &mut ChaCha8Rng, n: usize) -> M {
        let mut rows = vec![Complex::new(0.0, 0.0); n * n];
        for j in 0..n {
            rows[j * n + j] = Complex::new(rng.random_range(-1.0..1.0), 0.0);
            for k in j + 1..n {
                let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                rows[j * n + k] = z;
                rows[k * n + j] = z.conj();
            }
        }
        M::from_rows(n, &rows).unwrap()
    }

    fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> M {
        // G G^* + 0.1 I
        let g: Vec<Complex<f64>> = (0..n * n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut rows = vec![Complex::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                let mut s = Complex::new(0.0, 0.0);
                for l in 0..n {
                    s += g[j * n + l] * g[k * n + l].conj();
                }
                rows[j * n + k] = s;
            }
            rows[j * n + j] += 0.1;
        }
        M::from_rows(n, &rows).unwrap()
    }

    /// Oracle: coefficient of t_1...t_n in det(sum t_i A_i) by inclusion-exclusion over
    /// subsets, sharing no code with the permutation-of-columns route.
    fn polarization_oracle(mats: &[M]) -> f64 {
        let n = mats.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            let mut sum = M::zeros(n).unwrap();
            for (i, m) in mats.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sum = sum.add(m).unwrap();
                }
            }
            let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
            total += sign * sum.det();
        }
        total / factorial(n) as f64
    }

    #[test]
    fn identity_discriminant_is_one() {
        let i = M::identity(2).unwrap();
        assert_eq!(mixed_discriminant(&[&i, &i]).unwrap(), 1.0);
        assert_eq!(wedge_top_density(&[&i, &i]).unwrap(), 2.0);
    }

    #[test]
    fn single_slot_density_is_the_entry() {
        let m = M::diag(&[0.7]).unwrap();
        assert_eq!(wedge_top_density(&[&m]).unwrap(), 0.7);
    }

    #[test]
    fn diagonal_pair_matches_symbolic_expansion() {
        // det(tA + sB) = (t a1 + s b1)(t a2 + s b2): ts-coefficient a1 b2 + a2 b1.
        let a = M::diag(&[2.0, 3.0]).unwrap();
        let b = M::diag(&[5.0, 7.0]).unwrap();
        assert_eq!(mixed_discriminant(&[&a, &b]).unwrap(), (2.0 * 7.0 + 3.0 * 5.0) / 2.0);
    }

    #[test]
    fn matches_polarization_oracle_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..200 {
                let mats: Vec<M> = (0..n).map(|_| random_herm(&mut rng, n)).collect();
                let refs: Vec<&M> = mats.iter().collect();
                let got = mixed_discriminant(&refs).unwrap();
                let want = polarization_oracle(&mats);
                assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn equal_slots_give_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_herm(&mut rng, 3);
        let d = wedge_top_density(&[&a, &a, &a]).unwrap();
        assert!((d - 6.0 * a.det()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = M::identity(2).unwrap();
        let b = M::identity(3).unwrap();
        assert!(mixed_discriminant(&[&a, &b]).is_err());
        assert!(mixed_discriminant(&[&a]).is_err());
    }

    #[test]
    fn positivity_tolerance_semantics() {
        let i = M::identity(2).unwrap();
        assert_eq!(is_positive_11(&i, 0.0), (true, 1.0));
        let d = M::diag(&[1.0, -1.0]).unwrap();
        assert_eq!(is_positive_11(&d, 0.0), (false, -1.0));
        let e = M::diag(&[1.0, -1e-9]).unwrap();
        assert_eq!(is_positive_11(&e, 1e-8), (true, -1e-9));
    }

    #[test]
    fn relative_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_herm(&mut rng, 3);
        let i = M::identity(3).unwrap();
        assert!((relative_trace(&a, &i).unwrap() - a.trace()).abs() < 1e-14);
        let b = random_positive(&mut rng, 3);
        assert!((relative_trace(&b, &b).unwrap() - 3.0).abs() < 1e-12);
        assert!(relative_trace(&a, &M::diag(&[1.0, 1.0, -1.0]).unwrap()).is_err());
    }

    /// Oracle: eigenvalue sum of b^{-1/2} a b^{-1/2}, with b^{-1/2} built from the
    /// eigendecomposition of b obtained by inverse iteration on shifted systems.
    #[test]
    fn relative_trace_matches_similarity_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = random_positive(&mut rng, 2);
            let b = random_positive(&mut rng, 2);
            // 2x2 closed-form b^{-1/2}: b^{1/2} = (b + sqrt(det b) I)/sqrt(tr b + 2 sqrt(det b))
            let s = b.det().sqrt();
            let t = (b.trace() + 2.0 * s).sqrt();
            let root = b.axpy(s, &M::identity(2).unwrap()).scale(1.0 / t);
            let inv_root = root.inverse().unwrap();
            let mut c = [[Complex::new(0.0, 0.0); 2]; 2];
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        for m in 0..2 {
                            c[j][k] += inv_root.get(j, l) * a.get(l, m) * inv_root.get(m, k);
                        }
                    }
                }
            }
            let sim = M::from_rows(2, &[c[0][0], c[0][1], c[1][0], c[1][1]]).unwrap();
            let ev = sim.eigenvalues();
            let want = ev[0] + ev[1];
            let got = relative_trace(&a, &b).unwrap();
            assert!((got - want).abs() < 1e-10 * want.abs());
        }
    }

    #[test]
    fn popovici_identity_triple() {
        for n in 1..=3 {
            let i = M::identity(n).unwrap();
            let (l, r) = popovici_pointwise(&i, &i, &i).unwrap();
            assert!((l - 1.0).abs() < 1e-15);
            assert!((r - 1.0 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn popovici_equal_arguments_give_unit_ratios() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_positive(&mut rng, 3);
        let (l, r) = popovici_pointwise(&a, &a, &a).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn popovici_rejects_indefinite_input() {
        let i = M::identity(2).unwrap();
        let bad = M::diag(&[1.0, -0.5]).unwrap();
        assert!(popovici_pointwise(&i, &bad, &i).is_err());
    }
}
