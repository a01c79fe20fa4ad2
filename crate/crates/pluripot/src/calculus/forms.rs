//! Differential forms on the torus and the operators `∂`, `∂̄`, `d`, `d^c`.
//!
//! A [`FormField`] is a sum of homogeneous `(p,q)` parts of one total degree. Each part
//! stores one complex array per coefficient slot `(I, J)`, in the slot order of
//! [`PointForm`]. The normalization is `d^c = (i/2)(∂̄ - ∂)`, so that `dd^c = i ∂∂̄`
//! and `dd^c u` has coefficient matrix equal to the complex Hessian of `u`.

use std::collections::BTreeMap;

use num_complex::Complex;

use super::field::{HermitianForm11Field, ScalarField};
use super::grid::GridSpec;
use super::spectral::Spectral;
use crate::algebra::point_form::{binom, index_rank, index_sets, merge_sign, volume_sign};
use crate::algebra::PointForm;
use crate::error::{Error, Result};
use crate::scalar::Real;

type Part<T> = Vec<Vec<Complex<T>>>;

/// A differential form field of fixed total degree.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField<T> {
    grid: GridSpec,
    degree: usize,
    parts: BTreeMap<(usize, usize), Part<T>>,
}

fn zero_part<T: Real>(n: usize, p: usize, q: usize, len: usize) -> Part<T> {
    vec![vec![Complex::new(T::zero(), T::zero()); len]; binom(n, p) * binom(n, q)]
}

impl<T: Real> FormField<T> {
    /// Zero form of bidegree `(p, q)`.
    pub fn zeros(grid: &GridSpec, p: usize, q: usize) -> Result<Self> {
        let n = grid.dim();
        if p > n || q > n {
            return Err(Error::Dimension(format!("bidegree ({p},{q}) in dimension {n}")));
        }
        let mut parts = BTreeMap::new();
        parts.insert((p, q), zero_part(n, p, q, grid.len()));
        Ok(Self { grid: grid.clone(), degree: p + q, parts })
    }

    /// Pure `(p, q)` form from its slot arrays.
    pub(crate) fn from_part(grid: &GridSpec, p: usize, q: usize, part: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let n = grid.dim();
        if p > n || q > n || part.len() != binom(n, p) * binom(n, q) || part.iter().any(|a| a.len() != grid.len()) {
            return Err(Error::Dimension(format!("slot arrays for bidegree ({p},{q})")));
        }
        let mut f = Self::empty(grid, p + q);
        f.parts.insert((p, q), part);
        Ok(f)
    }

    /// Zero form of total degree `degree` with no parts.
    fn empty(grid: &GridSpec, degree: usize) -> Self {
        Self { grid: grid.clone(), degree, parts: BTreeMap::new() }
    }

    /// A function viewed as a (0,0)-form.
    pub fn from_scalar(u: &ScalarField<T>) -> Self {
        let mut f = Self::empty(u.grid(), 0);
        f.parts.insert(
            (0, 0),
            vec![u.values().iter().map(|&v| Complex::new(v, T::zero())).collect()],
        );
        f
    }

    /// The real (1,1)-form `i * sum M_jk dz_j ^ dz̄_k`.
    pub fn from_hermitian(m: &HermitianForm11Field<T>) -> Self {
        let n = m.dim();
        let len = m.grid().len();
        let i = Complex::new(T::zero(), T::one());
        let mut part = zero_part(n, 1, 1, len);
        for (point, _) in (0..len).zip(0..) {
            let a = m.at(point);
            for j in 0..n {
                for k in 0..n {
                    part[j * n + k][point] = i * a.get(j, k);
                }
            }
        }
        let mut f = Self::empty(m.grid(), 2);
        f.parts.insert((1, 1), part);
        f
    }

    /// Coefficient matrices of a pure real (1,1)-form.
    pub fn to_hermitian(&self) -> Result<HermitianForm11Field<T>> {
        let n = self.grid.dim();
        if self.degree != 2 || self.parts.keys().any(|&k| k != (1, 1)) {
            return Err(Error::Dimension("not a pure (1,1)-form".into()));
        }
        let len = self.grid.len();
        let zero = zero_part(n, 1, 1, len);
        let part = self.parts.get(&(1, 1)).unwrap_or(&zero);
        let minus_i = Complex::new(T::zero(), -T::one());
        let diag = (0..n).map(|j| part[j * n + j].iter().map(|&c| (minus_i * c).re).collect()).collect();
        let mut upper = Vec::new();
        for j in 0..n {
            for k in j + 1..n {
                upper.push(part[j * n + k].iter().map(|&c| minus_i * c).collect());
            }
        }
        HermitianForm11Field::from_components(&self.grid, diag, upper)
    }

    /// Grid.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Total degree `p + q`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Bidegrees with stored parts.
    pub fn bidegrees(&self) -> Vec<(usize, usize)> {
        self.parts.keys().copied().collect()
    }

    /// Component arrays of the `(p, q)` part, if stored.
    pub fn part(&self, p: usize, q: usize) -> Option<&[Vec<Complex<T>>]> {
        self.parts.get(&(p, q)).map(|v| v.as_slice())
    }

    /// The `(p, q)` part as its own form (zero if absent).
    pub fn project(&self, p: usize, q: usize) -> Result<Self> {
        let mut f = Self::zeros(&self.grid, p, q)?;
        if let Some(part) = self.parts.get(&(p, q)) {
            f.parts.insert((p, q), part.clone());
        }
        Ok(f)
    }

    /// The `(p, q)` part at one grid point.
    pub fn point(&self, i: usize, p: usize, q: usize) -> Result<PointForm<T>> {
        let n = self.grid.dim();
        let coeffs = match self.parts.get(&(p, q)) {
            Some(part) => part.iter().map(|arr| arr[i]).collect(),
            None => vec![Complex::new(T::zero(), T::zero()); binom(n, p) * binom(n, q)],
        };
        PointForm::from_coeffs(n, p, q, coeffs)
    }

    fn combine(&self, other: &Self, a: Complex<T>, b: Complex<T>) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        if self.degree != other.degree {
            return Err(Error::Dimension(format!("degree {} vs {}", self.degree, other.degree)));
        }
        let mut out = Self::empty(&self.grid, self.degree);
        let keys: std::collections::BTreeSet<_> =
            self.parts.keys().chain(other.parts.keys()).copied().collect();
        let n = self.grid.dim();
        let len = self.grid.len();
        for key in keys {
            let mut part = zero_part(n, key.0, key.1, len);
            for (src, w) in [(self, a), (other, b)] {
                if let Some(sp) = src.parts.get(&key) {
                    for (dst, s) in part.iter_mut().zip(sp) {
                        for (d, v) in dst.iter_mut().zip(s) {
                            *d = *d + w * v;
                        }
                    }
                }
            }
            out.parts.insert(key, part);
        }
        Ok(out)
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let one = Complex::new(T::one(), T::zero());
        self.combine(other, one, one)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        let one = Complex::new(T::one(), T::zero());
        self.combine(other, one, -one)
    }

    /// `z * self`.
    pub fn scale(&self, z: Complex<T>) -> Self {
        let mut out = self.clone();
        for part in out.parts.values_mut() {
            for arr in part.iter_mut() {
                for v in arr.iter_mut() {
                    *v = *v * z;
                }
            }
        }
        out
    }

    /// Largest coefficient modulus.
    pub fn sup_norm(&self) -> T {
        self.parts
            .values()
            .flatten()
            .flatten()
            .fold(T::zero(), |m, z| m.max(z.norm()))
    }

    fn derivative(&self, sp: &Spectral<T>, holomorphic: bool) -> Result<Self> {
        self.grid.same_as(sp.grid())?;
        let n = self.grid.dim();
        if self.degree >= 2 * n {
            return Err(Error::Dimension("derivative of a top-degree form".into()));
        }
        let len = self.grid.len();
        let mut out = Self::empty(&self.grid, self.degree + 1);
        let mut spectra: BTreeMap<(usize, usize), Part<T>> = BTreeMap::new();
        for (&(p, q), part) in &self.parts {
            let (op, oq) = if holomorphic { (p + 1, q) } else { (p, q + 1) };
            if op > n || oq > n {
                continue;
            }
            let acc = spectra.entry((op, oq)).or_insert_with(|| zero_part(n, op, oq, len));
            let sets_i = index_sets(n, p);
            let sets_j = index_sets(n, q);
            let out_q = binom(n, oq);
            let bar_sign = if p % 2 == 0 { T::one() } else { -T::one() };
            for (ri, &mi) in sets_i.iter().enumerate() {
                for (rj, &mj) in sets_j.iter().enumerate() {
                    let mut spec = part[ri * sets_j.len() + rj].clone();
                    if spec.iter().all(|z| *z == Complex::new(T::zero(), T::zero())) {
                        continue;
                    }
                    sp.forward(&mut spec);
                    for l in 0..n {
                        let bit = 1u8 << l;
                        let (target, sign) = if holomorphic {
                            (mi, merge_sign(bit, mi))
                        } else {
                            (mj, merge_sign(bit, mj))
                        };
                        if sign == 0 {
                            continue;
                        }
                        let s = T::lit(f64::from(sign)) * if holomorphic { T::one() } else { bar_sign };
                        let slot = if holomorphic {
                            index_rank(n, target | bit) * out_q + rj
                        } else {
                            ri * out_q + index_rank(n, target | bit)
                        };
                        let dst = &mut acc[slot];
                        sp.for_each_index(|flat, idx| {
                            let sym = if holomorphic { sp.dz(l, idx) } else { sp.dzbar(l, idx) };
                            dst[flat] = dst[flat] + spec[flat] * sym.scale(s);
                        });
                    }
                }
            }
        }
        for (key, mut part) in spectra {
            for arr in part.iter_mut() {
                sp.inverse(arr);
            }
            out.parts.insert(key, part);
        }
        Ok(out)
    }

    /// `∂ self`.
    pub fn partial(&self, sp: &Spectral<T>) -> Result<Self> {
        self.derivative(sp, true)
    }

    /// `∂̄ self`.
    pub fn partial_bar(&self, sp: &Spectral<T>) -> Result<Self> {
        self.derivative(sp, false)
    }

    /// Exterior derivative `d = ∂ + ∂̄`.
    pub fn exterior_d(&self, sp: &Spectral<T>) -> Result<Self> {
        self.partial(sp)?.add(&self.partial_bar(sp)?)
    }

    /// `d^c = (i/2)(∂̄ - ∂)`.
    pub fn d_c(&self, sp: &Spectral<T>) -> Result<Self> {
        let half_i = Complex::new(T::zero(), T::lit(0.5));
        Ok(self.partial_bar(sp)?.sub(&self.partial(sp)?)?.scale(half_i))
    }

    /// `dd^c self = i ∂∂̄ self`.
    pub fn ddc(&self, sp: &Spectral<T>) -> Result<Self> {
        self.d_c(sp)?.exterior_d(sp)
    }

    /// Pointwise wedge product; parts whose bidegree would exceed `n` vanish.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let n = self.grid.dim();
        if self.degree + other.degree > 2 * n {
            return Err(Error::Dimension("wedge exceeds top degree".into()));
        }
        let len = self.grid.len();
        let mut out = Self::empty(&self.grid, self.degree + other.degree);
        for (&(p1, q1), a) in &self.parts {
            for (&(p2, q2), b) in &other.parts {
                let (p, q) = (p1 + p2, q1 + q2);
                if p > n || q > n {
                    continue;
                }
                let dst = out.parts.entry((p, q)).or_insert_with(|| zero_part(n, p, q, len));
                let (ai, aj) = (index_sets(n, p1), index_sets(n, q1));
                let (bi, bj) = (index_sets(n, p2), index_sets(n, q2));
                let cross = if q1 * p2 % 2 == 0 { 1 } else { -1 };
                let oq = binom(n, q);
                for (ri, &i) in ai.iter().enumerate() {
                    for (rj, &j) in aj.iter().enumerate() {
                        let x = &a[ri * aj.len() + rj];
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
                                let y = &b[rk * bj.len() + rl];
                                let sign = T::lit(f64::from(cross * s1 * s2));
                                let slot = index_rank(n, i | k) * oq + index_rank(n, j | l);
                                for ((d, &xv), &yv) in dst[slot].iter_mut().zip(x).zip(y) {
                                    *d = *d + (xv * yv).scale(sign);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Density of a top-degree form, returned with the largest imaginary part found.
    pub fn top_density(&self) -> Result<(ScalarField<T>, T)> {
        let n = self.grid.dim();
        if self.degree != 2 * n {
            return Err(Error::Dimension(format!("degree {} is not top degree", self.degree)));
        }
        let sigma = volume_sign::<T>(n);
        let len = self.grid.len();
        let (values, imag): (Vec<T>, T) = match self.parts.get(&(n, n)) {
            Some(part) => {
                let mut worst = T::zero();
                let vals = part[0]
                    .iter()
                    .map(|&c| {
                        let d = c / sigma;
                        worst = worst.max(d.im.abs());
                        d.re
                    })
                    .collect();
                (vals, worst)
            }
            None => (vec![T::zero(); len], T::zero()),
        };
        Ok((ScalarField::new_unchecked(self.grid.clone(), values), imag))
    }
}

/// Norms of `dd^c ω` and `dω ^ d^c ω` for a (1,1)-form field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Closedness<T> {
    pub ddc_norm: T,
    pub d_wedge_dc_norm: T,
    pub d_norm: T,
}

/// Measures how far `omega` is from satisfying `dd^c ω = 0` and `dω ^ d^c ω = 0`.
pub fn closedness<T: Real>(sp: &Spectral<T>, omega: &HermitianForm11Field<T>) -> Result<Closedness<T>> {
    if omega.constant_value().is_some() {
        return Ok(Closedness { ddc_norm: T::zero(), d_wedge_dc_norm: T::zero(), d_norm: T::zero() });
    }
    let w = FormField::from_hermitian(omega);
    let d = w.exterior_d(sp)?;
    let dc = w.d_c(sp)?;
    let n = omega.dim();
    let ddc_norm = if n >= 2 { dc.exterior_d(sp)?.sup_norm() } else { T::zero() };
    let d_wedge_dc_norm = if n >= 3 { d.wedge(&dc)?.sup_norm() } else { T::zero() };
    Ok(Closedness { ddc_norm, d_wedge_dc_norm, d_norm: d.sup_norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::HermitianMatrix;
    use crate::calculus::spectral::ddc;
    use std::f64::consts::PI;

    fn wave(c: &[f64; 6], a: f64, b: f64) -> f64 {
        (2.0 * PI * (c[0] + 2.0 * c[1] - c[2]) + a).sin() * b + (2.0 * PI * (c[3] - c[0])).cos()
    }

    fn random_11(g: &GridSpec) -> FormField<f64> {
        let n = g.dim();
        let mut f = FormField::zeros(g, 1, 1).unwrap();
        let part = f.parts.get_mut(&(1, 1)).unwrap();
        for (s, arr) in part.iter_mut().enumerate().take(n * n) {
            for (i, v) in arr.iter_mut().enumerate() {
                let c = g.coords(i);
                *v = Complex::new(wave(&c, s as f64, 1.0), wave(&c, 0.5 * s as f64, -0.7));
            }
        }
        f
    }

    #[test]
    fn constant_form_is_closed() {
        let g = GridSpec::cube(2, 16).unwrap();
        let sp = Spectral::new(&g);
        let id = HermitianForm11Field::constant(&g, HermitianMatrix::<f64>::identity(2).unwrap()).unwrap();
        let w = FormField::from_hermitian(&id);
        assert!(w.exterior_d(&sp).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn d_squared_and_dc_squared_vanish() {
        let g = GridSpec::cube(2, 16).unwrap();
        let sp = Spectral::new(&g);
        let f = random_11(&g);
        let scale = f.sup_norm();
        let dd = f.exterior_d(&sp).unwrap().exterior_d(&sp).unwrap();
        assert!(dd.sup_norm() <= 1e-10 * scale, "{}", dd.sup_norm());
        let cc = f.d_c(&sp).unwrap().d_c(&sp).unwrap();
        assert!(cc.sup_norm() <= 1e-10 * scale);
        let a = f.partial_bar(&sp).unwrap().partial(&sp).unwrap();
        let b = f.partial(&sp).unwrap().partial_bar(&sp).unwrap();
        assert!(a.add(&b).unwrap().sup_norm() <= 1e-10 * scale);
    }

    #[test]
    fn ddc_of_function_is_complex_hessian() {
        let g = GridSpec::cube(2, 16).unwrap();
        let sp = Spectral::<f64>::new(&g);
        let u = ScalarField::from_fn(&g, |c| wave(c, 0.3, 0.8));
        let via_forms = FormField::from_scalar(&u).ddc(&sp).unwrap().project(1, 1).unwrap().to_hermitian().unwrap();
        let direct = ddc(&u).unwrap();
        assert!(via_forms.sup_distance(&direct).unwrap() < 1e-11);
    }

    /// ω = (1 + cos(2πx_1)/2)·(i dz_1^dz̄_1 + i dz_2^dz̄_2). With g = 1 + cos(2πx_1)/2,
    /// ∂g/∂z_1 = (1/2) g_x = -(π/2) sin(2πx_1) and ∂g/∂z̄_1 takes the same value.
    /// dω has (2,1) part ∂g dz_1^(i dz_2^dz̄_2) and (1,2) part ∂̄g dz̄_1^(i dz_1^dz̄_1) + ...
    #[test]
    fn d_of_conformal_flat_form_matches_hand_computation() {
        let g = GridSpec::new(2, &[32, 1, 16, 1]).unwrap();
        let sp = Spectral::new(&g);
        let id = HermitianForm11Field::constant(&g, HermitianMatrix::<f64>::identity(2).unwrap()).unwrap();
        let conf = ScalarField::from_fn(&g, |c| 1.0 + 0.5 * (2.0 * PI * c[0]).cos());
        let w = FormField::from_hermitian(&id.conformal(&conf).unwrap());
        let d = w.exterior_d(&sp).unwrap();
        assert_eq!(d.bidegrees(), vec![(1, 2), (2, 1)]);
        for i in (0..g.len()).step_by(7) {
            let x = g.coords(i)[0];
            let gz = -0.5 * PI * (2.0 * PI * x).sin();
            // (2,1): d_z1 g dz_1 ^ i dz_2 ^ dz̄_2 -> coefficient of dz_{12} ^ dz̄_2 is i*gz.
            let p21 = d.point(i, 2, 1).unwrap();
            assert!((p21.get(0b11, 0b10) - Complex::new(0.0, gz)).norm() < 1e-12);
            assert!(p21.get(0b11, 0b01).norm() < 1e-12);
            // (1,2): d_z̄1 g dz̄_1 ^ i dz_2 ^ dz̄_2 = -i gz dz_2 ^ dz̄_1 ^ dz̄_2.
            let p12 = d.point(i, 1, 2).unwrap();
            assert!((p12.get(0b10, 0b11) - Complex::new(0.0, -gz)).norm() < 1e-12);
            assert!(p12.get(0b01, 0b11).norm() < 1e-12);
        }
        assert!(d.sup_norm() > 0.1);
    }

    #[test]
    fn stokes_for_top_degree_exact_forms() {
        let g = GridSpec::cube(1, 32).unwrap();
        let sp = Spectral::new(&g);
        let mut f = FormField::zeros(&g, 1, 0).unwrap();
        for (i, v) in f.parts.get_mut(&(1, 0)).unwrap()[0].iter_mut().enumerate() {
            let c = g.coords(i);
            *v = Complex::new(wave(&c, 0.1, 1.0), 0.3);
        }
        let (density, _) = f.exterior_d(&sp).unwrap().top_density().unwrap();
        let mean = density.values().iter().sum::<f64>() / g.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn top_degree_derivative_is_rejected() {
        let g = GridSpec::cube(1, 16).unwrap();
        let sp = Spectral::<f64>::new(&g);
        let f = FormField::zeros(&g, 1, 1).unwrap();
        assert!(f.exterior_d(&sp).is_err());
    }

    #[test]
    fn closedness_of_potential_perturbation() {
        let g = GridSpec::cube(2, 16).unwrap();
        let sp = Spectral::<f64>::new(&g);
        let rho = ScalarField::from_fn(&g, |c| 0.01 * wave(c, 0.2, 1.0));
        let id = HermitianForm11Field::constant(&g, HermitianMatrix::identity(2).unwrap()).unwrap();
        let w = id.add(&ddc(&rho).unwrap()).unwrap();
        let c = closedness(&sp, &w).unwrap();
        assert!(c.ddc_norm < 1e-10 && c.d_norm < 1e-11, "{c:?}");
        let conf = ScalarField::from_fn(&g, |c| 1.0 + 0.5 * (2.0 * PI * c[0]).cos());
        let nc = closedness(&sp, &id.conformal(&conf).unwrap()).unwrap();
        assert!(nc.ddc_norm > 1.0);
    }
}
