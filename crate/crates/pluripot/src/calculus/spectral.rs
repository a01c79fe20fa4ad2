//! Trigonometric (discrete Fourier) differentiation on periodic grids.
//!
//! Derivatives are applied as Fourier multipliers. The first-derivative symbol along an
//! axis of resolution `N` is `2 pi i k` for `|k| < N/2` and zero at the Nyquist index, and
//! every higher operator is a product of first-derivative symbols, so all compositions
//! commute exactly and identities such as `d^2 = 0` hold to round-off.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::field::{HermitianForm11Field, ScalarField};
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lines gathered per batch when transforming a strided axis.
const TILE: usize = 32;

/// FFT plans and wavenumber tables for one grid.
pub struct Spectral<T: Real> {
    grid: GridSpec,
    fwd: Vec<Option<Arc<dyn Fft<T>>>>,
    inv: Vec<Option<Arc<dyn Fft<T>>>>,
    wavenumber: Vec<Vec<T>>,
    wavenumber_sq: Vec<Vec<T>>,
    strides: Vec<usize>,
}

/// Signed frequency of index `i` on an axis of resolution `r`.
#[inline]
pub fn signed_freq(i: usize, r: usize) -> i64 {
    if i <= r / 2 {
        i as i64
    } else {
        i as i64 - r as i64
    }
}

impl<T: Real> Spectral<T> {
    /// Plans transforms for `grid`.
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::<T>::new();
        let mut fwd = Vec::new();
        let mut inv = Vec::new();
        let mut wavenumber = Vec::new();
        let mut wavenumber_sq = Vec::new();
        let two_pi = T::lit(2.0 * std::f64::consts::PI);
        for &r in grid.res() {
            if r > 1 {
                fwd.push(Some(planner.plan_fft_forward(r)));
                inv.push(Some(planner.plan_fft_inverse(r)));
            } else {
                fwd.push(None);
                inv.push(None);
            }
            wavenumber.push(
                (0..r)
                    .map(|i| {
                        if r > 1 && i == r / 2 {
                            T::zero()
                        } else {
                            two_pi * T::lit(signed_freq(i, r) as f64)
                        }
                    })
                    .collect(),
            );
            wavenumber_sq.push(
                (0..r)
                    .map(|i| {
                        let k = two_pi * T::lit(signed_freq(i, r).unsigned_abs() as f64);
                        k * k
                    })
                    .collect(),
            );
        }
        Self { grid: grid.clone(), fwd, inv, wavenumber, wavenumber_sq, strides: grid.strides() }
    }

    /// Grid the plans were made for.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Real wavenumber `2 pi k` (zero at Nyquist) of index `i` on `axis`.
    #[inline]
    pub fn wavenumber(&self, axis: usize, i: usize) -> T {
        self.wavenumber[axis][i]
    }

    /// Symbol of `d/dz_j` at a multi-index: `(i k_x + k_y) / 2`.
    #[inline]
    pub fn dz(&self, j: usize, idx: &[usize; 6]) -> Complex<T> {
        let kx = self.wavenumber[2 * j][idx[2 * j]];
        let ky = self.wavenumber[2 * j + 1][idx[2 * j + 1]];
        Complex::new(ky, kx).scale(T::lit(0.5))
    }

    /// Symbol of `d/dz̄_j` at a multi-index: `(i k_x - k_y) / 2`.
    #[inline]
    pub fn dzbar(&self, j: usize, idx: &[usize; 6]) -> Complex<T> {
        let kx = self.wavenumber[2 * j][idx[2 * j]];
        let ky = self.wavenumber[2 * j + 1][idx[2 * j + 1]];
        Complex::new(-ky, kx).scale(T::lit(0.5))
    }

    /// Symbol of `d^2/dz_j dz̄_j = ¼(d_x^2 + d_y^2)`, `-(k_x^2 + k_y^2) / 4`.
    ///
    /// Pure second derivatives keep the Nyquist mode, which first derivatives drop.
    #[inline]
    pub fn dz_dzbar(&self, j: usize, idx: &[usize; 6]) -> T {
        let kx = self.wavenumber_sq[2 * j][idx[2 * j]];
        let ky = self.wavenumber_sq[2 * j + 1][idx[2 * j + 1]];
        -(kx + ky) * T::lit(0.25)
    }

    /// Symbol of `d/dx_a` (real axis `a`) at a multi-index.
    #[inline]
    pub fn d_axis(&self, axis: usize, idx: &[usize; 6]) -> Complex<T> {
        Complex::new(T::zero(), self.wavenumber[axis][idx[axis]])
    }

    fn transform_axis(
        &self,
        buf: &mut [Complex<T>],
        axis: usize,
        plan: &Arc<dyn Fft<T>>,
        keep: Option<&[bool]>,
        scratch: &mut Vec<Complex<T>>,
        tile: &mut Vec<Complex<T>>,
    ) {
        let len = self.grid.res()[axis];
        let stride = self.strides[axis];
        let need = plan.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex::new(T::zero(), T::zero()));
        }
        if stride == 1 {
            plan.process_with_scratch(buf, &mut scratch[..need]);
            return;
        }
        let block = len * stride;
        let inner: Vec<usize> = match keep {
            Some(k) => (0..stride).filter(|&i| k[i]).collect(),
            None => (0..stride).collect(),
        };
        if inner.is_empty() {
            return;
        }
        tile.resize(TILE * len, Complex::new(T::zero(), T::zero()));
        for base in (0..buf.len()).step_by(block) {
            for chunk in inner.chunks(TILE) {
                for (b, &i) in chunk.iter().enumerate() {
                    let line = &mut tile[b * len..(b + 1) * len];
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = buf[base + t * stride + i];
                    }
                }
                plan.process_with_scratch(&mut tile[..chunk.len() * len], &mut scratch[..need]);
                for (b, &i) in chunk.iter().enumerate() {
                    let line = &tile[b * len..(b + 1) * len];
                    for (t, v) in line.iter().enumerate() {
                        buf[base + t * stride + i] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.grid.len());
        let (mut scratch, mut tile) = (Vec::new(), Vec::new());
        for axis in (0..self.grid.axes()).rev() {
            if let Some(p) = &self.fwd[axis] {
                self.transform_axis(buf, axis, p, None, &mut scratch, &mut tile);
            }
        }
    }

    /// Normalized inverse transform in place.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.inverse_banded(buf, None);
    }

    /// Normalized inverse transform of a spectrum supported in the frequency box
    /// `|k_a| <= band[a]`; lines known to be zero are skipped.
    pub fn inverse_banded(&self, buf: &mut [Complex<T>], band: Option<&[usize]>) {
        assert_eq!(buf.len(), self.grid.len());
        let (mut scratch, mut tile) = (Vec::new(), Vec::new());
        let axes = self.grid.axes();
        for axis in 0..axes {
            let Some(p) = &self.inv[axis] else { continue };
            let keep = band.map(|b| self.inner_band_mask(axis, b));
            self.transform_axis(buf, axis, p, keep.as_deref(), &mut scratch, &mut tile);
        }
        let inv_n = T::one() / T::of_usize(self.grid.len());
        for v in buf.iter_mut() {
            *v = v.scale(inv_n);
        }
    }

    fn inner_band_mask(&self, axis: usize, band: &[usize]) -> Vec<bool> {
        let stride = self.strides[axis];
        let res = self.grid.res();
        (0..stride)
            .map(|mut i| {
                for b in (axis + 1..self.grid.axes()).rev() {
                    let r = res[b];
                    let k = signed_freq(i % r, r).unsigned_abs() as usize;
                    if k > band[b] {
                        return false;
                    }
                    i /= r;
                }
                true
            })
            .collect()
    }

    /// Spectrum of a real field.
    pub fn forward_real(&self, u: &ScalarField<T>) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> =
            u.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward(&mut buf);
        buf
    }

    /// Calls `f(flat, multi_index)` for every grid point in order.
    pub fn for_each_index(&self, mut f: impl FnMut(usize, &[usize; 6])) {
        let res = self.grid.res();
        let axes = self.grid.axes();
        let mut idx = [0usize; 6];
        for flat in 0..self.grid.len() {
            f(flat, &idx);
            for a in (0..axes).rev() {
                idx[a] += 1;
                if idx[a] < res[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// `spec * symbol` pointwise.
    pub fn multiply(
        &self,
        spec: &[Complex<T>],
        symbol: impl Fn(&[usize; 6]) -> Complex<T>,
    ) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); spec.len()];
        self.for_each_index(|flat, idx| out[flat] = spec[flat] * symbol(idx));
        out
    }

    /// Complex Hessian `H_jk = d^2 u / dz_j dz̄_k` from the spectrum of a real field.
    pub fn hessian_from_spectrum(&self, spec: &[Complex<T>], band: Option<&[usize]>) -> HermitianForm11Field<T> {
        let n = self.grid.dim();
        let len = self.grid.len();
        let mut diag = vec![Vec::new(); n];
        let i = Complex::new(T::zero(), T::one());
        let mut j = 0;
        while j < n {
            let k = (j + 1 < n).then_some(j + 1);
            // Diagonal symbols are real, so two diagonals share one inverse transform.
            let mut buf = self.multiply(spec, |idx| {
                let a = Complex::new(self.dz_dzbar(j, idx), T::zero());
                match k {
                    Some(k) => a + i * self.dz_dzbar(k, idx),
                    None => a,
                }
            });
            self.inverse_banded(&mut buf, band);
            diag[j] = buf.iter().map(|z| z.re).collect();
            if let Some(k) = k {
                diag[k] = buf.iter().map(|z| z.im).collect();
            }
            j += 2;
        }
        let mut upper = Vec::new();
        for j in 0..n {
            for k in j + 1..n {
                let mut buf = self.multiply(spec, |idx| self.dz(j, idx) * self.dzbar(k, idx));
                self.inverse_banded(&mut buf, band);
                upper.push(buf);
            }
        }
        debug_assert!(diag.iter().all(|d| d.len() == len));
        HermitianForm11Field::from_components(&self.grid, diag, upper)
            .expect("hessian components are consistent")
    }
}

/// Spectrum of a real band-limited field, stored on the frequency box
/// `|k_a| <= band[a]` only.
#[derive(Clone, Debug, PartialEq)]
pub struct BandSpectrum<T> {
    grid: GridSpec,
    band: Vec<usize>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> BandSpectrum<T> {
    /// Zero spectrum on the given band; collapsed axes must have band 0 and active axes
    /// `band < res / 2`.
    pub fn zeros(grid: &GridSpec, band: &[usize]) -> Result<Self> {
        if band.len() != grid.axes() {
            return Err(Error::Dimension("band length".into()));
        }
        for (a, (&b, &r)) in band.iter().zip(grid.res()).enumerate() {
            if (r == 1 && b != 0) || (r > 1 && 2 * b >= r) {
                return Err(Error::Argument(format!("band {b} on axis {a} with resolution {r}")));
            }
        }
        let size: usize = band.iter().map(|&b| 2 * b + 1).product();
        Ok(Self {
            grid: grid.clone(),
            band: band.to_vec(),
            coeffs: vec![Complex::new(T::zero(), T::zero()); size],
        })
    }

    /// Grid.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Per-axis band limits.
    pub fn band(&self) -> &[usize] {
        &self.band
    }

    /// Largest band limit over the axes.
    pub fn max_freq(&self) -> usize {
        self.band.iter().copied().max().unwrap_or(0)
    }

    fn slot(&self, k: &[i64]) -> Option<usize> {
        let mut s = 0;
        for (a, &b) in self.band.iter().enumerate() {
            let b = b as i64;
            if k[a].abs() > b {
                return None;
            }
            s = s * (2 * b as usize + 1) + (k[a] + b) as usize;
        }
        Some(s)
    }

    /// Coefficient at signed frequency `k` (zero outside the band).
    pub fn get(&self, k: &[i64]) -> Complex<T> {
        self.slot(k).map_or(Complex::new(T::zero(), T::zero()), |s| self.coeffs[s])
    }

    /// Sets the coefficient at `k` and its conjugate partner at `-k`, keeping the field
    /// real.
    pub fn set_real_pair(&mut self, k: &[i64], value: Complex<T>) -> Result<()> {
        let neg: Vec<i64> = k.iter().map(|x| -x).collect();
        let s = self.slot(k).ok_or_else(|| Error::Argument("frequency outside band".into()))?;
        let t = self.slot(&neg).expect("band is symmetric");
        if s == t {
            self.coeffs[s] = Complex::new(value.re, T::zero());
        } else {
            self.coeffs[s] = value;
            self.coeffs[t] = value.conj();
        }
        Ok(())
    }

    /// All signed frequencies in the band, in storage order.
    pub fn frequencies(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for &b in &self.band {
            let b = b as i64;
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (-b..=b).map(move |k| {
                        let mut p = prefix.clone();
                        p.push(k);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// `c * self`.
    pub fn scale(&self, c: T) -> Self {
        let mut s = self.clone();
        for z in s.coeffs.iter_mut() {
            *z = z.scale(c);
        }
        s
    }

    /// Full-size spectrum in FFT index order.
    pub fn to_full(&self) -> Vec<Complex<T>> {
        let res = self.grid.res();
        let strides = self.grid.strides();
        let mut full = vec![Complex::new(T::zero(), T::zero()); self.grid.len()];
        for (s, k) in self.frequencies().into_iter().enumerate() {
            let mut flat = 0;
            for a in 0..k.len() {
                let r = res[a] as i64;
                flat += (k[a].rem_euclid(r)) as usize * strides[a];
            }
            full[flat] = self.coeffs[s];
        }
        full
    }

    /// Grid values of the field.
    pub fn values(&self, sp: &Spectral<T>) -> ScalarField<T> {
        let mut buf = self.to_full();
        sp.inverse_banded(&mut buf, Some(&self.band));
        ScalarField::new_unchecked(self.grid.clone(), buf.into_iter().map(|z| z.re).collect())
    }

    /// Complex Hessian of the field.
    pub fn hessian(&self, sp: &Spectral<T>) -> HermitianForm11Field<T> {
        sp.hessian_from_spectrum(&self.to_full(), Some(&self.band))
    }
}

/// Complex Hessian `dd^c u` of a field, computed spectrally.
pub fn ddc<T: Real>(u: &ScalarField<T>) -> Result<HermitianForm11Field<T>> {
    if u.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ddc input".into()));
    }
    let sp = Spectral::new(u.grid());
    Ok(ddc_with(&sp, u))
}

/// [`ddc`] with precomputed plans.
pub fn ddc_with<T: Real>(sp: &Spectral<T>, u: &ScalarField<T>) -> HermitianForm11Field<T> {
    let spec = sp.forward_real(u);
    sp.hessian_from_spectrum(&spec, None)
}

/// Largest frequency per axis carrying a coefficient above `rel_tol * max |c|`.
pub fn band_of<T: Real>(u: &ScalarField<T>, rel_tol: f64) -> Vec<usize> {
    let sp = Spectral::new(u.grid());
    let spec = sp.forward_real(u);
    let peak = spec.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let cut = T::lit(rel_tol) * peak;
    let res = u.grid().res().to_vec();
    let mut band = vec![0usize; res.len()];
    sp.for_each_index(|flat, idx| {
        if spec[flat].norm() > cut {
            for a in 0..res.len() {
                band[a] = band[a].max(signed_freq(idx[a], res[a]).unsigned_abs() as usize);
            }
        }
    });
    band
}

/// Checks that products of `factors` fields with frequencies up to `max_freq` are
/// representable without aliasing (`res >= 4 * factors * max_freq` on active axes).
pub fn check_product_resolution(grid: &GridSpec, factors: usize, max_freq: usize) -> Result<()> {
    let need = 4 * factors * max_freq;
    for (a, &r) in grid.res().iter().enumerate() {
        if r > 1 && r < need {
            return Err(Error::Argument(format!(
                "axis {a}: resolution {r} below {need} needed for {factors} factors at frequency {max_freq}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn forward_inverse_round_trip() {
        let g = GridSpec::new(2, &[16, 1, 32, 16]).unwrap();
        let sp = Spectral::<f64>::new(&g);
        let orig: Vec<Complex<f64>> =
            (0..g.len()).map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64).cos())).collect();
        let mut buf = orig.clone();
        sp.forward(&mut buf);
        sp.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let g = GridSpec::new(1, &[16, 16]).unwrap();
        let sp = Spectral::<f64>::new(&g);
        let u = ScalarField::from_fn(&g, |c| (2.0 * PI * (3.0 * c[0] - 2.0 * c[1])).cos());
        let spec = sp.forward_real(&u);
        let n = g.len() as f64;
        assert!((spec[3 * 16 + 14].re - n / 2.0).abs() < 1e-9);
        assert!((spec[13 * 16 + 2].re - n / 2.0).abs() < 1e-9);
    }

    #[test]
    fn hessian_of_cosine_in_one_variable() {
        // d^2/dz dz̄ = (d_xx + d_yy)/4, so cos(2 pi x) -> -pi^2 cos(2 pi x).
        let g = GridSpec::new(1, &[32, 16]).unwrap();
        let u = ScalarField::<f64>::from_fn(&g, |c| (2.0 * PI * c[0]).cos());
        let h = ddc(&u).unwrap();
        for i in 0..g.len() {
            let want = -PI * PI * (2.0 * PI * g.coords(i)[0]).cos();
            assert!((h.at(i).get(0, 0).re - want).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_has_zero_hessian() {
        let g = GridSpec::cube(2, 16).unwrap();
        let h = ddc(&ScalarField::<f64>::constant(&g, 3.5)).unwrap();
        assert!(h.sup_norm() < 1e-12);
    }

    /// Oracle: second-order central differences of the same field, which must agree to
    /// O(spacing^2); the analytic value must agree to round-off.
    #[test]
    fn mixed_hessian_matches_finite_differences_and_analytic() {
        let g = GridSpec::cube(2, 32).unwrap();
        let f = |c: &[f64; 6]| (2.0 * PI * c[0]).cos() * (2.0 * PI * c[3]).cos();
        let u = ScalarField::<f64>::from_fn(&g, f);
        let h = ddc(&u).unwrap();
        let hstep = 1.0 / 32.0;
        let mut worst_fd: f64 = 0.0;
        let mut worst_exact: f64 = 0.0;
        for i in (0..g.len()).step_by(97) {
            let c = g.coords(i);
            // H_12 = d_z1 d_z̄2 u = (1/4)(d_x1 - i d_y1)(d_x2 + i d_y2) u; only d_x1 d_y2 survives.
            let shifted = |dx: f64, dy: f64| {
                let mut p = c;
                p[0] += dx;
                p[3] += dy;
                f(&p)
            };
            let mixed_fd = (shifted(hstep, hstep) - shifted(hstep, -hstep) - shifted(-hstep, hstep)
                + shifted(-hstep, -hstep))
                / (4.0 * hstep * hstep);
            let exact = 4.0 * PI * PI * (2.0 * PI * c[0]).sin() * (2.0 * PI * c[3]).sin();
            let h12 = h.at(i).get(0, 1);
            // (1/4) * (d_x1) * (i d_y2) -> imaginary part (1/4) u_{x1 y2}
            worst_fd = worst_fd.max((h12.im - 0.25 * mixed_fd).abs());
            worst_exact = worst_exact.max((h12.im - 0.25 * exact).abs());
            assert!(h12.re.abs() < 1e-10);
        }
        assert!(worst_exact < 1e-10, "{worst_exact}");
        assert!(worst_fd < 4.0 * PI.powi(4) * hstep * hstep, "{worst_fd}");
    }

    #[test]
    fn band_spectrum_matches_full_transform() {
        let g = GridSpec::cube(2, 16).unwrap();
        let sp = Spectral::<f64>::new(&g);
        let mut b = BandSpectrum::zeros(&g, &[2, 1, 2, 1]).unwrap();
        b.set_real_pair(&[1, 0, -2, 1], Complex::new(0.3, -0.2)).unwrap();
        b.set_real_pair(&[0, 1, 0, 0], Complex::new(0.5, 0.1)).unwrap();
        let u = b.values(&sp);
        let full = ddc(&u).unwrap();
        let banded = b.hessian(&sp);
        assert!(full.sup_distance(&banded).unwrap() < 1e-11);
        assert_eq!(band_of(&u, 1e-10), vec![1, 1, 2, 1]);
        assert!(b.set_real_pair(&[3, 0, 0, 0], Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn product_resolution_validator() {
        let g = GridSpec::cube(2, 64).unwrap();
        assert!(check_product_resolution(&g, 2, 8).is_ok());
        assert!(check_product_resolution(&g, 3, 8).is_err());
    }
}
