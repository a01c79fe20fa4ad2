//! Scalar fields and Hermitian (1,1)-form fields sampled on a grid.

use num_complex::Complex;

use super::grid::GridSpec;
use crate::algebra::HermitianMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real function sampled at every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: GridSpec,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    /// Wraps values in grid order; fails on length mismatch or non-finite entries.
    pub fn new(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn new_unchecked(grid: GridSpec, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// Constant field.
    pub fn constant(grid: &GridSpec, c: T) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at the grid coordinates (axis order `x_1, y_1, ...`).
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64; 6]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| T::lit(f(&grid.coords(i)))).collect();
        Self { grid: grid.clone(), values }
    }

    /// Grid.
    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Values in grid order.
    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Mutable values in grid order.
    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Consumes the field, returning its values.
    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `c * self`.
    pub fn scale(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c`.
    pub fn shift(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    /// Maximum value.
    pub fn sup(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |a, &b| a.max(b))
    }

    /// Minimum value.
    pub fn inf(&self) -> T {
        self.values.iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    /// Index of the maximum value (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// `sup |self - other|`.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        self.grid.same_as(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    /// `sup |self|`.
    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
    }
}

/// Storage of a Hermitian form field.
#[derive(Clone, Debug, PartialEq)]
enum Storage<T> {
    Constant(HermitianMatrix<T>),
    /// `diag[j][point]` and `upper[c][point]` for pairs `(0,1), (0,2), (1,2)`.
    Sampled { diag: Vec<Vec<T>>, upper: Vec<Vec<Complex<T>>> },
}

/// A real (1,1)-form field: one Hermitian coefficient matrix per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianForm11Field<T> {
    grid: GridSpec,
    storage: Storage<T>,
}

impl<T: Real> HermitianForm11Field<T> {
    /// Form with the same matrix at every point.
    pub fn constant(grid: &GridSpec, m: HermitianMatrix<T>) -> Result<Self> {
        if m.dim() != grid.dim() {
            return Err(Error::Dimension(format!("matrix {} vs grid {}", m.dim(), grid.dim())));
        }
        Ok(Self { grid: grid.clone(), storage: Storage::Constant(m) })
    }

    /// Builds a field from component arrays: `n` real diagonals and the upper entries in
    /// the order `(0,1), (0,2), (1,2)`.
    pub fn from_components(
        grid: &GridSpec,
        diag: Vec<Vec<T>>,
        upper: Vec<Vec<Complex<T>>>,
    ) -> Result<Self> {
        let n = grid.dim();
        if diag.len() != n || upper.len() != n * (n - 1) / 2 {
            return Err(Error::Dimension("component count".into()));
        }
        let len = grid.len();
        if diag.iter().any(|d| d.len() != len) || upper.iter().any(|u| u.len() != len) {
            return Err(Error::Dimension("component length".into()));
        }
        let finite = diag.iter().all(|d| d.iter().all(|v| v.is_finite()))
            && upper.iter().all(|u| u.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        if !finite {
            return Err(Error::NonFinite("hermitian field".into()));
        }
        Ok(Self { grid: grid.clone(), storage: Storage::Sampled { diag, upper } })
    }

    /// Samples `f` at grid coordinates.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64; 6]) -> HermitianMatrix<T>) -> Result<Self> {
        let n = grid.dim();
        let len = grid.len();
        let mut diag = vec![Vec::with_capacity(len); n];
        let mut upper = vec![Vec::with_capacity(len); n * (n - 1) / 2];
        for i in 0..len {
            let m = f(&grid.coords(i));
            if m.dim() != n {
                return Err(Error::Dimension("matrix dimension in from_fn".into()));
            }
            let mut c = 0;
            for j in 0..n {
                diag[j].push(m.diag_entry(j));
                for k in j + 1..n {
                    upper[c].push(m.get(j, k));
                    c += 1;
                }
            }
        }
        Self::from_components(grid, diag, upper)
    }

    /// Grid.
    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Complex dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Whether the field is stored as a single constant matrix.
    pub fn constant_value(&self) -> Option<&HermitianMatrix<T>> {
        match &self.storage {
            Storage::Constant(m) => Some(m),
            Storage::Sampled { .. } => None,
        }
    }

    /// Coefficient matrix at a flat grid index.
    #[inline]
    pub fn at(&self, i: usize) -> HermitianMatrix<T> {
        match &self.storage {
            Storage::Constant(m) => *m,
            Storage::Sampled { diag, upper } => {
                let n = diag.len();
                let mut d = [T::zero(); 3];
                let mut u = [Complex::new(T::zero(), T::zero()); 3];
                for j in 0..n {
                    d[j] = diag[j][i];
                }
                for (c, arr) in upper.iter().enumerate() {
                    u[c] = arr[i];
                }
                HermitianMatrix::from_parts(n, &d[..n], &u[..upper.len()])
            }
        }
    }

    /// Real diagonal component `j` at every point (materialized).
    pub fn diag_component(&self, j: usize) -> Vec<T> {
        match &self.storage {
            Storage::Constant(m) => vec![m.diag_entry(j); self.grid.len()],
            Storage::Sampled { diag, .. } => diag[j].clone(),
        }
    }

    /// Entry `(j, k)` at every point (materialized).
    pub fn entry_component(&self, j: usize, k: usize) -> Vec<Complex<T>> {
        (0..self.grid.len()).map(|i| self.at(i).get(j, k)).collect()
    }

    /// Pointwise `self + a * other`.
    pub fn axpy(&self, a: T, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        if let (Storage::Constant(x), Storage::Constant(y)) = (&self.storage, &other.storage) {
            return Self::constant(&self.grid, x.axpy(a, y));
        }
        Ok(self.map_points(|i| self.at(i).axpy(a, &other.at(i))))
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(T::one(), other)
    }

    /// `c * self`.
    pub fn scale(&self, c: T) -> Self {
        match &self.storage {
            Storage::Constant(m) => Self { grid: self.grid.clone(), storage: Storage::Constant(m.scale(c)) },
            Storage::Sampled { .. } => self.map_points(|i| self.at(i).scale(c)),
        }
    }

    /// Pointwise `g(x) * self(x)` for a scalar field `g`.
    pub fn conformal(&self, g: &ScalarField<T>) -> Result<Self> {
        self.grid.same_as(g.grid())?;
        Ok(self.map_points(|i| self.at(i).scale(g.values()[i])))
    }

    /// Builds a sampled field from a per-point matrix function.
    pub fn map_points(&self, f: impl Fn(usize) -> HermitianMatrix<T>) -> Self {
        let n = self.dim();
        let len = self.grid.len();
        let mut diag = vec![Vec::with_capacity(len); n];
        let mut upper = vec![Vec::with_capacity(len); n * (n - 1) / 2];
        for i in 0..len {
            let m = f(i);
            let mut c = 0;
            for j in 0..n {
                diag[j].push(m.diag_entry(j));
                for k in j + 1..n {
                    upper[c].push(m.get(j, k));
                    c += 1;
                }
            }
        }
        Self { grid: self.grid.clone(), storage: Storage::Sampled { diag, upper } }
    }

    /// Smallest eigenvalue over the grid and the first point attaining it.
    pub fn min_eigenvalue(&self) -> (T, usize) {
        if let Storage::Constant(m) = &self.storage {
            return (m.min_eigenvalue(), 0);
        }
        let mut worst = (T::infinity(), 0);
        for i in 0..self.grid.len() {
            let e = self.at(i).min_eigenvalue();
            if e < worst.0 {
                worst = (e, i);
            }
        }
        worst
    }

    /// Largest absolute coefficient over the grid.
    pub fn sup_norm(&self) -> T {
        match &self.storage {
            Storage::Constant(m) => m.max_abs(),
            Storage::Sampled { diag, upper } => {
                let a = diag.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
                upper.iter().flatten().fold(a, |m, z| m.max(z.norm()))
            }
        }
    }

    /// `sup_x |self(x) - other(x)|` over coefficients.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        self.grid.same_as(&other.grid)?;
        let mut worst = T::zero();
        for i in 0..self.grid.len() {
            worst = worst.max(self.at(i).sub(&other.at(i))?.max_abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(2, &[16, 1, 16, 1]).unwrap()
    }

    #[test]
    fn scalar_field_validation() {
        let g = grid();
        assert!(ScalarField::<f64>::new(g.clone(), vec![0.0; 3]).is_err());
        let mut v = vec![0.0; g.len()];
        v[4] = f64::NAN;
        assert!(ScalarField::new(g.clone(), v).is_err());
        let f = ScalarField::<f64>::from_fn(&g, |c| c[0] + 2.0 * c[2]);
        assert_eq!(f.sup(), 15.0 / 16.0 * 3.0);
        assert_eq!(f.inf(), 0.0);
        assert_eq!(f.argmax(), g.len() - 1);
    }

    #[test]
    fn hermitian_field_round_trip() {
        let g = grid();
        let f = HermitianForm11Field::<f64>::from_fn(&g, |c| {
            HermitianMatrix::from_rows(
                2,
                &[
                    Complex::new(1.0 + c[0], 0.0),
                    Complex::new(0.1, c[2]),
                    Complex::new(0.1, -c[2]),
                    Complex::new(2.0, 0.0),
                ],
            )
            .unwrap()
        })
        .unwrap();
        let m = f.at(17);
        let c = g.coords(17);
        assert_eq!(m.get(0, 0).re, 1.0 + c[0]);
        assert_eq!(m.get(1, 0), Complex::new(0.1, -c[2]));
        let sum = f.add(&f).unwrap();
        assert_eq!(sum.at(17), m.scale(2.0));
        let id = HermitianForm11Field::<f64>::constant(&g, HermitianMatrix::identity(2).unwrap()).unwrap();
        assert!(id.constant_value().is_some());
        assert_eq!(id.min_eigenvalue().0, 1.0);
    }
}
