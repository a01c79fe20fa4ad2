//! Monge-Ampère densities, mixed densities and integration.

use super::field::{HermitianForm11Field, ScalarField};
use super::forms::{closedness, Closedness};
use super::spectral::{ddc_with, Spectral};
use crate::algebra::mixed::wedge_top_density_unchecked;
use crate::algebra::HermitianMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative cone tolerance: `M + H` passes if its smallest eigenvalue is at least
/// `-PSH_TOL * (1 + |M + H|)`.
pub const PSH_TOL: f64 = 1e-10;

/// Compensated mean of grid values (unit-mass Lebesgue measure).
pub fn integrate<T: Real>(density: &ScalarField<T>) -> T {
    mean(density.values())
}

/// Compensated mean of a slice.
pub fn mean<T: Real>(values: &[T]) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    (sum + comp) / T::of_usize(values.len().max(1))
}

/// Smallest eigenvalue of `a` compared against the relative cone tolerance.
#[inline]
pub fn cone_ok<T: Real>(a: &HermitianMatrix<T>, tol_rel: T) -> (bool, T) {
    let e = a.min_eigenvalue();
    (e >= -tol_rel * (T::one() + a.norm()), e)
}

/// `n! det(M_ω + H)` pointwise, failing on the first cone violation beyond `tol_rel`.
pub fn ma_density_from_hessian<T: Real>(
    omega: &HermitianForm11Field<T>,
    hessian: &HermitianForm11Field<T>,
    tol_rel: T,
) -> Result<ScalarField<T>> {
    omega.grid().same_as(hessian.grid())?;
    let n = omega.dim();
    let fact = T::of_usize(crate::algebra::mixed::factorial(n));
    let mut values = Vec::with_capacity(omega.grid().len());
    for i in 0..omega.grid().len() {
        let a = omega.at(i).axpy(T::one(), &hessian.at(i));
        let (ok, e) = cone_ok(&a, tol_rel);
        if !ok {
            return Err(Error::Cone { point: i, eigenvalue: e.to_f64_lossy() });
        }
        values.push(fact * a.det());
    }
    Ok(ScalarField::new_unchecked(omega.grid().clone(), values))
}

/// Monge-Ampère density `n! det(M_ω + H[u])` with the default cone tolerance.
pub fn ma_density<T: Real>(omega: &HermitianForm11Field<T>, u: &ScalarField<T>) -> Result<ScalarField<T>> {
    omega.grid().same_as(u.grid())?;
    let sp = Spectral::new(u.grid());
    ma_density_with(&sp, omega, u)
}

/// [`ma_density`] with precomputed plans.
pub fn ma_density_with<T: Real>(
    sp: &Spectral<T>,
    omega: &HermitianForm11Field<T>,
    u: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    if u.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("potential".into()));
    }
    ma_density_from_hessian(omega, &ddc_with(sp, u), T::lit(PSH_TOL))
}

/// One factor of a mixed Monge-Ampère product.
#[derive(Clone, Copy, Debug)]
pub enum Slot<'a, T> {
    /// A fixed (1,1)-form.
    Form(&'a HermitianForm11Field<T>),
    /// `ω + dd^c u`.
    Potential(&'a HermitianForm11Field<T>, &'a ScalarField<T>),
}

/// Top-degree density of the wedge of `n` slots.
pub fn mixed_ma_density<T: Real>(slots: &[Slot<'_, T>]) -> Result<ScalarField<T>> {
    let first = match slots.first() {
        Some(Slot::Form(f)) | Some(Slot::Potential(f, _)) => *f,
        None => return Err(Error::Dimension("no slots".into())),
    };
    let grid = first.grid().clone();
    if slots.len() != grid.dim() {
        return Err(Error::Dimension(format!("{} slots in dimension {}", slots.len(), grid.dim())));
    }
    let sp = Spectral::new(&grid);
    let mut fields = Vec::with_capacity(slots.len());
    for s in slots {
        match s {
            Slot::Form(f) => {
                grid.same_as(f.grid())?;
                fields.push((*f).clone());
            }
            Slot::Potential(f, u) => {
                grid.same_as(f.grid())?;
                grid.same_as(u.grid())?;
                fields.push(f.add(&ddc_with(&sp, u))?);
            }
        }
    }
    let refs: Vec<&HermitianForm11Field<T>> = fields.iter().collect();
    mixed_density_of_fields(&refs)
}

/// Pointwise wedge density of `n` form fields.
pub fn mixed_density_of_fields<T: Real>(fields: &[&HermitianForm11Field<T>]) -> Result<ScalarField<T>> {
    let grid = check_fields(fields)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut mats = [HermitianMatrix::zeros_unchecked(grid.dim()); 3];
    for i in 0..grid.len() {
        for (m, f) in mats.iter_mut().zip(fields) {
            *m = f.at(i);
        }
        let refs: Vec<&HermitianMatrix<T>> = mats[..fields.len()].iter().collect();
        values.push(wedge_top_density_unchecked(&refs));
    }
    Ok(ScalarField::new_unchecked(grid.clone(), values))
}

/// `∫ fields[0] ^ ... ^ fields[n-1]` without materializing the density.
pub fn mixed_mass<T: Real>(fields: &[&HermitianForm11Field<T>]) -> Result<T> {
    let grid = check_fields(fields)?;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut mats = [HermitianMatrix::zeros_unchecked(grid.dim()); 3];
    for i in 0..grid.len() {
        for (m, f) in mats.iter_mut().zip(fields) {
            *m = f.at(i);
        }
        let refs: Vec<&HermitianMatrix<T>> = mats[..fields.len()].iter().collect();
        let v = wedge_top_density_unchecked(&refs).to_f64_lossy();
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    Ok(T::lit((sum + comp) / grid.len() as f64))
}

fn check_fields<'a, T: Real>(fields: &[&'a HermitianForm11Field<T>]) -> Result<&'a super::grid::GridSpec> {
    let grid = fields.first().ok_or_else(|| Error::Dimension("no fields".into()))?.grid();
    if fields.len() != grid.dim() {
        return Err(Error::Dimension(format!("{} fields in dimension {}", fields.len(), grid.dim())));
    }
    for f in fields {
        grid.same_as(f.grid())?;
    }
    Ok(grid)
}

/// Outcome of a Stokes (mass invariance) check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesReport<T> {
    /// `|∫(ω + dd^c u)^n - ∫ω^n|`.
    pub defect: T,
    /// Defect divided by `∫ω^n`.
    pub relative: T,
    /// Norms of `dd^c ω`, `dω ^ d^c ω` and `dω`.
    pub closedness: Closedness<T>,
    /// Whether the closedness precondition held to `1e-8` relative.
    pub precondition_ok: bool,
}

/// Mass change `|∫(ω + dd^c u)^n - ∫ω^n|` together with the closedness diagnostics that
/// make it vanish.
pub fn stokes_defect<T: Real>(omega: &HermitianForm11Field<T>, u: &ScalarField<T>) -> Result<StokesReport<T>> {
    omega.grid().same_as(u.grid())?;
    let sp = Spectral::new(u.grid());
    let c = closedness(&sp, omega)?;
    let scale = T::one() + omega.sup_norm();
    let precondition_ok = c.ddc_norm <= T::lit(1e-8) * scale && c.d_wedge_dc_norm <= T::lit(1e-8) * scale * scale;
    let n = omega.dim();
    let base = mixed_mass(&vec![omega; n])?;
    let shifted = omega.add(&ddc_with(&sp, u))?;
    let moved = mixed_mass(&vec![&shifted; n])?;
    let defect = (moved - base).abs();
    Ok(StokesReport { defect, relative: defect / base.abs(), closedness: c, precondition_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::grid::GridSpec;
    use crate::calculus::spectral::ddc;
    use std::f64::consts::PI;

    fn identity(g: &GridSpec) -> HermitianForm11Field<f64> {
        HermitianForm11Field::constant(g, HermitianMatrix::identity(g.dim()).unwrap()).unwrap()
    }

    fn smooth(c: &[f64; 6]) -> f64 {
        0.01 * ((2.0 * PI * (c[0] + c[3])).sin() + (2.0 * PI * (c[1] - 2.0 * c[2])).cos())
    }

    #[test]
    fn integrate_examples() {
        let g = GridSpec::cube(2, 16).unwrap();
        assert_eq!(integrate(&ScalarField::constant(&g, 2.5)), 2.5);
        let c = ScalarField::<f64>::from_fn(&g, |c| (2.0 * PI * c[0]).cos());
        assert!(integrate(&c).abs() < 1e-14);
    }

    #[test]
    fn flat_density_is_two() {
        let g = GridSpec::cube(2, 16).unwrap();
        let d = ma_density(&identity(&g), &ScalarField::constant(&g, 0.0)).unwrap();
        assert!(d.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn one_dimensional_density_is_linear() {
        let g = GridSpec::cube(1, 32).unwrap();
        let m = 1.5;
        let omega = HermitianForm11Field::constant(&g, HermitianMatrix::scalar(1, m).unwrap()).unwrap();
        let u = ScalarField::from_fn(&g, |c| 0.05 * (2.0 * PI * c[0]).cos() * (2.0 * PI * c[1]).sin());
        let d = ma_density(&omega, &u).unwrap();
        for i in 0..g.len() {
            let c = g.coords(i);
            // (1/4) Laplacian of the product: -(1/4)(8 pi^2) * 0.05 * cos * sin
            let lap = -2.0 * PI * PI * 0.05 * (2.0 * PI * c[0]).cos() * (2.0 * PI * c[1]).sin();
            assert!((d.values()[i] - (m + lap)).abs() < 1e-11);
        }
    }

    #[test]
    fn flat_density_with_cosine_perturbation() {
        let g = GridSpec::new(2, &[32, 1, 16, 1]).unwrap();
        let t = 0.05;
        let u = ScalarField::from_fn(&g, |c| t * (2.0 * PI * c[0]).cos());
        let d = ma_density(&identity(&g), &u).unwrap();
        for i in 0..g.len() {
            let want = 2.0 * (1.0 - PI * PI * t * (2.0 * PI * g.coords(i)[0]).cos());
            assert!((d.values()[i] - want).abs() < 1e-11);
        }
    }

    #[test]
    fn cone_violation_reports_point() {
        let g = GridSpec::cube(1, 16).unwrap();
        let u = ScalarField::from_fn(&g, |c| (2.0 * PI * c[0]).cos());
        match ma_density(&identity(&g), &u) {
            Err(Error::Cone { eigenvalue, .. }) => assert!(eigenvalue < -1.0),
            other => panic!("expected cone error, got {other:?}"),
        }
    }

    #[test]
    fn mixed_density_slot_examples() {
        let g = GridSpec::cube(2, 16).unwrap();
        let id = identity(&g);
        let all_id = mixed_ma_density(&[Slot::Form(&id), Slot::Form(&id)]).unwrap();
        assert!(all_id.values().iter().all(|&v| v == 2.0));
        let zero = ScalarField::constant(&g, 0.0);
        let a = mixed_ma_density(&[Slot::Potential(&id, &zero), Slot::Form(&id)]).unwrap();
        let b = ma_density(&id, &zero).unwrap();
        assert_eq!(a, b);
        assert!(mixed_ma_density(&[Slot::Form(&id)]).is_err());
    }

    #[test]
    fn shift_invariance_is_exact() {
        let g = GridSpec::cube(2, 16).unwrap();
        let u = ScalarField::from_fn(&g, smooth);
        let a = ma_density(&identity(&g), &u).unwrap();
        let b = ma_density(&identity(&g), &u.shift(3.0)).unwrap();
        assert!(a.sup_distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn stokes_for_flat_and_perturbed_closed_forms() {
        let g = GridSpec::cube(2, 16).unwrap();
        let u = ScalarField::from_fn(&g, smooth);
        let r = stokes_defect(&identity(&g), &u).unwrap();
        assert!(r.precondition_ok && r.relative < 1e-12);
        let rho = ScalarField::from_fn(&g, |c| 0.01 * (2.0 * PI * (c[0] - c[2])).cos());
        let closed = identity(&g).add(&ddc(&rho).unwrap()).unwrap();
        let r = stokes_defect(&closed, &u).unwrap();
        assert!(r.precondition_ok && r.relative < 1e-10);
    }

    #[test]
    fn stokes_reports_nonclosed_defect() {
        let g = GridSpec::cube(2, 16).unwrap();
        let conf = ScalarField::from_fn(&g, |c| 1.0 + 0.4 * (2.0 * PI * c[0]).cos());
        let omega = identity(&g).conformal(&conf).unwrap();
        let u = ScalarField::from_fn(&g, |c| 0.02 * (2.0 * PI * c[0]).cos());
        let r = stokes_defect(&omega, &u).unwrap();
        assert!(!r.precondition_ok);
        assert!(r.relative > 1e-4);
    }
}
