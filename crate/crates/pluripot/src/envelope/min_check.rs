//! Numerical check of the Monge-Ampère bounds for envelopes of minima and for maxima of
//! two ω-psh functions.

use serde::{Deserialize, Serialize};

use super::{beta_schedule, envelope_beta, EnvelopeResult, NewtonOptions};
use crate::calculus::density::{integrate, ma_density_with};
use crate::calculus::field::{HermitianForm11Field, ScalarField};
use crate::calculus::grid::GridSpec;
use crate::calculus::spectral::Spectral;
use crate::error::Result;
use crate::scalar::Real;

/// Settings for [`envelope_min_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinCheckOptions {
    pub schedule: Vec<f64>,
    pub newton: NewtonOptions,
    /// Crease threshold relative to the oscillation of `u - v`.
    pub crease_rel: f64,
    /// Dilation of the crease, in grid cells.
    pub dilation: usize,
    /// Sub-boxes per active axis.
    pub boxes_per_axis: usize,
    /// Tolerance relative to `∫ω^n`.
    pub tol: f64,
}

impl Default for MinCheckOptions {
    fn default() -> Self {
        Self {
            schedule: beta_schedule(4096.0),
            newton: NewtonOptions::default(),
            crease_rel: 1e-3,
            dilation: 3,
            boxes_per_axis: 4,
            tol: 1e-4,
        }
    }
}

/// Integrals over one sub-box with the crease removed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxIntegrals {
    /// `∫ (ω + dd^c w)^n` for `w = P(min(u, v))`.
    pub mass_w: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    /// `∫ max(f, g)`.
    pub upper: f64,
    /// `∫ min(f, g)`.
    pub lower: f64,
    /// `∫ (ω + dd^c max(u, v))^n`.
    pub mass_max: f64,
}

/// Outcome of [`envelope_min_check`]. Margins are minima over boxes, positive when the
/// inequality holds.
#[derive(Clone, Debug)]
pub struct MinCheckReport<T> {
    pub envelope: EnvelopeResult<T>,
    pub boxes: Vec<BoxIntegrals>,
    /// `min(mass_u + mass_v - mass_w)`.
    pub subadditivity_margin: f64,
    /// `min(upper - mass_w)`.
    pub upper_margin: f64,
    /// `min(mass_max - lower)`.
    pub lower_margin: f64,
    /// Fraction of grid points removed as crease.
    pub excluded_fraction: f64,
    /// `∫ω^n`.
    pub reference_mass: f64,
    pub tol: f64,
}

impl<T> MinCheckReport<T> {
    /// Whether every margin is at least `-tol * ∫ω^n`.
    pub fn passed(&self) -> bool {
        let floor = -self.tol * self.reference_mass;
        self.subadditivity_margin >= floor && self.upper_margin >= floor && self.lower_margin >= floor
    }
}

/// Grid points within `cells` steps (per active axis) of a marked point.
pub fn dilate(grid: &GridSpec, mask: &[bool], cells: usize) -> Vec<bool> {
    let strides = grid.strides();
    let mut cur = mask.to_vec();
    for (a, &r) in grid.res().iter().enumerate() {
        if r == 1 {
            continue;
        }
        let mut next = cur.clone();
        for i in 0..grid.len() {
            if !cur[i] {
                continue;
            }
            let pos = grid.multi_index(i)[a];
            let base = i - pos * strides[a];
            for s in 1..=cells.min(r / 2) {
                next[base + ((pos + s) % r) * strides[a]] = true;
                next[base + ((pos + r - s) % r) * strides[a]] = true;
            }
        }
        cur = next;
    }
    cur
}

fn box_index(grid: &GridSpec, i: usize, per_axis: usize) -> usize {
    let idx = grid.multi_index(i);
    let mut b = 0;
    for (a, &r) in grid.res().iter().enumerate() {
        if r > 1 {
            b = b * per_axis + idx[a] * per_axis / r;
        }
    }
    b
}

/// Computes `w = P(min(u, v))` by [`envelope_beta`] and checks, on each sub-box with a
/// dilated neighbourhood of the crease `{|u - v| <= crease_rel osc(u - v)}` removed:
/// `∫ma(w) <= ∫ma(u) + ∫ma(v)`, `∫ma(w) <= ∫max(f, g)` and
/// `∫ma(max(u, v)) >= ∫min(f, g)`, where `f, g` are the densities of `u, v`.
///
/// Off the crease `max(u, v)` coincides locally with `u` or `v`, so its density is taken
/// from the active branch.
pub fn envelope_min_check<T: Real>(
    omega: &HermitianForm11Field<T>,
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    opts: &MinCheckOptions,
) -> Result<MinCheckReport<T>> {
    omega.grid().same_as(u.grid())?;
    u.grid().same_as(v.grid())?;
    let grid = u.grid();
    let sp = Spectral::new(grid);
    let f = ma_density_with(&sp, omega, u)?;
    let g = ma_density_with(&sp, omega, v)?;
    let h = u.zip_map(v, |a, b| a.min(b))?;
    let envelope = envelope_beta(omega, &h, &opts.schedule, &opts.newton)?;
    let fw = ma_density_with(&sp, omega, &envelope.phi)?;
    let diff = u.sub(v)?;
    let osc = (diff.sup() - diff.inf()).to_f64_lossy();
    let crease: Vec<bool> =
        diff.values().iter().map(|d| d.to_f64_lossy().abs() <= opts.crease_rel * osc).collect();
    let excluded = dilate(grid, &crease, opts.dilation);
    let active = grid.active_axes().len() as u32;
    let nboxes = opts.boxes_per_axis.pow(active);
    let zero = BoxIntegrals { mass_w: 0.0, mass_u: 0.0, mass_v: 0.0, upper: 0.0, lower: 0.0, mass_max: 0.0 };
    let mut boxes = vec![zero; nboxes];
    let len = grid.len() as f64;
    for i in 0..grid.len() {
        if excluded[i] {
            continue;
        }
        let b = &mut boxes[box_index(grid, i, opts.boxes_per_axis)];
        let (fi, gi, wi) = (f.values()[i].to_f64_lossy(), g.values()[i].to_f64_lossy(), fw.values()[i].to_f64_lossy());
        b.mass_w += wi / len;
        b.mass_u += fi / len;
        b.mass_v += gi / len;
        b.upper += fi.max(gi) / len;
        b.lower += fi.min(gi) / len;
        b.mass_max += if u.values()[i] >= v.values()[i] { fi } else { gi } / len;
    }
    let fold = |m: fn(&BoxIntegrals) -> f64| boxes.iter().map(m).fold(f64::INFINITY, f64::min);
    let subadditivity_margin = fold(|b| b.mass_u + b.mass_v - b.mass_w);
    let upper_margin = fold(|b| b.upper - b.mass_w);
    let lower_margin = fold(|b| b.mass_max - b.lower);
    let reference_mass = integrate(&ma_density_with(&sp, omega, &ScalarField::constant(grid, T::zero()))?).to_f64_lossy();
    let excluded_fraction = excluded.iter().filter(|&&e| e).count() as f64 / len;
    Ok(MinCheckReport {
        envelope,
        boxes,
        subadditivity_margin,
        upper_margin,
        lower_margin,
        excluded_fraction,
        reference_mass,
        tol: opts.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::HermitianMatrix;
    use std::f64::consts::PI;

    #[test]
    fn dilation_grows_by_cells_per_axis() {
        let g = GridSpec::new(2, &[16, 1, 16, 1]).unwrap();
        let mut m = vec![false; g.len()];
        m[0] = true;
        let d = dilate(&g, &m, 3);
        assert_eq!(d.iter().filter(|&&x| x).count(), 49);
        assert!(d[3] && d[13] && d[3 * 16] && !d[4]);
    }

    #[test]
    fn box_indices_cover_grid_evenly() {
        let g = GridSpec::new(2, &[16, 1, 16, 1]).unwrap();
        let mut counts = [0; 16];
        for i in 0..g.len() {
            counts[box_index(&g, i, 4)] += 1;
        }
        assert!(counts.iter().all(|&c| c == 16));
    }

    #[test]
    fn equal_and_ordered_inputs_one_dimension() {
        let g = GridSpec::new(1, &[64, 1]).unwrap();
        let omega = HermitianForm11Field::constant(&g, HermitianMatrix::identity(1).unwrap()).unwrap();
        let u = ScalarField::<f64>::from_fn(&g, |c| 0.02 * ((2.0 * PI * c[0]).cos() - 1.0));
        let opts = MinCheckOptions::default();
        let same = envelope_min_check(&omega, &u, &u, &opts).unwrap();
        assert_eq!(same.excluded_fraction, 1.0);
        assert!(same.passed());
        let v = u.shift(-1.0);
        let r = envelope_min_check(&omega, &u, &v, &opts).unwrap();
        assert_eq!(r.excluded_fraction, 0.0);
        assert!(r.envelope.phi.sup_distance(&v).unwrap() < 16.0 / 4096.0);
        assert!(r.passed(), "{:?}", (r.subadditivity_margin, r.upper_margin, r.lower_margin));
        // v = u - 1: w = v, so mass_w equals mass_v up to the scheme error
        for b in &r.boxes {
            assert!((b.mass_w - b.mass_v).abs() < 1e-3, "{b:?}");
        }
    }
}
