//! Periodic grids on the unit torus `C^n / (Z^n + i Z^n)`.
//!
//! Real axes are ordered `x_1, y_1, ..., x_n, y_n`; fields are stored row-major with
//! the last axis contiguous. An axis of resolution 1 is collapsed: every field on the
//! grid is constant along it and derivatives in that direction vanish identically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default memory cap for the working set estimate, in bytes.
pub const DEFAULT_MEMORY_CAP: u64 = 4 << 30;

/// Environment variable overriding the memory cap (in MiB).
pub const MEMORY_CAP_ENV: &str = "PLURIPOT_MEMORY_CAP_MIB";

/// Discretization of the unit torus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    res: Vec<usize>,
}

impl GridSpec {
    /// Grid with `res` points on every one of the `2n` real axes.
    pub fn cube(n: usize, res: usize) -> Result<Self> {
        Self::new(n, &vec![res; 2 * n])
    }

    /// Grid with per-axis resolutions in axis order `x_1, y_1, ..., x_n, y_n`.
    ///
    /// Each resolution is a power of two `>= 16`, or 1 for a collapsed axis.
    pub fn new(n: usize, res: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Grid(format!("complex dimension {n} outside 1..=3")));
        }
        if res.len() != 2 * n {
            return Err(Error::Grid(format!("{} resolutions for {} real axes", res.len(), 2 * n)));
        }
        for (a, &r) in res.iter().enumerate() {
            if r != 1 && !(r >= 16 && r.is_power_of_two()) {
                return Err(Error::Grid(format!(
                    "axis {a}: resolution {r} is neither 1 nor a power of two >= 16"
                )));
            }
        }
        if res.iter().all(|&r| r == 1) {
            return Err(Error::Grid("all axes collapsed".into()));
        }
        let g = Self { n, res: res.to_vec() };
        g.check_memory(memory_cap())?;
        Ok(g)
    }

    /// Complex dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of real axes, `2n`.
    #[inline]
    pub fn axes(&self) -> usize {
        2 * self.n
    }

    /// Per-axis resolutions.
    #[inline]
    pub fn res(&self) -> &[usize] {
        &self.res
    }

    /// Common resolution if all non-collapsed axes agree and none is collapsed.
    pub fn uniform_res(&self) -> Option<usize> {
        let r = self.res[0];
        self.res.iter().all(|&x| x == r).then_some(r)
    }

    /// Largest resolution over the axes.
    pub fn max_res(&self) -> usize {
        self.res.iter().copied().max().unwrap_or(1)
    }

    /// Smallest resolution over the non-collapsed axes.
    pub fn min_active_res(&self) -> usize {
        self.res.iter().copied().filter(|&r| r > 1).min().unwrap_or(1)
    }

    /// Indices of non-collapsed axes.
    pub fn active_axes(&self) -> Vec<usize> {
        (0..self.axes()).filter(|&a| self.res[a] > 1).collect()
    }

    /// Grid spacing along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.res[axis] as f64
    }

    /// Total number of grid points.
    #[inline]
    pub fn len(&self) -> usize {
        self.res.iter().product()
    }

    /// Grids always contain at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.axes()];
        for a in (0..self.axes() - 1).rev() {
            s[a] = s[a + 1] * self.res[a + 1];
        }
        s
    }

    /// Multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> [usize; 6] {
        let mut idx = [0; 6];
        for a in (0..self.axes()).rev() {
            idx[a] = flat % self.res[a];
            flat /= self.res[a];
        }
        idx
    }

    /// Coordinates in `[0,1)` of a flat index, axis order `x_1, y_1, ...`.
    pub fn coords(&self, flat: usize) -> [f64; 6] {
        let idx = self.multi_index(flat);
        let mut c = [0.0; 6];
        for a in 0..self.axes() {
            c[a] = idx[a] as f64 / self.res[a] as f64;
        }
        c
    }

    /// Rough working-set estimate in bytes for operations on this grid.
    pub fn memory_estimate(&self) -> u64 {
        let per_point = 8 * (2 * self.n * self.n + 8) as u64;
        self.len() as u64 * per_point
    }

    /// Fails if the working-set estimate exceeds `cap` bytes.
    pub fn check_memory(&self, cap: u64) -> Result<()> {
        let est = self.memory_estimate();
        if est > cap {
            return Err(Error::Grid(format!(
                "estimated working set {} MiB exceeds cap {} MiB",
                est >> 20,
                cap >> 20
            )));
        }
        Ok(())
    }

    /// Copy of this grid with the same shape, used to compare grids.
    pub fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Grid(format!("grid mismatch: {:?} vs {:?}", self.res, other.res)))
        }
    }
}

/// Memory cap from the environment, falling back to [`DEFAULT_MEMORY_CAP`].
pub fn memory_cap() -> u64 {
    std::env::var(MEMORY_CAP_ENV)
        .ok()
        .and_then(|v| v.parse::<u64>().ok())
        .map_or(DEFAULT_MEMORY_CAP, |mib| mib << 20)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_resolutions() {
        assert!(GridSpec::cube(2, 16).is_ok());
        assert!(GridSpec::cube(2, 8).is_err());
        assert!(GridSpec::cube(2, 48).is_err());
        assert!(GridSpec::cube(4, 16).is_err());
        assert!(GridSpec::new(2, &[64, 1, 64, 1]).is_ok());
        assert!(GridSpec::new(2, &[64, 1, 64]).is_err());
        assert!(GridSpec::new(1, &[1, 1]).is_err());
    }

    #[test]
    fn layout_is_row_major_last_axis_fastest() {
        let g = GridSpec::new(2, &[16, 1, 32, 1]).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.strides(), vec![32, 32, 1, 1]);
        let idx = g.multi_index(33);
        assert_eq!(&idx[..4], &[1, 0, 1, 0]);
        let c = g.coords(33);
        assert_eq!(c[0], 1.0 / 16.0);
        assert_eq!(c[2], 1.0 / 32.0);
        assert_eq!(g.active_axes(), vec![0, 2]);
        assert_eq!(g.uniform_res(), None);
    }

    #[test]
    fn memory_cap_is_enforced() {
        let g = GridSpec::cube(2, 64).unwrap();
        assert!(g.check_memory(1 << 20).is_err());
        assert!(GridSpec::cube(3, 64).is_err());
    }
}
