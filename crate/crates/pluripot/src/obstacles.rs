//! Builtin obstacles for envelope runs.

use std::f64::consts::PI;

use crate::calculus::field::ScalarField;
use crate::calculus::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Named obstacle functions on the unit torus.
///
/// One-variable obstacles depend on `x_1` only. [`Obstacle::TwoWell`] depends on `x_1`
/// and `x_2` (`x_1` and `y_1` when `n = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Obstacle {
    /// `min(0.05 cos 2πx, 0.05 cos 2π(x - 0.4) + 0.01)`: two admissible functions
    /// meeting along a crease.
    Crease,
    /// `0.3 cos 4πx`, too concave at its maxima to be admissible.
    Ripple,
    /// `0.1 sin 2πx + 0.05 cos 6πx`.
    Modes,
    /// Smoothed minimum of two cosine wells centred at `(1/4, 1/4)` and `(3/4, 3/4)`.
    TwoWell,
}

/// Smoothing length of the minimum in [`Obstacle::TwoWell`].
const TWO_WELL_SMOOTHING: f64 = 0.005;
const TWO_WELL_DEPTH: f64 = 0.08;

impl Obstacle {
    pub const ALL: [Obstacle; 4] = [Self::Crease, Self::Ripple, Self::Modes, Self::TwoWell];
    /// The one-variable obstacles.
    pub const ONE_DIMENSIONAL: [Obstacle; 3] = [Self::Crease, Self::Ripple, Self::Modes];

    pub fn name(self) -> &'static str {
        match self {
            Self::Crease => "crease",
            Self::Ripple => "ripple",
            Self::Modes => "modes",
            Self::TwoWell => "two_well",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == name)
            .ok_or_else(|| Error::Argument(format!("unknown builtin obstacle {name:?}")))
    }

    /// Value at real coordinates `c`, for a grid of complex dimension `n`.
    pub fn value(self, c: &[f64; 6], n: usize) -> f64 {
        let x = c[0];
        match self {
            Self::Crease => {
                let a = 0.05 * (2.0 * PI * x).cos();
                let b = 0.05 * (2.0 * PI * (x - 0.4)).cos() + 0.01;
                a.min(b)
            }
            Self::Ripple => 0.3 * (4.0 * PI * x).cos(),
            Self::Modes => 0.1 * (2.0 * PI * x).sin() + 0.05 * (6.0 * PI * x).cos(),
            Self::TwoWell => {
                let y = if n >= 2 { c[2] } else { c[1] };
                let well = |cx: f64, cy: f64| {
                    -TWO_WELL_DEPTH * ((2.0 * PI * (x - cx)).cos() + (2.0 * PI * (y - cy)).cos())
                };
                smooth_min(well(0.25, 0.25), well(0.75, 0.75), TWO_WELL_SMOOTHING)
            }
        }
    }

    /// Samples the obstacle on `grid`.
    pub fn sample<T: Real>(self, grid: &GridSpec) -> ScalarField<T> {
        let n = grid.dim();
        ScalarField::from_fn(grid, |c| self.value(c, n))
    }
}

/// `-k log(e^{-a/k} + e^{-b/k})`, within `k log 2` of `min(a, b)`.
pub fn smooth_min(a: f64, b: f64, k: f64) -> f64 {
    let lo = a.min(b);
    lo - k * ((-(a - lo) / k).exp() + (-(b - lo) / k).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for o in Obstacle::ALL {
            assert_eq!(Obstacle::from_name(o.name()).unwrap(), o);
        }
        assert!(Obstacle::from_name("nope").is_err());
    }

    #[test]
    fn smooth_min_is_below_min_within_log_two() {
        for (a, b) in [(0.0, 0.0), (0.1, -0.2), (-0.3, 0.05), (1.0, 1.001)] {
            let s = smooth_min(a, b, 0.01);
            assert!(s <= a.min(b) + 1e-15);
            assert!(s >= a.min(b) - 0.01 * 2f64.ln() - 1e-15);
        }
    }

    #[test]
    fn crease_values() {
        // second branch at x = 0, first at x = 0.4
        let c = [0.0; 6];
        assert!((Obstacle::Crease.value(&c, 1) - (0.05 * (0.8 * PI).cos() + 0.01)).abs() < 1e-15);
        let c = [0.4, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((Obstacle::Crease.value(&c, 1) - 0.05 * (0.8 * PI).cos()).abs() < 1e-15);
        let c = [0.7, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((Obstacle::Crease.value(&c, 1) - 0.05 * (1.4 * PI).cos()).abs() < 1e-15);
    }

    #[test]
    fn two_well_uses_second_direction_when_available() {
        let c = [0.25, 0.9, 0.25, 0.0, 0.0, 0.0];
        let v2 = Obstacle::TwoWell.value(&c, 2);
        let v1 = Obstacle::TwoWell.value(&c, 1);
        assert!(v2 < -0.15, "{v2}");
        assert!(v1 > v2);
    }
}
