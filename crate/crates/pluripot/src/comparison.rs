//! Sampled checks of the modified comparison principle, the contact-set inequality and
//! the domination principle.
//!
//! Samples are smooth and bounded, strictly inside the class the statements are made
//! for, so a failed check points at the discretization or at a bug.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::calculus::density::{integrate, ma_density_with, mixed_density_of_fields, PSH_TOL};
use crate::calculus::field::{HermitianForm11Field, ScalarField};
use crate::calculus::grid::GridSpec;
use crate::calculus::spectral::{ddc_with, Spectral};
use crate::envelope::dilate;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scenarios::{is_omega_psh, sample_psh};
use crate::volume::volume;

/// Points where a sublevel inequality holds within this (relative) slack are assigned to
/// the sublevel set.
pub const BOUNDARY_SLACK: f64 = 1e-9;

/// `s_max = λ³ / (32 B (n-1)²)`, infinite when `B (n-1) = 0`.
pub fn s_max(lambda: f64, b: f64, n: usize) -> f64 {
    let k = b * ((n - 1) * (n - 1)) as f64;
    if k == 0.0 {
        f64::INFINITY
    } else {
        lambda.powi(3) / (32.0 * k)
    }
}

/// `(1 - 4 B (n-1)² s / λ³)^n`.
pub fn comparison_factor(lambda: f64, b: f64, n: usize, s: f64) -> f64 {
    let k = b * ((n - 1) * (n - 1)) as f64;
    (1.0 - 4.0 * k * s / lambda.powi(3)).powi(n as i32)
}

/// One evaluation of the modified comparison inequality on
/// `U = {u < (1-λ)v + m_λ + s}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub lambda: f64,
    pub s: f64,
    pub b: f64,
    /// `min (u - (1-λ)v)`.
    pub m_lambda: f64,
    /// Grid points in `U`.
    pub cells: usize,
    /// `(1 - 4B(n-1)²s/λ³)^n ∫_U ma((1-λ)v)`.
    pub lhs: f64,
    /// `∫_U ma(u)`.
    pub rhs: f64,
    pub margin: f64,
    /// Margin with boundary points removed from `U`.
    pub strict_margin: f64,
    /// `∫ω^n`.
    pub total_mass: f64,
    /// Both integrals vanish.
    pub vacuous: bool,
}

impl ComparisonReport {
    /// `margin >= -tol * total_mass`, or vacuous.
    pub fn passed(&self, tol: f64) -> bool {
        self.vacuous || self.margin >= -tol * self.total_mass
    }
}

/// Modified comparison inequality for each `s` in `svals`.
///
/// `b` is the condition-(B) constant of `omega`; every `s` must lie in `(0, s_max)`.
pub fn modified_comparison_check<T: Real>(
    omega: &HermitianForm11Field<T>,
    u: &ScalarField<T>,
    v: &ScalarField<T>,
    lambda: f64,
    svals: &[f64],
    b: f64,
) -> Result<Vec<ComparisonReport>> {
    omega.grid().same_as(u.grid())?;
    u.grid().same_as(v.grid())?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Argument(format!("λ = {lambda} outside (0, 1)")));
    }
    if !(b >= 0.0) {
        return Err(Error::Argument(format!("condition-(B) constant {b} is not finite and non-negative")));
    }
    let n = omega.dim();
    let limit = s_max(lambda, b, n);
    if let Some(&s) = svals.iter().find(|&&s| !(s > 0.0 && s < limit)) {
        return Err(Error::Argument(format!("s = {s} outside (0, {limit})")));
    }
    let sp = Spectral::new(u.grid());
    let w = v.scale(T::lit(1.0 - lambda));
    let check = is_omega_psh(omega, &w, PSH_TOL)?;
    if !check.ok {
        return Err(Error::Cone { point: check.worst_point, eigenvalue: check.worst_eigenvalue });
    }
    let fu = ma_density_with(&sp, omega, u)?;
    let fw = ma_density_with(&sp, omega, &w)?;
    let diff: Vec<f64> = u.values().iter().zip(w.values()).map(|(&a, &c)| (a - c).to_f64_lossy()).collect();
    let m_lambda = diff.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = 1.0 + diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let total_mass = volume(omega)?;
    let len = u.grid().len() as f64;
    let masked = |level: f64, slack: f64| {
        let (mut lhs, mut rhs, mut cells) = (0.0, 0.0, 0);
        for (i, &d) in diff.iter().enumerate() {
            if d < level + slack {
                lhs += fw.values()[i].to_f64_lossy();
                rhs += fu.values()[i].to_f64_lossy();
                cells += 1;
            }
        }
        (lhs / len, rhs / len, cells)
    };
    Ok(svals
        .iter()
        .map(|&s| {
            let factor = comparison_factor(lambda, b, n, s);
            let level = m_lambda + s;
            let (mw, mu, cells) = masked(level, BOUNDARY_SLACK * scale);
            let (sw, su, _) = masked(level, -BOUNDARY_SLACK * scale);
            let lhs = factor * mw;
            ComparisonReport {
                lambda,
                s,
                b,
                m_lambda,
                cells,
                lhs,
                rhs: mu,
                margin: mu - lhs,
                strict_margin: su - factor * sw,
                total_mass,
                vacuous: mw == 0.0 && mu == 0.0,
            }
        })
        .collect())
}

/// `u = ψ - q²`, so that `u <= ψ` with equality to second order where `q` vanishes.
pub fn contact_pair<T: Real>(psi: &ScalarField<T>, q: &ScalarField<T>) -> Result<ScalarField<T>> {
    let u = psi.zip_map(q, |p, x| p - x * x)?;
    if u.values().iter().zip(psi.values()).any(|(&a, &b)| a > b) {
        return Err(Error::Argument("constructed pair violates u <= ψ".into()));
    }
    Ok(u)
}

/// `amplitude * e^{-1/t}` with `t = (s - s_0) / (1 - s_0)` and `s = sin²(π(x - ½))` along
/// `axis`, vanishing exactly on the band `|x - ½| <= half_width`.
pub fn band_bump<T: Real>(grid: &GridSpec, axis: usize, half_width: f64, amplitude: f64) -> ScalarField<T> {
    let s0 = (PI * half_width).sin().powi(2);
    ScalarField::from_fn(grid, |c| {
        let s = (PI * (c[axis] - 0.5)).sin().powi(2);
        let t = (s - s0) / (1.0 - s0);
        if t <= 0.0 { 0.0 } else { amplitude * (-1.0 / t).exp() }
    })
}

/// Outcome of [`contact_inequality_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactReport {
    /// Points in the interior of `{q = 0}`.
    pub interior_points: usize,
    /// Per `j = 0..=n`, `min ((ω_ψ)^n - (ω_u)^j ^ (ω_ψ)^{n-j})` over interior points.
    pub margins: Vec<f64>,
    pub tol: f64,
}

impl ContactReport {
    pub fn passed(&self) -> bool {
        self.margins.iter().all(|&m| m >= -self.tol)
    }
}

/// Checks `(ω_u)^j ^ (ω_ψ)^{n-j} <= (ω_ψ)^n + tol` at grid points whose `erosion`-cell
/// neighbourhood lies in `{q = 0}`, for `u = ψ - q²`.
pub fn contact_inequality_check<T: Real>(
    omega: &HermitianForm11Field<T>,
    psi: &ScalarField<T>,
    q: &ScalarField<T>,
    erosion: usize,
    tol: f64,
) -> Result<ContactReport> {
    omega.grid().same_as(psi.grid())?;
    let u = contact_pair(psi, q)?;
    let grid = psi.grid();
    let sp = Spectral::new(grid);
    let wu = omega.add(&ddc_with(&sp, &u))?;
    let wp = omega.add(&ddc_with(&sp, psi))?;
    let outside: Vec<bool> = q.values().iter().map(|&x| x != T::zero()).collect();
    let interior: Vec<bool> = dilate(grid, &outside, erosion).into_iter().map(|o| !o).collect();
    let n = omega.dim();
    let top = mixed_density_of_fields(&vec![&wp; n])?;
    let mut margins = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut slots = vec![&wu; j];
        slots.extend(std::iter::repeat_n(&wp, n - j));
        let mixed = mixed_density_of_fields(&slots)?;
        let m = (0..grid.len())
            .filter(|&i| interior[i])
            .map(|i| (top.values()[i] - mixed.values()[i]).to_f64_lossy())
            .fold(f64::INFINITY, f64::min);
        margins.push(m);
    }
    Ok(ContactReport { interior_points: interior.iter().filter(|&&x| x).count(), margins, tol })
}

/// Counts for one hypothesis of [`domination_falsification`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Campaign {
    pub screened: usize,
    /// Pairs satisfying the hypothesis.
    pub passed: usize,
    /// Pairs satisfying the hypothesis but not the conclusion.
    pub violations: usize,
}

/// Outcome of [`domination_falsification`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationReport {
    /// `u = v + c_0`, `c_0 >= 0`: hypothesis of the exponential form must hold.
    pub constructive: Campaign,
    /// Pairs with `ma(u) <= c ma(v)` on `{u < v}`, expected to have `u >= v`.
    pub domination: Campaign,
    /// Pairs with `e^{-εv} ma(v) >= e^{-εu} ma(u)`, expected to have `v <= u`.
    pub exponential: Campaign,
    pub c: f64,
    pub eps: f64,
}

impl DominationReport {
    pub fn violations(&self) -> usize {
        self.constructive.violations + self.domination.violations + self.exponential.violations
    }
}

/// Tolerances used to screen hypotheses and check conclusions.
const DENSITY_SLACK: f64 = 1e-10;
const VALUE_SLACK: f64 = 1e-9;

/// Randomized search for counterexamples to the domination principle and its
/// exponential variant.
///
/// `trials` pairs are drawn from a pool of ω-psh samples, combined as independent
/// pairs, constant shifts, convex combinations and scalings (all ω-psh). Each is
/// screened for both hypotheses; pairs passing a screen must satisfy its conclusion.
pub fn domination_falsification<T: Real>(
    omega: &HermitianForm11Field<T>,
    trials: usize,
    c: f64,
    eps: f64,
    seed: u64,
    max_freq: usize,
) -> Result<DominationReport> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::Argument(format!("c = {c} outside [0, 1)")));
    }
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("ε = {eps} must be positive")));
    }
    let grid = omega.grid();
    let sp = Spectral::new(grid);
    let pool_size = 16.min(trials.max(2));
    let pool: Vec<ScalarField<T>> = sample_psh(omega, pool_size, seed, max_freq, None)?.into_iter().map(|s| s.u).collect();
    let dens: Vec<ScalarField<T>> = pool.iter().map(|u| ma_density_with(&sp, omega, u)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66);
    let mut report = DominationReport {
        constructive: Campaign::default(),
        domination: Campaign::default(),
        exponential: Campaign::default(),
        c,
        eps,
    };
    for t in 0..trials {
        let a = t % pool_size;
        let v = &pool[a];
        let fv = &dens[a];
        // constructive: u = v + c0
        let c0 = rng.random_range(0.0..0.5);
        let u = v.shift(T::lit(c0));
        let (hyp, concl) = exponential_screen(&u, v, fv, fv, eps);
        report.constructive.screened += 1;
        if hyp {
            report.constructive.passed += 1;
            if !concl {
                report.constructive.violations += 1;
            }
        } else {
            report.constructive.violations += 1;
        }
        // search
        let b = rng.random_range(0..pool_size);
        let shift = T::lit(rng.random_range(-0.1..0.1));
        let (u, fu) = match t % 4 {
            0 => (pool[b].shift(shift), dens[b].clone()),
            1 => (v.shift(shift), fv.clone()),
            2 => {
                let th = T::lit(rng.random_range(0.0..0.2));
                let mix = v.zip_map(&pool[b], |x, y| (T::one() - th) * x + th * y)?.shift(shift);
                let f = ma_density_with(&sp, omega, &mix)?;
                (mix, f)
            }
            _ => {
                let s = rng.random_range(0.0..1.0);
                let scaled = v.scale(T::lit(s)).shift(shift);
                let f = ma_density_with(&sp, omega, &scaled)?;
                (scaled, f)
            }
        };
        let (hyp, concl) = domination_screen(&u, v, &fu, fv, c);
        report.domination.screened += 1;
        if hyp {
            report.domination.passed += 1;
            if !concl {
                report.domination.violations += 1;
            }
        }
        let (hyp, concl) = exponential_screen(&u, v, &fu, fv, eps);
        report.exponential.screened += 1;
        if hyp {
            report.exponential.passed += 1;
            if !concl {
                report.exponential.violations += 1;
            }
        }
    }
    Ok(report)
}

fn density_slack<T: Real>(f: &ScalarField<T>) -> f64 {
    DENSITY_SLACK * (1.0 + f.sup_norm().to_f64_lossy())
}

/// `(ma(u) <= c ma(v) on {u < v}, u >= v)`.
fn domination_screen<T: Real>(u: &ScalarField<T>, v: &ScalarField<T>, fu: &ScalarField<T>, fv: &ScalarField<T>, c: f64) -> (bool, bool) {
    let slack = density_slack(fu).max(density_slack(fv));
    let mut hyp = true;
    let mut concl = true;
    for i in 0..u.grid().len() {
        let (a, b) = (u.values()[i].to_f64_lossy(), v.values()[i].to_f64_lossy());
        if a < b - VALUE_SLACK / 10.0 && fu.values()[i].to_f64_lossy() > c * fv.values()[i].to_f64_lossy() + slack {
            hyp = false;
        }
        if a < b - VALUE_SLACK {
            concl = false;
        }
    }
    (hyp, concl)
}

/// `(e^{-εv} ma(v) >= e^{-εu} ma(u), v <= u)`.
fn exponential_screen<T: Real>(u: &ScalarField<T>, v: &ScalarField<T>, fu: &ScalarField<T>, fv: &ScalarField<T>, eps: f64) -> (bool, bool) {
    let slack = density_slack(fu).max(density_slack(fv));
    let mut hyp = true;
    let mut concl = true;
    for i in 0..u.grid().len() {
        let (a, b) = (u.values()[i].to_f64_lossy(), v.values()[i].to_f64_lossy());
        let lhs = (-eps * b).exp() * fv.values()[i].to_f64_lossy();
        let rhs = (-eps * a).exp() * fu.values()[i].to_f64_lossy();
        if lhs < rhs - slack {
            hyp = false;
        }
        if b > a + VALUE_SLACK {
            concl = false;
        }
    }
    (hyp, concl)
}

/// Total Monge-Ampère mass of `u`.
pub fn total_mass<T: Real>(omega: &HermitianForm11Field<T>, u: &ScalarField<T>) -> Result<f64> {
    let sp = Spectral::new(u.grid());
    Ok(integrate(&ma_density_with(&sp, omega, u)?).to_f64_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::directions::DirectionSet;
    use crate::scenarios::{Scenario, ScenarioKind, ScenarioParams};

    fn build(kind: ScenarioKind, n: usize, res: usize) -> Scenario<f64> {
        Scenario::build(kind, ScenarioParams::new(n, res).seed(8)).unwrap()
    }

    #[test]
    fn admissible_range_and_factor() {
        assert!(s_max(0.5, 0.0, 3).is_infinite());
        assert!((s_max(0.5, 2.0, 3) - 0.125 / 256.0).abs() < 1e-15);
        assert_eq!(comparison_factor(0.5, 0.0, 2, 10.0), 1.0);
        let f1 = comparison_factor(0.5, 2.0, 3, 1e-4);
        let f2 = comparison_factor(0.5, 2.0, 3, 2e-4);
        assert!(f1 > f2 && f2 > 0.0);
    }

    #[test]
    fn self_comparison_at_half() {
        let s = build(ScenarioKind::FlatKahler, 2, 32);
        let u = s.sample_psh(1, 3, 2).unwrap().remove(0).u;
        let reports = modified_comparison_check(&s.omega, &u, &u, 0.5, &[1e-3, 1e-2, 0.1, 10.0], 0.0).unwrap();
        for r in &reports {
            assert!(r.margin >= 0.0 && !r.vacuous, "{r:?}");
        }
        assert_eq!(reports[3].cells, s.grid.len());
        assert!((reports[3].margin).abs() < 1e-10);
    }

    #[test]
    fn closed_pairs_have_non_negative_margins() {
        let s = build(ScenarioKind::GuanLiClosed, 2, 32);
        let fam = s.sample_psh(6, 4, 2).unwrap();
        for k in 0..3 {
            for lambda in [0.25, 0.5] {
                let osc = 1.0;
                let svals: Vec<f64> = [1e-3, 1e-2, 0.05, 0.2, 1.0].iter().map(|f| f * osc).collect();
                let reports = modified_comparison_check(&s.omega, &fam[2 * k].u, &fam[2 * k + 1].u, lambda, &svals, 0.0).unwrap();
                for r in &reports {
                    assert!(r.passed(1e-8), "{r:?}");
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let s = build(ScenarioKind::FlatKahler, 2, 16);
        let u = ScalarField::constant(&s.grid, 0.0);
        assert!(modified_comparison_check(&s.omega, &u, &u, 1.0, &[0.1], 0.0).is_err());
        assert!(modified_comparison_check(&s.omega, &u, &u, 0.5, &[0.1], 1.0).is_err());
        assert!(modified_comparison_check(&s.omega, &u, &u, 0.5, &[-0.1], 0.0).is_err());
    }

    #[test]
    fn nonclosed_three_dimensional_margins() {
        let s = build(ScenarioKind::NonclosedHermitian, 3, 16);
        let b = s.condition_b_constant(&DirectionSet::new(3, 64, 0).unwrap(), 1e-12).unwrap().b;
        let fam = s.sample_psh(4, 1, 2).unwrap();
        let half = 0.5 * s_max(0.5, b, 3);
        let svals: Vec<f64> = (1..=4).map(|k| half * k as f64 / 4.0).collect();
        for k in 0..2 {
            let reports = modified_comparison_check(&s.omega, &fam[2 * k].u, &fam[2 * k + 1].u, 0.5, &svals, b).unwrap();
            for r in &reports {
                assert!(r.passed(1e-6), "{r:?}");
            }
        }
    }

    #[test]
    fn contact_inequality_on_a_band() {
        let s = build(ScenarioKind::FlatKahler, 2, 128);
        let psi = s.sample_psh(1, 6, 2).unwrap().remove(0).u;
        let r = contact_inequality_check(&s.omega, &psi, &band_bump(&s.grid, 0, 0.1, 0.1), 3, 1e-8).unwrap();
        assert!(r.interior_points > 0);
        assert!(r.passed(), "{r:?}");
        assert!(r.margins[2].abs() < 1e-8 && r.margins[0] == 0.0);
        let zero = ScalarField::constant(&s.grid, 0.0);
        let r = contact_inequality_check(&s.omega, &psi, &zero, 3, 1e-12).unwrap();
        assert_eq!(r.interior_points, s.grid.len());
        assert!(r.margins.iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn domination_campaign_has_no_violations() {
        let s = build(ScenarioKind::NonclosedHermitian, 2, 32);
        let r = domination_falsification(&s.omega, 40, 0.5, 1.0, 3, 2).unwrap();
        assert_eq!(r.violations(), 0, "{r:?}");
        assert_eq!(r.constructive.passed, 40);
        assert!(r.exponential.passed > 0);
        assert!(domination_falsification(&s.omega, 4, 1.0, 1.0, 3, 2).is_err());
    }
}
