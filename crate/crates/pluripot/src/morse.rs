//! Gauduchon metrics, the bigness pairing scan, the integrated Popovici inequality and
//! the mass convergence along the ε-ladder.

use num_complex::Complex;
use rand::RngExt;
use serde::Serialize;
use std::f64::consts::PI;

use crate::algebra::HermitianMatrix;
use crate::calculus::density::{mixed_density_of_fields, mixed_mass};
use crate::calculus::field::{HermitianForm11Field, ScalarField};
use crate::calculus::forms::FormField;
use crate::calculus::grid::GridSpec;
use crate::calculus::spectral::{ddc_with, Spectral};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scenarios::{band_limited, cone_scale, rng_for, sample_psh, Scenario, SAFETY};
use crate::volume::{slope_drift, volume};

/// Gauduchon defect tolerance for family members.
pub const GAUDUCHON_TOL: f64 = 1e-8;

/// Degree of the localized profile `((1 + cos)/2)^m`.
const PROFILE_DEGREE: i32 = 4;

/// Floor of the localized profile, keeping members definite.
const PROFILE_FLOOR: f64 = 0.05;

/// `(flag, defect)` with `defect = sup |dd^c(θ^{n-1})|` over all coefficients.
pub fn is_gauduchon<T: Real>(theta: &HermitianForm11Field<T>, tol: f64) -> Result<(bool, f64)> {
    let (lo, at) = theta.min_eigenvalue();
    if lo <= T::zero() {
        return Err(Error::NotPositive { what: format!("θ at point {at}"), eigenvalue: lo.to_f64_lossy() });
    }
    let n = theta.dim();
    if n == 1 {
        return Ok((true, 0.0));
    }
    let sp = Spectral::new(theta.grid());
    let base = FormField::from_hermitian(theta);
    let mut power = base.clone();
    for _ in 2..n {
        power = power.wedge(&base)?;
    }
    let defect = power.ddc(&sp)?.sup_norm().to_f64_lossy();
    Ok((defect <= tol, defect))
}

/// How a family member was generated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MemberKind {
    /// The identity metric.
    Identity,
    /// Constant diagonal base with a perturbation concentrated near `centre` in one
    /// variable.
    Localized { variable: usize, centre: [f64; 2] },
    /// Constant diagonal base with a band-limited perturbation of the given amplitude.
    Band { amplitude: f64 },
}

/// Generator settings of a [`GauduchonFamily`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySpec {
    pub size: usize,
    pub seed: u64,
    pub max_freq: usize,
}

/// Gauduchon metrics `θ` with `dd^c(θ^{n-1}) = 0`.
///
/// In dimensions 1 and 2 members are `θ_0 + dd^c χ` with `θ_0` constant. In dimension 3
/// the square is prescribed as `θ_0² + dd^c χ ^ θ_0`, which is linear in `χ` and
/// `dd^c`-closed, and `θ` is recovered pointwise as the positive root.
#[derive(Clone, Debug)]
pub struct GauduchonFamily<T> {
    pub spec: FamilySpec,
    pub members: Vec<HermitianForm11Field<T>>,
    pub kinds: Vec<MemberKind>,
    pub bases: Vec<Vec<f64>>,
    pub defects: Vec<f64>,
}

impl<T: Real> GauduchonFamily<T> {
    /// Builds `spec.size` members: the identity, then alternately localized and
    /// band-limited perturbations of random constant diagonal bases.
    pub fn build(grid: &GridSpec, spec: FamilySpec) -> Result<Self> {
        if spec.size == 0 {
            return Err(Error::Argument("empty Gauduchon family".into()));
        }
        let n = grid.dim();
        let sp = Spectral::new(grid);
        let active: Vec<usize> = (0..n).filter(|&j| grid.res()[2 * j] > 1 || grid.res()[2 * j + 1] > 1).collect();
        let mut fam = Self { spec: spec.clone(), members: vec![], kinds: vec![], bases: vec![], defects: vec![] };
        for k in 0..spec.size {
            let (mut rng, _) = rng_for(spec.seed, k as u64);
            let (base, hessian, kind) = if k == 0 || active.is_empty() {
                (vec![1.0; n], None, MemberKind::Identity)
            } else {
                let base: Vec<f64> = (0..n).map(|_| rng.random_range(0.05f64.ln()..0.0).exp()).collect();
                if k % 2 == 1 {
                    let variable = active[rng.random_range(0..active.len())];
                    let centre = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
                    let chi = localized_potential(&sp, grid, variable, centre, base[variable]);
                    (base, Some(ddc_with(&sp, &chi)), MemberKind::Localized { variable, centre })
                } else {
                    let axes = grid.active_axes();
                    let chi = ScalarField::new(grid.clone(), band_limited(grid, &axes, spec.max_freq, &mut rng).into_iter().map(T::lit).collect())?;
                    (base, Some(ddc_with(&sp, &chi)), MemberKind::Band { amplitude: 0.0 })
                }
            };
            let theta0 = HermitianMatrix::diag(&base.iter().map(|&b| T::lit(b)).collect::<Vec<_>>())?;
            let (theta, kind) = match hessian {
                None => (HermitianForm11Field::constant(grid, theta0)?, kind),
                Some(h) => perturb(grid, &theta0, &h, kind)?,
            };
            let (ok, defect) = is_gauduchon(&theta, GAUDUCHON_TOL)?;
            if !ok {
                return Err(Error::Build { param: format!("Gauduchon member {k}"), reason: format!("defect {defect:e}") });
            }
            fam.members.push(theta);
            fam.kinds.push(kind);
            fam.bases.push(base);
            fam.defects.push(defect);
        }
        Ok(fam)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Periodic profile `p` of mean 1 in variable `j`, concentrated at `centre`.
fn profile(c: &[f64; 6], j: usize, centre: [f64; 2], mean: f64) -> f64 {
    let bump = |x: f64, c0: f64| (0.5 * (1.0 + (2.0 * PI * (x - c0)).cos())).powi(PROFILE_DEGREE);
    (1.0 - PROFILE_FLOOR) * bump(c[2 * j], centre[0]) * bump(c[2 * j + 1], centre[1]) / mean + PROFILE_FLOOR
}

/// `χ` depending on `z_j` only with `∂²χ/∂z_j∂z̄_j = scale (p - 1)`.
fn localized_potential<T: Real>(sp: &Spectral<T>, grid: &GridSpec, j: usize, centre: [f64; 2], scale: f64) -> ScalarField<T> {
    // mean of ((1+cos)/2)^m is C(2m, m) / 4^m per active axis
    let m = PROFILE_DEGREE as u32;
    let axis_mean = (1..=m).map(|i| (m + i) as f64 / i as f64).product::<f64>() / 4f64.powi(m as i32);
    let mean = [2 * j, 2 * j + 1].iter().map(|&a| if grid.res()[a] > 1 { axis_mean } else { 1.0 }).product::<f64>();
    let rhs = ScalarField::<T>::from_fn(grid, |c| {
        let c = if grid.res()[2 * j] > 1 { *c } else { with_axis(c, 2 * j, centre[0]) };
        let c = if grid.res()[2 * j + 1] > 1 { c } else { with_axis(&c, 2 * j + 1, centre[1]) };
        scale * (profile(&c, j, centre, mean) - 1.0)
    });
    let spec = sp.forward_real(&rhs);
    let mut out = vec![Complex::new(T::zero(), T::zero()); spec.len()];
    sp.for_each_index(|flat, idx| {
        let s = sp.dz_dzbar(j, idx);
        if s != T::zero() {
            out[flat] = spec[flat] / s;
        }
    });
    sp.inverse(&mut out);
    ScalarField::new(grid.clone(), out.iter().map(|z| z.re).collect()).expect("grid size")
}

fn with_axis(c: &[f64; 6], axis: usize, value: f64) -> [f64; 6] {
    let mut c = *c;
    c[axis] = value;
    c
}

/// Adds `hessian` to the constant base so that the result is Gauduchon.
fn perturb<T: Real>(
    grid: &GridSpec,
    theta0: &HermitianMatrix<T>,
    hessian: &HermitianForm11Field<T>,
    kind: MemberKind,
) -> Result<(HermitianForm11Field<T>, MemberKind)> {
    let n = grid.dim();
    let base = HermitianForm11Field::constant(grid, *theta0)?;
    if n <= 2 {
        let t = match kind {
            MemberKind::Band { .. } => SAFETY * cone_scale(&base, hessian),
            _ => 1.0,
        };
        let theta = base.axpy(T::lit(t), hessian)?;
        return Ok((theta, with_amplitude(kind, t)));
    }
    // adj(θ) represents θ² through (θ² ^ β) = 2 tr(adj(θ) β)
    let adj0 = HermitianForm11Field::constant(grid, theta0.adjugate())?;
    let quarter = T::lit(0.25);
    let polar = hessian.map_points(|i| {
        let h = hessian.at(i);
        theta0.axpy(T::one(), &h).adjugate().sub(&theta0.axpy(-T::one(), &h).adjugate()).expect("same dimension").scale(quarter)
    });
    let t = match kind {
        MemberKind::Band { .. } => SAFETY * cone_scale(&adj0, &polar),
        _ => 1.0,
    };
    let target = adj0.axpy(T::lit(t), &polar)?;
    let root = T::one() / T::from_usize(n - 1).expect("small");
    let theta = target.map_points(|i| {
        let c = target.at(i);
        c.inverse().expect("definite target").scale(c.det().powf(root))
    });
    Ok((theta, with_amplitude(kind, t)))
}

fn with_amplitude(kind: MemberKind, t: f64) -> MemberKind {
    match kind {
        MemberKind::Band { .. } => MemberKind::Band { amplitude: t },
        other => other,
    }
}

/// Outcome of [`lamari_pairing_scan`]. The minimum is over the family only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairingScan {
    /// `min_θ ∫ω ^ θ^{n-1} / ∫ω_X ^ θ^{n-1}`.
    pub delta_star: f64,
    /// Lowest member index attaining the minimum.
    pub argmin: usize,
    pub ratios: Vec<f64>,
    pub label: &'static str,
}

/// Family-restricted upper bound on the bigness constant of `omega` relative to
/// `omega_x`.
pub fn lamari_pairing_scan<T: Real>(
    omega: &HermitianForm11Field<T>,
    omega_x: &HermitianForm11Field<T>,
    family: &GauduchonFamily<T>,
) -> Result<PairingScan> {
    if family.is_empty() {
        return Err(Error::Argument("empty Gauduchon family".into()));
    }
    let n = omega.dim();
    let mut ratios = Vec::with_capacity(family.len());
    for theta in &family.members {
        let mut num: Vec<&HermitianForm11Field<T>> = vec![theta; n - 1];
        num.push(omega);
        let mut den: Vec<&HermitianForm11Field<T>> = vec![theta; n - 1];
        den.push(omega_x);
        let d = mixed_mass(&den)?.to_f64_lossy();
        assert!(d > 0.0, "pairing of positive forms must be positive");
        ratios.push(mixed_mass(&num)?.to_f64_lossy() / d);
    }
    let (argmin, &delta_star) = ratios
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("nonempty");
    Ok(PairingScan { delta_star, argmin, ratios, label: "family-restricted" })
}

/// Outcome of [`popovici_integrated`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegratedPopovici {
    /// `(∫θ_1 ^ θ_3^{n-1}) (∫θ_1^{n-1} ^ θ_2)`.
    pub lhs: f64,
    /// `(1/n) (∫ sqrt(θ_1^n · θ_2 ^ θ_3^{n-1}))²`, which is `(1/n)(∫θ_1^n)²` when constructed.
    pub rhs: f64,
    pub constructed: bool,
}

impl IntegratedPopovici {
    /// `lhs >= rhs (1 - tol)`.
    pub fn passed(&self, tol: f64) -> bool {
        self.lhs >= self.rhs * (1.0 - tol)
    }

    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Integrated Popovici inequality. With `constructed`, `θ_1` is first rescaled
/// conformally so that `θ_1^n = θ_2 ^ θ_3^{n-1}` pointwise.
pub fn popovici_integrated<T: Real>(
    t1: &HermitianForm11Field<T>,
    t2: &HermitianForm11Field<T>,
    t3: &HermitianForm11Field<T>,
    constructed: bool,
) -> Result<IntegratedPopovici> {
    for (name, t) in [("θ_1", t1), ("θ_2", t2), ("θ_3", t3)] {
        let (lo, at) = t.min_eigenvalue();
        if lo <= T::zero() {
            return Err(Error::NotPositive { what: format!("{name} at point {at}"), eigenvalue: lo.to_f64_lossy() });
        }
    }
    let n = t1.dim();
    let mut target_slots = vec![t3; n - 1];
    target_slots.push(t2);
    let target = mixed_density_of_fields(&target_slots)?;
    let own = mixed_density_of_fields(&vec![t1; n])?;
    let nf = n as f64;
    let (theta1, rhs) = if constructed {
        let root = T::one() / T::from_usize(n).expect("small");
        let c = target.zip_map(&own, |g, f| (g / f).powf(root))?;
        assert!(c.inf() > T::zero(), "conformal factor must be positive");
        let scaled = t1.conformal(&c)?;
        let m = volume(&scaled)?;
        (scaled, m * m / nf)
    } else {
        let geo = own.zip_map(&target, |f, g| (f * g).sqrt())?;
        let m: f64 = geo.values().iter().map(|v| v.to_f64_lossy()).sum::<f64>() / geo.values().len() as f64;
        (t1.clone(), m * m / nf)
    };
    let mut a = vec![t3; n - 1];
    a.push(&theta1);
    let mut b = vec![&theta1; n - 1];
    b.push(t2);
    let lhs = mixed_mass(&a)?.to_f64_lossy() * mixed_mass(&b)?.to_f64_lossy();
    Ok(IntegratedPopovici { lhs, rhs, constructed })
}

/// Random smooth positive metric `G G* + δ I` with band-limited entries of `G`.
pub fn random_metric<T: Real>(grid: &GridSpec, seed: u64, max_freq: usize) -> Result<HermitianForm11Field<T>> {
    let n = grid.dim();
    let axes = grid.active_axes();
    let (mut rng, _) = rng_for(seed, 0);
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let re = band_limited(grid, &axes, max_freq, &mut rng);
            let im = band_limited(grid, &axes, max_freq, &mut rng);
            let offset = if j == k { 1.0 } else { rng.random_range(-0.5..0.5) };
            entries.push((re, im, offset));
        }
    }
    let delta = rng.random_range(0.05..0.5);
    let shape = HermitianForm11Field::constant(grid, HermitianMatrix::identity(n)?)?;
    Ok(shape.map_points(|i| {
        let g: Vec<Complex<T>> = entries.iter().map(|(re, im, o)| Complex::new(T::lit(re[i] + o), T::lit(im[i]))).collect();
        let mut rows = vec![Complex::new(T::zero(), T::zero()); n * n];
        for a in 0..n {
            for b in 0..n {
                let mut s = Complex::new(if a == b { T::lit(delta) } else { T::zero() }, T::zero());
                for m in 0..n {
                    s = s + g[a * n + m] * g[b * n + m].conj();
                }
                rows[a * n + b] = s;
            }
        }
        HermitianMatrix::from_rows(n, &rows).expect("hermitian by construction")
    }))
}

/// `diag(1 - a sin 2πx_j)`: a closed semi-positive companion of the nef scenario.
pub fn closed_companion<T: Real>(grid: &GridSpec, amplitude: f64) -> Result<HermitianForm11Field<T>> {
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(Error::Argument(format!("companion amplitude {amplitude} outside [0, 1]")));
    }
    let n = grid.dim();
    HermitianForm11Field::from_fn(grid, |c| {
        let d: Vec<T> = (0..n).map(|j| T::lit(1.0 - amplitude * (2.0 * PI * c[2 * j]).sin())).collect();
        HermitianMatrix::diag(&d).expect("dimension checked")
    })
}

/// One rung of [`morse_mass_convergence`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MorseRow {
    pub eps: f64,
    /// `max |∫ω^n - ∫(ω_ε + dd^c u)^n|`.
    pub mass_deviation: f64,
    /// `max |∫ω^{n-1} ^ ω' - ∫(ω_ε + dd^c u)^{n-1} ^ (ω'_ε + dd^c ψ)|`.
    pub mixed_deviation: f64,
    /// Largest relative distance of a sample's mass or mixed mass from that of `u = ψ = 0`.
    pub spectral_deviation: f64,
    pub fallbacks: usize,
}

/// Outcome of [`morse_mass_convergence`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseTable {
    pub rows: Vec<MorseRow>,
    pub limit_mass: f64,
    pub limit_mixed: f64,
    pub mass_slope_drift: f64,
    pub mixed_slope_drift: f64,
    pub spectral_deviation: f64,
}

/// Mass and mixed-mass deviations along the ε-ladder `ω_ε = ω + ε ω_X`,
/// `ω'_ε = ω' + ε ω_X`, over `count` samples per rung plus `u = ψ = 0`.
pub fn morse_mass_convergence<T: Real>(
    s: &Scenario<T>,
    omega_prime: &HermitianForm11Field<T>,
    ladder: &[f64],
    count: usize,
    seed: u64,
    max_freq: usize,
) -> Result<MorseTable> {
    if !s.kind.is_closed() {
        return Err(Error::Argument(format!("{} is not closed", s.kind.name())));
    }
    let half = s.omega_x.scale(T::lit(0.5)).axpy(-T::one(), &s.omega)?;
    let (lo, at) = half.min_eigenvalue();
    if lo < -T::lit(1e-12) {
        return Err(Error::Argument(format!("ω exceeds ω_X/2 at point {at}")));
    }
    let n = s.dim();
    let sp = Spectral::new(&s.grid);
    let mixed_of = |a: &HermitianForm11Field<T>, b: &HermitianForm11Field<T>| -> Result<f64> {
        let mut slots = vec![a; n - 1];
        slots.push(b);
        Ok(mixed_mass(&slots)?.to_f64_lossy())
    };
    let limit_mass = volume(&s.omega)?;
    let limit_mixed = mixed_of(&s.omega, omega_prime)?;
    let mut rows = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let form = s.omega.axpy(T::lit(eps), &s.omega_x)?;
        let form_p = omega_prime.axpy(T::lit(eps), &s.omega_x)?;
        let ref_mass = volume(&form)?;
        let ref_mixed = mixed_of(&form, &form_p)?;
        let us = sample_psh(&form, count, seed, max_freq, None)?;
        let ps = sample_psh(&form_p, count, seed.wrapping_add(1), max_freq, None)?;
        let (mut mass_dev, mut mixed_dev) = ((ref_mass - limit_mass).abs(), (ref_mixed - limit_mixed).abs());
        let mut spectral: f64 = 0.0;
        for (u, p) in us.iter().zip(&ps) {
            let wu = form.add(&ddc_with(&sp, &u.u))?;
            let wp = form_p.add(&ddc_with(&sp, &p.u))?;
            let m = volume(&wu)?;
            let x = mixed_of(&wu, &wp)?;
            mass_dev = mass_dev.max((m - limit_mass).abs());
            mixed_dev = mixed_dev.max((x - limit_mixed).abs());
            spectral = spectral.max((m - ref_mass).abs() / ref_mass).max((x - ref_mixed).abs() / ref_mixed.abs().max(f64::MIN_POSITIVE));
        }
        let fallbacks = us.iter().chain(&ps).filter(|x| x.fallback).count();
        rows.push(MorseRow { eps, mass_deviation: mass_dev, mixed_deviation: mixed_dev, spectral_deviation: spectral, fallbacks });
    }
    let mass_slopes: Vec<f64> = rows.iter().map(|r| r.mass_deviation / r.eps).collect();
    let mixed_slopes: Vec<f64> = rows.iter().map(|r| r.mixed_deviation / r.eps).collect();
    let spectral_deviation = rows.iter().map(|r| r.spectral_deviation).fold(0.0, f64::max);
    Ok(MorseTable {
        rows,
        limit_mass,
        limit_mixed,
        mass_slope_drift: slope_drift(&mass_slopes),
        mixed_slope_drift: slope_drift(&mixed_slopes),
        spectral_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{ScenarioKind, ScenarioParams};
    use crate::volume::eps_ladder;

    fn x_grid(n: usize, res: usize) -> GridSpec {
        ScenarioKind::FlatKahler.grid(n, res).unwrap()
    }

    #[test]
    fn constant_metric_is_gauduchon() {
        let g = x_grid(3, 16);
        let m = HermitianMatrix::<f64>::diag(&[1.0, 2.0, 0.5]).unwrap();
        let (ok, d) = is_gauduchon(&HermitianForm11Field::constant(&g, m).unwrap(), 1e-14).unwrap();
        assert!(ok && d <= 1e-14);
    }

    #[test]
    fn conformal_identity_is_not_gauduchon() {
        let g = x_grid(2, 32);
        let theta = HermitianForm11Field::<f64>::from_fn(&g, |c| {
            HermitianMatrix::identity(2).unwrap().scale(1.0 + 0.5 * (2.0 * PI * c[0]).cos())
        })
        .unwrap();
        let (ok, d) = is_gauduchon(&theta, 1e-8).unwrap();
        assert!(!ok && d > 1e-2, "{d}");
        let bad = HermitianForm11Field::constant(&g, HermitianMatrix::diag(&[1.0, -1.0]).unwrap()).unwrap();
        assert!(is_gauduchon(&bad, 1e-8).is_err());
    }

    #[test]
    fn families_are_gauduchon_and_definite() {
        for (n, res) in [(1, 32), (2, 32), (3, 16)] {
            let g = x_grid(n, res);
            let fam = GauduchonFamily::<f64>::build(&g, FamilySpec { size: 6, seed: 4, max_freq: 2 }).unwrap();
            assert_eq!(fam.len(), 6);
            for (m, d) in fam.members.iter().zip(&fam.defects) {
                assert!(m.min_eigenvalue().0 > 0.0);
                assert!(*d <= 1e-10, "n {n}: defect {d}");
            }
            assert!(fam.kinds.iter().any(|k| matches!(k, MemberKind::Band { amplitude } if *amplitude > 0.0)));
        }
    }

    #[test]
    fn pairing_scan_ratios() {
        let s = Scenario::<f64>::build(ScenarioKind::NonclosedHermitian, ScenarioParams::new(2, 32).seed(1)).unwrap();
        let fam = GauduchonFamily::build(&s.grid, FamilySpec { size: 5, seed: 2, max_freq: 2 }).unwrap();
        let same = lamari_pairing_scan(&s.omega, &s.omega, &fam).unwrap();
        assert!((same.delta_star - 1.0).abs() < 1e-13);
        let half = lamari_pairing_scan(&s.omega.scale(0.5), &s.omega, &fam).unwrap();
        assert!((half.delta_star - 0.5).abs() < 1e-13);
        let base = lamari_pairing_scan(&s.omega, &s.omega_x, &fam).unwrap();
        let mut scaled = fam.clone();
        scaled.members = scaled.members.iter().map(|m| m.scale(3.7)).collect();
        let again = lamari_pairing_scan(&s.omega, &s.omega_x, &scaled).unwrap();
        assert_eq!(base.argmin, again.argmin);
        assert!((base.delta_star - again.delta_star).abs() < 1e-13);
    }

    #[test]
    fn collapsing_pairing_is_small() {
        let s = Scenario::<f64>::build(ScenarioKind::ProductCollapsing, ScenarioParams::new(2, 32)).unwrap();
        let fam = GauduchonFamily::build(&s.grid, FamilySpec { size: 16, seed: 9, max_freq: 2 }).unwrap();
        let scan = lamari_pairing_scan(&s.omega, &s.omega_x, &fam).unwrap();
        assert!(scan.delta_star < 0.05, "{scan:?}");
        assert!(scan.ratios[0] > scan.delta_star);
    }

    #[test]
    fn popovici_identity_and_random_triples() {
        let g = x_grid(2, 16);
        let id = HermitianForm11Field::<f64>::constant(&g, HermitianMatrix::identity(2).unwrap()).unwrap();
        let r = popovici_integrated(&id, &id, &id, false).unwrap();
        assert!((r.lhs - 4.0).abs() < 1e-13 && (r.rhs - 2.0).abs() < 1e-13);
        for n in [2, 3] {
            let g = x_grid(n, 16);
            for seed in 0..5 {
                let t: Vec<HermitianForm11Field<f64>> =
                    (0..3).map(|k| random_metric(&g, 31 * seed + k, 2).unwrap()).collect();
                for constructed in [false, true] {
                    let r = popovici_integrated(&t[0], &t[1], &t[2], constructed).unwrap();
                    assert!(r.passed(1e-9), "{r:?}");
                }
            }
        }
    }

    #[test]
    fn popovici_near_sharp_probe() {
        let g = x_grid(2, 16);
        let t1 = random_metric::<f64>(&g, 5, 1).unwrap();
        let t2 = t1.scale(2.0);
        let r = popovici_integrated(&t1, &t2, &t1, true).unwrap();
        assert!(r.passed(1e-12));
        assert!(r.ratio() >= 1.0 && r.ratio() < 10.0);
    }

    #[test]
    fn closed_nef_mass_convergence() {
        let s = Scenario::<f64>::build(ScenarioKind::NefDegenerate, ScenarioParams::new(2, 32).seed(2)).unwrap();
        let prime = closed_companion(&s.grid, 0.8).unwrap();
        let t = morse_mass_convergence(&s, &prime, &eps_ladder(0.1, 3), 4, 6, 2).unwrap();
        // ∫(ω + 4ε I)² = 2 (1 + 4ε)²
        for r in &t.rows {
            let exact = 2.0 * (1.0 + 4.0 * r.eps).powi(2) - 2.0;
            assert!((r.mass_deviation - exact).abs() < 1e-9, "{r:?}");
        }
        assert!(t.spectral_deviation < 1e-10, "{t:?}");
        assert!(t.mass_slope_drift < 0.2 && t.mixed_slope_drift < 0.2, "{t:?}");
    }
}
