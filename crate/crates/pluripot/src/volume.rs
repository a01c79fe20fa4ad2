//! Mixed Monge-Ampère masses over sampled ω-psh families: surveys, identities and the
//! bounds relating them.
//!
//! Sampled extrema are one-sided: the largest sampled mass under-estimates the supremum
//! over all bounded ω-psh functions and the smallest over-estimates the infimum.

use serde::Serialize;

use crate::algebra::mixed::factorial;
use crate::calculus::density::{integrate, ma_density_with, mixed_mass};
use crate::calculus::field::{HermitianForm11Field, ScalarField};
use crate::calculus::spectral::{ddc_with, Spectral};
use crate::envelope::{envelope_beta, NewtonOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::scenarios::{clip_below, sample_psh, Scenario};

/// Masses reported below this are treated as round-off.
pub const MASS_FLOOR: f64 = -1e-10;

/// Description of a sampled family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyDescription {
    pub count: usize,
    pub seed: u64,
    pub max_freq: usize,
    /// Lower clip level `M` when the family is clipped.
    pub clip: Option<f64>,
    /// Largest smoothing perturbation introduced by clipping.
    pub smoothing: f64,
}

/// Minimum, maximum and mean of one column of masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrema {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Extrema {
    pub fn of(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        Self { min, max, mean }
    }

    /// `(max - min) / |mean|`.
    pub fn relative_spread(&self) -> f64 {
        (self.max - self.min) / self.mean.abs()
    }
}

/// Masses `∫(ω + dd^c u)^j ^ ω^{n-j}` of a family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassReport {
    pub family: FamilyDescription,
    pub js: Vec<usize>,
    /// `masses[s][k]` is the mass of sample `s` for `js[k]`.
    pub masses: Vec<Vec<f64>>,
    /// Per `j`, labelled as family estimates rather than values.
    pub extrema: Vec<Extrema>,
    /// `∫ω^n`.
    pub volume: f64,
}

/// `∫(ω + dd^c u)^j ^ ω^{n-j}`.
pub fn mixed_mass_of<T: Real>(sp: &Spectral<T>, omega: &HermitianForm11Field<T>, u: &ScalarField<T>, j: usize) -> Result<f64> {
    let n = omega.dim();
    if j > n {
        return Err(Error::Argument(format!("j = {j} exceeds n = {n}")));
    }
    let shifted = omega.add(&ddc_with(sp, u))?;
    let mut slots = vec![&shifted; j];
    slots.extend(std::iter::repeat_n(omega, n - j));
    Ok(mixed_mass(&slots)?.to_f64_lossy())
}

/// Volume `∫ω^n`.
pub fn volume<T: Real>(omega: &HermitianForm11Field<T>) -> Result<f64> {
    Ok(mixed_mass(&vec![omega; omega.dim()])?.to_f64_lossy())
}

/// Survey of the masses of `family` for every `j` in `js`; fails if any mass is below
/// [`MASS_FLOOR`].
pub fn mass_survey<T: Real>(
    omega: &HermitianForm11Field<T>,
    family: &[ScalarField<T>],
    description: FamilyDescription,
    js: &[usize],
) -> Result<MassReport> {
    let sp = Spectral::new(omega.grid());
    let mut masses = Vec::with_capacity(family.len());
    for (s, u) in family.iter().enumerate() {
        omega.grid().same_as(u.grid())?;
        let row = js.iter().map(|&j| mixed_mass_of(&sp, omega, u, j)).collect::<Result<Vec<f64>>>()?;
        if let Some(m) = row.iter().find(|&&m| m < MASS_FLOOR) {
            return Err(Error::Argument(format!("sample {s} has negative mass {m:e}")));
        }
        masses.push(row);
    }
    let extrema = (0..js.len())
        .map(|k| Extrema::of(&masses.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect();
    Ok(MassReport { family: description, js: js.to_vec(), masses, extrema, volume: volume(omega)? })
}

/// Samples a family on `s` and surveys it.
pub fn survey_scenario<T: Real>(s: &Scenario<T>, count: usize, seed: u64, max_freq: usize, js: &[usize]) -> Result<MassReport> {
    let family: Vec<ScalarField<T>> = s.sample_psh(count, seed, max_freq)?.into_iter().map(|x| x.u).collect();
    let description = FamilyDescription { count, seed, max_freq, clip: None, smoothing: 0.0 };
    mass_survey(&s.omega, &family, description, js)
}

/// `|∫(ω + dd^c u)^n - Σ_j C(n,j) ∫ω^{n-j} ^ (dd^c u)^j|` relative to `∫(ω + dd^c u)^n`.
pub fn binomial_identity_check<T: Real>(omega: &HermitianForm11Field<T>, u: &ScalarField<T>) -> Result<f64> {
    omega.grid().same_as(u.grid())?;
    let n = omega.dim();
    let sp = Spectral::new(u.grid());
    let h = ddc_with(&sp, u);
    let direct = mixed_mass_of(&sp, omega, u, n)?;
    let mut expanded = 0.0;
    for j in 0..=n {
        let mut slots = vec![&h; j];
        slots.extend(std::iter::repeat_n(omega, n - j));
        let binom = factorial(n) / (factorial(j) * factorial(n - j));
        expanded += binom as f64 * mixed_mass(&slots)?.to_f64_lossy();
    }
    let scale = direct.abs().max(f64::MIN_POSITIVE);
    Ok((direct - expanded).abs() / scale)
}

/// Per sample `∫(2ω + dd^c φ)^j ^ ω^{n-j} - ∫(ω + dd^c φ)^ℓ ^ ω^{n-ℓ}`, relative to `∫ω^n`.
pub fn two_power_bound_check<T: Real>(
    omega: &HermitianForm11Field<T>,
    family: &[ScalarField<T>],
    l: usize,
    j: usize,
) -> Result<Vec<f64>> {
    let n = omega.dim();
    if !(l <= j && j <= n) {
        return Err(Error::Argument(format!("need 0 <= l <= j <= n, got l = {l}, j = {j}, n = {n}")));
    }
    let sp = Spectral::new(omega.grid());
    let doubled = omega.scale(T::lit(2.0));
    let vol = volume(omega)?;
    family
        .iter()
        .map(|phi| {
            let lower = mixed_mass_of(&sp, omega, phi, l)?;
            let shifted = doubled.add(&ddc_with(&sp, phi))?;
            let mut slots = vec![&shifted; j];
            slots.extend(std::iter::repeat_n(omega, n - j));
            let upper = mixed_mass(&slots)?.to_f64_lossy();
            Ok((upper - lower) / vol)
        })
        .collect()
}

/// Outcome of [`monotonicity_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonotonicityMargin {
    /// `∫(ω_1 + dd^c P_{ω_1}(v))^n`.
    pub lower: f64,
    /// `∫(ω_2 + dd^c v)^n`.
    pub upper: f64,
    pub margin: f64,
    /// `sup |P_{ω_1}(v) - v|`.
    pub envelope_gap: f64,
}

/// Compares `∫ma(ω_1, P_{ω_1}(v))` with `∫ma(ω_2, v)` for `ω_1 ⪯ ω_2` and an
/// `ω_2`-psh `v`.
pub fn monotonicity_check<T: Real>(
    omega1: &HermitianForm11Field<T>,
    omega2: &HermitianForm11Field<T>,
    v: &ScalarField<T>,
    schedule: &[f64],
    opts: &NewtonOptions,
) -> Result<MonotonicityMargin> {
    omega1.grid().same_as(omega2.grid())?;
    let tol = T::lit(1e-12);
    for i in 0..omega1.grid().len() {
        let gap = omega2.at(i).sub(&omega1.at(i))?.min_eigenvalue();
        if gap < -tol {
            return Err(Error::Argument(format!("ω_1 exceeds ω_2 at point {i} by {gap}")));
        }
    }
    let sp = Spectral::new(v.grid());
    let env = envelope_beta(omega1, v, schedule, opts)?;
    let lower = integrate(&ma_density_with(&sp, omega1, &env.phi)?).to_f64_lossy();
    let upper = integrate(&ma_density_with(&sp, omega2, v)?).to_f64_lossy();
    Ok(MonotonicityMargin { lower, upper, margin: upper - lower, envelope_gap: env.phi.sup_distance(v)?.to_f64_lossy() })
}

/// Geometric ladder `start, start/2, ...` with `rungs` entries.
pub fn eps_ladder(start: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|k| start / f64::from(1u32 << k)).collect()
}

/// One rung of an `ε`-ladder table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LadderRow {
    pub eps: f64,
    /// `∫(ω + ε ω_X)^n`.
    pub reference: f64,
    pub min_mass: f64,
    pub max_mass: f64,
    /// `max |mass - ∫ω^n|` over the family.
    pub deviation: f64,
    /// `deviation / ε`.
    pub slope: f64,
    /// `max |mass - ∫(ω + ε ω_X)^n|` over the family.
    pub spectral_deviation: f64,
    pub fallbacks: usize,
}

/// `ε`-ladder table with the limit value and the slope stability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderTable {
    pub rows: Vec<LadderRow>,
    /// `∫ω^n`.
    pub limit: f64,
    /// Largest ratio between consecutive slopes, minus one.
    pub slope_drift: f64,
    /// Largest spectral deviation relative to the reference mass.
    pub spectral_deviation: f64,
}

pub(crate) fn slope_drift(slopes: &[f64]) -> f64 {
    slopes
        .windows(2)
        .map(|w| (w[0].max(w[1]) / w[0].min(w[1])) - 1.0)
        .fold(0.0, f64::max)
}

/// For each `ε`, masses of `(ω + ε ω_X)`-psh samples against `∫ω^n`.
pub fn hat_v_closed_check<T: Real>(
    s: &Scenario<T>,
    ladder: &[f64],
    count: usize,
    seed: u64,
    max_freq: usize,
) -> Result<LadderTable> {
    if !s.kind.is_closed() {
        return Err(Error::Argument(format!("{} is not closed", s.kind.name())));
    }
    let n = s.dim();
    let sp = Spectral::new(&s.grid);
    let limit = volume(&s.omega)?;
    let mut rows = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let form = s.omega_eps(eps)?;
        let reference = volume(&form)?;
        let samples = sample_psh(&form, count, seed, max_freq, None)?;
        let mut masses = Vec::with_capacity(count + 1);
        masses.push(reference);
        for smp in &samples {
            masses.push(mixed_mass_of(&sp, &form, &smp.u, n)?);
        }
        let ext = Extrema::of(&masses);
        let deviation = masses.iter().map(|m| (m - limit).abs()).fold(0.0, f64::max);
        let spectral_deviation = masses.iter().map(|m| (m - reference).abs()).fold(0.0, f64::max);
        rows.push(LadderRow {
            eps,
            reference,
            min_mass: ext.min,
            max_mass: ext.max,
            deviation,
            slope: deviation / eps,
            spectral_deviation,
            fallbacks: samples.iter().filter(|x| x.fallback).count(),
        });
    }
    let slopes: Vec<f64> = rows.iter().map(|r| r.slope).collect();
    let spectral_deviation = rows.iter().map(|r| r.spectral_deviation / r.reference).fold(0.0, f64::max);
    Ok(LadderTable { rows, limit, slope_drift: slope_drift(&slopes), spectral_deviation })
}

/// Masses of the family clipped below at `-m`; `m = 0` gives the family `{0}`.
pub fn v_m_survey<T: Real>(
    omega: &HermitianForm11Field<T>,
    m: f64,
    family: &[ScalarField<T>],
    mut description: FamilyDescription,
) -> Result<MassReport> {
    if !(m >= 0.0) {
        return Err(Error::Argument(format!("clip level {m} must be non-negative")));
    }
    let (clipped, smoothing): (Vec<ScalarField<T>>, f64) = if m == 0.0 {
        (vec![ScalarField::constant(omega.grid(), T::zero())], 0.0)
    } else {
        let mut worst: f64 = 0.0;
        let fields = family
            .iter()
            .map(|u| {
                let (c, d) = clip_below(u, m);
                worst = worst.max(d);
                c
            })
            .collect();
        (fields, worst)
    };
    description.clip = Some(m);
    description.smoothing = smoothing;
    mass_survey(omega, &clipped, description, &[omega.dim()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::beta_schedule;
    use crate::scenarios::{ScenarioKind, ScenarioParams};

    fn scenario(kind: ScenarioKind, n: usize, res: usize) -> Scenario<f64> {
        Scenario::build(kind, ScenarioParams::new(n, res).seed(3)).unwrap()
    }

    fn family(s: &Scenario<f64>, count: usize) -> Vec<ScalarField<f64>> {
        s.sample_psh(count, 5, 2).unwrap().into_iter().map(|x| x.u).collect()
    }

    fn desc(count: usize) -> FamilyDescription {
        FamilyDescription { count, seed: 5, max_freq: 2, clip: None, smoothing: 0.0 }
    }

    #[test]
    fn flat_masses_are_constant() {
        let s = scenario(ScenarioKind::FlatKahler, 2, 32);
        let r = mass_survey(&s.omega, &family(&s, 5), desc(5), &[1, 2]).unwrap();
        assert_eq!(r.volume, 2.0);
        for row in &r.masses {
            assert!((row[1] - 2.0).abs() < 2e-8 && (row[0] - 2.0).abs() < 2e-8, "{row:?}");
        }
    }

    #[test]
    fn zero_family_gives_the_volume() {
        let s = scenario(ScenarioKind::NonclosedHermitian, 2, 32);
        let zero = vec![ScalarField::constant(&s.grid, 0.0)];
        let r = mass_survey(&s.omega, &zero, desc(1), &[0, 1, 2]).unwrap();
        for &m in &r.masses[0] {
            assert!((m - r.volume).abs() < 1e-14);
        }
    }

    #[test]
    fn nonclosed_masses_spread() {
        let s = scenario(ScenarioKind::NonclosedHermitian, 2, 32);
        let r = mass_survey(&s.omega, &family(&s, 8), desc(8), &[2]).unwrap();
        assert!(r.extrema[0].relative_spread() > 1e-4, "{:?}", r.extrema);
        assert!(r.extrema[0].min <= r.extrema[0].mean && r.extrema[0].mean <= r.extrema[0].max);
    }

    #[test]
    fn binomial_identity_holds() {
        let s = scenario(ScenarioKind::NonclosedHermitian, 2, 32);
        assert_eq!(binomial_identity_check(&s.omega, &ScalarField::constant(&s.grid, 0.0)).unwrap(), 0.0);
        for u in family(&s, 3) {
            assert!(binomial_identity_check(&s.omega, &u).unwrap() < 1e-9);
        }
        let s3 = scenario(ScenarioKind::NonclosedHermitian, 3, 16);
        for u in family(&s3, 2) {
            assert!(binomial_identity_check(&s3.omega, &u).unwrap() < 1e-8);
        }
    }

    #[test]
    fn two_power_bound_margins_are_non_negative() {
        let s = scenario(ScenarioKind::NonclosedHermitian, 2, 32);
        let fam = family(&s, 4);
        for (l, j) in [(1, 2), (2, 2), (0, 2), (1, 1)] {
            for m in two_power_bound_check(&s.omega, &fam, l, j).unwrap() {
                assert!(m >= -1e-9, "{l} {j} {m}");
            }
        }
        let zero = vec![ScalarField::constant(&s.grid, 0.0)];
        let m = two_power_bound_check(&s.omega, &zero, 2, 2).unwrap()[0];
        assert!((m - 3.0).abs() < 1e-12);
        assert!(two_power_bound_check(&s.omega, &zero, 2, 1).is_err());
    }

    #[test]
    fn monotonicity_margin_flat_against_scaled() {
        let s = scenario(ScenarioKind::FlatKahler, 1, 64);
        let bigger = s.omega.scale(1.5);
        let v = sample_psh(&bigger, 1, 2, 2, None).unwrap().remove(0).u;
        let opts = NewtonOptions::default();
        let r = monotonicity_check(&s.omega, &bigger, &v, &beta_schedule(1024.0), &opts).unwrap();
        assert!(r.margin > 0.0, "{r:?}");
        let same = monotonicity_check(&bigger, &bigger, &v, &beta_schedule(1024.0), &opts).unwrap();
        assert!(same.margin.abs() < 1e-9 && same.envelope_gap < 16.0 / 1024.0, "{same:?}");
        assert!(monotonicity_check(&bigger, &s.omega, &v, &beta_schedule(16.0), &opts).is_err());
    }

    #[test]
    fn ladder_and_slope_drift() {
        assert_eq!(eps_ladder(0.2, 3), vec![0.2, 0.1, 0.05]);
        assert!((slope_drift(&[10.0, 11.0, 12.1]) - 0.1).abs() < 1e-12);
        let s = scenario(ScenarioKind::NefDegenerate, 2, 32);
        let t = hat_v_closed_check(&s, &eps_ladder(0.2, 5), 3, 1, 2).unwrap();
        assert!((t.limit - 2.0).abs() < 1e-12);
        assert!(t.spectral_deviation < 1e-8, "{t:?}");
        assert!(t.slope_drift < 0.2, "{t:?}");
        let e = 0.2;
        assert!((t.rows[0].reference - 2.0 * (1.0 + 4.0 * e) * (1.0 + 4.0 * e)).abs() < 1e-12);
    }

    #[test]
    fn clipped_family_masses() {
        let s = scenario(ScenarioKind::FlatKahler, 2, 32);
        let fam = family(&s, 3);
        let r = v_m_survey(&s.omega, 0.0, &fam, desc(3)).unwrap();
        assert_eq!(r.masses, vec![vec![2.0]]);
        let r = v_m_survey(&s.omega, 0.02, &fam, desc(3)).unwrap();
        assert!(r.family.smoothing > 0.0);
        for row in &r.masses {
            assert!((row[0] - 2.0).abs() < 1e-8);
        }
    }
}
