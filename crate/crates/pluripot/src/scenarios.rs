//! Named test configurations `(ω, ω_X)` on the torus, samplers for ω-psh functions and
//! the condition-(B) constant.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use num_complex::Complex;

use crate::algebra::directions::DirectionSet;
use crate::algebra::{HermitianMatrix, PointForm};
use crate::calculus::density::PSH_TOL;
use crate::calculus::field::{HermitianForm11Field, ScalarField};
use crate::calculus::forms::{closedness, FormField};
use crate::calculus::grid::GridSpec;
use crate::calculus::spectral::{ddc_with, Spectral};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scenario families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `ω = ω_X = identity`.
    FlatKahler,
    /// `ω = I + dd^c ρ`: closed, so `dd^c ω = 0` and `dω = 0`.
    GuanLiClosed,
    /// `ω = I + a S(x)` for a band-limited Hermitian field `S` with `|S| <= 1`.
    NonclosedHermitian,
    /// `ω = diag(1 - a cos 2πx_j)`, closed and semi-positive, degenerate when `a = 1`;
    /// `ω_X = 4 I`.
    NefDegenerate,
    /// `ω = ρ(y)(ω_Y + ω_Z)` on a product of two elliptic curves, with `ρ` supported
    /// where `ω_Y + dd^c u < 0` for a fixed potential `u` on the first factor.
    ProductCollapsing,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        Self::FlatKahler,
        Self::GuanLiClosed,
        Self::NonclosedHermitian,
        Self::NefDegenerate,
        Self::ProductCollapsing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::FlatKahler => "flat_kahler",
            Self::GuanLiClosed => "guan_li_closed",
            Self::NonclosedHermitian => "nonclosed_hermitian",
            Self::NefDegenerate => "nef_degenerate",
            Self::ProductCollapsing => "product_collapsing",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Argument(format!("unknown scenario {name:?}")))
    }

    /// Default amplitude and its admissible range.
    pub fn amplitude_range(self) -> (f64, f64, f64) {
        match self {
            Self::FlatKahler => (0.0, 0.0, 0.0),
            Self::GuanLiClosed => (0.5, 0.0, 0.9),
            Self::NonclosedHermitian => (0.3, 0.0, 0.5),
            Self::NefDegenerate => (1.0, 1e-3, 1.0),
            Self::ProductCollapsing => (COLLAPSING_AMPLITUDE, collapsing_min_amplitude(), 0.25),
        }
    }

    /// Whether `ω` is closed (`dω = 0`), so that mixed masses are cohomological.
    pub fn is_closed(self) -> bool {
        matches!(self, Self::FlatKahler | Self::GuanLiClosed | Self::NefDegenerate)
    }

    /// Grid used for resolution `res` in dimension `n`.
    ///
    /// Most scenarios depend on `x_1, ..., x_n` only and collapse the `y` axes; the
    /// collapsing example lives on the first factor and keeps `x_1, y_1`.
    pub fn grid(self, n: usize, res: usize) -> Result<GridSpec> {
        match self {
            Self::ProductCollapsing => {
                if n != 2 {
                    return Err(build_error("n", format!("{} requires n = 2, got {n}", self.name())));
                }
                GridSpec::new(2, &[res, res, 1, 1])
            }
            _ => {
                let mut axes = Vec::with_capacity(2 * n);
                for _ in 0..n {
                    axes.extend([res, 1]);
                }
                GridSpec::new(n, &axes)
            }
        }
    }
}

/// Amplitude of the first-factor potential `u = a (cos 2πx_1 + cos 2πy_1)`.
pub const COLLAPSING_AMPLITUDE: f64 = 0.07;
/// Half-width of the cutoff support along `x_1` and `y_1`.
pub const COLLAPSING_HALF_WIDTH: f64 = 0.1;

/// Smallest amplitude for which `1 + ¼Δu < 0` on the whole cutoff support.
fn collapsing_min_amplitude() -> f64 {
    1.0 / (2.0 * PI * PI * (2.0 * PI * COLLAPSING_HALF_WIDTH).cos())
}

fn build_error(param: &str, reason: String) -> Error {
    Error::Build { param: param.into(), reason }
}

/// Construction parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub n: usize,
    pub res: usize,
    /// Defaults to the first entry of [`ScenarioKind::amplitude_range`].
    pub amplitude: Option<f64>,
    /// Largest frequency of random perturbations.
    pub freq: usize,
    pub seed: u64,
}

impl ScenarioParams {
    pub fn new(n: usize, res: usize) -> Self {
        Self { n, res, amplitude: None, freq: 2, seed: 0 }
    }

    pub fn amplitude(mut self, a: f64) -> Self {
        self.amplitude = Some(a);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Axis-aligned box `[centre - half_width, centre + half_width]` on selected axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    /// `(axis, centre, half_width)`.
    pub sides: Vec<(usize, f64, f64)>,
}

impl SupportBox {
    /// Whether real coordinates `c` lie in the closed box (periodic distance).
    pub fn contains(&self, c: &[f64; 6]) -> bool {
        self.sides.iter().all(|&(a, centre, w)| periodic_distance(c[a], centre) <= w)
    }
}

fn periodic_distance(x: f64, c: f64) -> f64 {
    let d = (x - c).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// A built scenario. Fields are immutable after construction.
#[derive(Clone, Debug)]
pub struct Scenario<T: Real> {
    pub kind: ScenarioKind,
    pub params: ScenarioParams,
    pub amplitude: f64,
    pub grid: GridSpec,
    pub omega: HermitianForm11Field<T>,
    pub omega_x: HermitianForm11Field<T>,
    /// Closed support of `ω` when it is compactly supported.
    pub support: Option<SupportBox>,
    /// Potential on the first factor whose pullback is the collapsing obstacle.
    pub example_potential: Option<ScalarField<T>>,
}

/// Deterministic generator for perturbation `index` of a run seeded by `seed`.
pub(crate) fn rng_for(seed: u64, index: u64) -> (ChaCha8Rng, u64) {
    let derived = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    (ChaCha8Rng::seed_from_u64(derived), derived)
}

/// Random real trigonometric polynomial `Σ a_k cos(2π k·x + θ_k)` over the frequency
/// vectors `k ≠ 0` with `|k_a| <= max_freq` on `axes`, coefficients decaying like
/// `1 / (1 + |k|²)`.
pub fn band_limited(grid: &GridSpec, axes: &[usize], max_freq: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = max_freq as i64;
    let mut modes: Vec<(Vec<i64>, f64, f64)> = Vec::new();
    let count = (2 * m + 1).pow(axes.len() as u32);
    for code in 0..count {
        let mut rest = code;
        let mut k = Vec::with_capacity(axes.len());
        for _ in axes {
            k.push(rest % (2 * m + 1) - m);
            rest /= 2 * m + 1;
        }
        // keep one of each pair ±k
        match k.iter().find(|&&v| v != 0) {
            Some(&first) if first > 0 => {}
            _ => continue,
        }
        let k2: i64 = k.iter().map(|v| v * v).sum();
        let amp = rng.random_range(-1.0..1.0) / (1.0 + k2 as f64);
        let phase = rng.random_range(0.0..2.0 * PI);
        modes.push((k, amp, phase));
    }
    (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            modes
                .iter()
                .map(|(k, a, p)| {
                    let arg: f64 = k.iter().zip(axes).map(|(&kv, &ax)| kv as f64 * c[ax]).sum();
                    a * (2.0 * PI * arg + p).cos()
                })
                .sum()
        })
        .collect()
}

fn largest_modulus<T: Real>(f: &HermitianForm11Field<T>) -> f64 {
    (0..f.grid().len())
        .map(|i| {
            let e = f.at(i).eigenvalues();
            let n = f.dim();
            e[0].abs().max(e[n - 1].abs()).to_f64_lossy()
        })
        .fold(0.0, f64::max)
}

fn bump(d: f64, w: f64) -> f64 {
    if d >= w {
        0.0
    } else {
        (0.5 * PI * d / w).cos().powi(8)
    }
}

impl<T: Real> Scenario<T> {
    /// Builds and verifies a scenario.
    pub fn build(kind: ScenarioKind, params: ScenarioParams) -> Result<Self> {
        let (default_amp, lo, hi) = kind.amplitude_range();
        let amplitude = params.amplitude.unwrap_or(default_amp);
        if !(lo..=hi).contains(&amplitude) {
            return Err(build_error(
                "amplitude",
                format!("{amplitude} outside [{lo}, {hi}] for {}", kind.name()),
            ));
        }
        if params.freq == 0 && matches!(kind, ScenarioKind::GuanLiClosed | ScenarioKind::NonclosedHermitian) {
            return Err(build_error("freq", "must be at least 1".into()));
        }
        let grid = kind.grid(params.n, params.res)?;
        if params.freq > 0 && 8 * params.freq > grid.min_active_res() {
            return Err(build_error("freq", format!("{} exceeds res / 8", params.freq)));
        }
        let n = params.n;
        let identity = HermitianMatrix::identity(n)?;
        let (mut rng, _) = rng_for(params.seed, 0);
        let active = grid.active_axes();
        let mut support = None;
        let mut example_potential = None;
        let (omega, omega_x) = match kind {
            ScenarioKind::FlatKahler => {
                let id = HermitianForm11Field::constant(&grid, identity)?;
                (id.clone(), id)
            }
            ScenarioKind::GuanLiClosed => {
                let rho: ScalarField<T> =
                    ScalarField::new(grid.clone(), band_limited(&grid, &active, params.freq, &mut rng).into_iter().map(T::lit).collect())?;
                let sp = Spectral::new(&grid);
                let h = ddc_with(&sp, &rho);
                let peak = largest_modulus(&h);
                let c = if peak > 0.0 { amplitude / peak } else { 0.0 };
                let id = HermitianForm11Field::constant(&grid, identity)?;
                (id.axpy(T::lit(c), &h)?, id)
            }
            ScenarioKind::NonclosedHermitian => {
                let len = grid.len();
                let mut diag = Vec::with_capacity(n);
                for _ in 0..n {
                    diag.push(band_limited(&grid, &active, params.freq, &mut rng));
                }
                let mut upper = Vec::new();
                for _ in 0..n * (n - 1) / 2 {
                    let re = band_limited(&grid, &active, params.freq, &mut rng);
                    let im = band_limited(&grid, &active, params.freq, &mut rng);
                    upper.push((re, im));
                }
                let s = HermitianForm11Field::from_components(
                    &grid,
                    diag.iter().map(|d| d.iter().map(|&v| T::lit(v)).collect()).collect(),
                    upper
                        .iter()
                        .map(|(re, im)| (0..len).map(|i| Complex::new(T::lit(re[i]), T::lit(im[i]))).collect())
                        .collect(),
                )?;
                let peak = largest_modulus(&s);
                let c = if peak > 0.0 { amplitude / peak } else { 0.0 };
                let id = HermitianForm11Field::constant(&grid, identity)?;
                (id.axpy(T::lit(c), &s)?, id)
            }
            ScenarioKind::NefDegenerate => {
                let omega = HermitianForm11Field::from_fn(&grid, |c| {
                    let d: Vec<T> = (0..n).map(|j| T::lit(1.0 - amplitude * (2.0 * PI * c[2 * j]).cos())).collect();
                    HermitianMatrix::diag(&d).expect("diagonal of valid dimension")
                })?;
                (omega, HermitianForm11Field::constant(&grid, identity.scale(T::lit(4.0)))?)
            }
            ScenarioKind::ProductCollapsing => {
                let w = COLLAPSING_HALF_WIDTH;
                let boxed = SupportBox { sides: vec![(0, 0.0, w), (1, 0.0, w)] };
                let u: ScalarField<T> = ScalarField::from_fn(&grid, |c| {
                    amplitude * ((2.0 * PI * c[0]).cos() + (2.0 * PI * c[1]).cos())
                });
                let sp = Spectral::new(&grid);
                let hu = ddc_with(&sp, &u);
                let omega = HermitianForm11Field::from_fn(&grid, |c| {
                    let r = bump(periodic_distance(c[0], 0.0), w) * bump(periodic_distance(c[1], 0.0), w);
                    identity.scale(T::lit(r))
                })?;
                for i in 0..grid.len() {
                    let c = grid.coords(i);
                    if boxed.contains(&c) && (T::one() + hu.at(i).diag_entry(0)) >= T::zero() {
                        return Err(build_error(
                            "amplitude",
                            format!("1 + dd^c u is not negative on the cutoff support at point {i}"),
                        ));
                    }
                    if !boxed.contains(&c) && omega.at(i).max_abs() != T::zero() {
                        return Err(build_error("support", format!("ω nonzero outside the support at point {i}")));
                    }
                }
                support = Some(boxed);
                example_potential = Some(u);
                (omega, HermitianForm11Field::constant(&grid, identity)?)
            }
        };
        let s = Self { kind, params, amplitude, grid, omega, omega_x, support, example_potential };
        s.verify()?;
        Ok(s)
    }

    /// Re-checks the scenario invariants.
    pub fn verify(&self) -> Result<()> {
        let (lx, _) = self.omega_x.min_eigenvalue();
        if !(lx > T::zero()) {
            return Err(build_error("omega_x", format!("smallest eigenvalue {lx}")));
        }
        let (lo, at) = self.omega.min_eigenvalue();
        let tol = T::lit(PSH_TOL) * (T::one() + self.omega.sup_norm());
        if lo < -tol {
            return Err(build_error("amplitude", format!("ω has eigenvalue {lo} at point {at}")));
        }
        let sp = Spectral::new(&self.grid);
        match self.kind {
            ScenarioKind::GuanLiClosed | ScenarioKind::NefDegenerate | ScenarioKind::FlatKahler if self.dim() >= 2 => {
                let c = closedness(&sp, &self.omega)?;
                let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3)) * (T::one() + self.omega.sup_norm());
                if c.d_norm > tol || c.ddc_norm > tol {
                    return Err(build_error("freq", format!("closed form has |dω| = {}", c.d_norm)));
                }
            }
            ScenarioKind::NonclosedHermitian if self.amplitude > 0.0 && lo < T::lit(1.0 - self.amplitude) - tol => {
                return Err(build_error("amplitude", format!("smallest eigenvalue {lo}")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// `ω + ε ω_X`.
    pub fn omega_eps(&self, eps: f64) -> Result<HermitianForm11Field<T>> {
        self.omega.axpy(T::lit(eps), &self.omega_x)
    }

    /// Whether `ω` is positive definite with margin `delta` everywhere.
    pub fn is_definite(&self, delta: f64) -> bool {
        self.omega.min_eigenvalue().0 > T::lit(delta)
    }

    /// ω-psh samples for this scenario's `ω`.
    pub fn sample_psh(&self, count: usize, seed: u64, max_freq: usize) -> Result<Vec<PshSample<T>>> {
        sample_psh(&self.omega, count, seed, max_freq, self.example_potential.as_ref())
    }

    /// Smallest `B` with `B ω² ± dd^c ω` and `B ω³ ± dω ^ d^c ω` weakly positive on the
    /// grid, tested against `directions`.
    pub fn condition_b_constant(&self, directions: &DirectionSet<T>, tol: f64) -> Result<ConditionB> {
        condition_b_constant(&self.omega, directions, tol)
    }
}

/// Which generator produced a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Band-limited field in all active variables.
    Band,
    /// Band-limited field in one variable only.
    Pullback { axis: usize },
    /// The scenario's example potential.
    Example,
    /// No generator had a positive cone scale; the sample is `0`.
    Constant,
}

/// An ω-psh function `u = s f - sup(s f)` with `s = 0.9 t*`.
#[derive(Clone, Debug)]
pub struct PshSample<T> {
    pub u: ScalarField<T>,
    /// Largest `t` with `M_ω + t H[f] ⪰ 0`; infinite when `H[f] ⪰ 0`.
    pub t_star: f64,
    /// Scale applied to the generator.
    pub scale: f64,
    /// Subtracted to make `sup u = 0`.
    pub offset: f64,
    pub seed: u64,
    pub generator: Generator,
    /// Whether the band generator was rejected.
    pub fallback: bool,
}

/// Safety factor applied to the cone scale.
pub const SAFETY: f64 = 0.9;

/// `sup {t >= 0 : M_ω + t H ⪰ 0 at every point}`.
///
/// Points where `M_ω` is definite use the generalized eigenvalue `λ_min(L⁻¹ H L⁻*)`;
/// degenerate points are resolved by bisection on the smallest eigenvalue.
pub fn cone_scale<T: Real>(omega: &HermitianForm11Field<T>, hessian: &HermitianForm11Field<T>) -> f64 {
    let mut t = f64::INFINITY;
    let mut degenerate = Vec::new();
    for i in 0..omega.grid().len() {
        let m = omega.at(i);
        let h = hessian.at(i);
        let definite = m.min_eigenvalue() > T::lit(1e-9) * (T::one() + m.norm());
        match m.cholesky().filter(|_| definite) {
            Some(l) => {
                let g = h.congruence_inv(&l).min_eigenvalue().to_f64_lossy();
                if g < 0.0 {
                    t = t.min(-1.0 / g);
                }
            }
            None => degenerate.push(i),
        }
    }
    let ok = |i: usize, s: f64| {
        let a = omega.at(i).axpy(T::lit(s), &hessian.at(i));
        a.min_eigenvalue() >= -T::lit(PSH_TOL) * (T::one() + a.norm())
    };
    for i in degenerate {
        let hi = t.min(1e6);
        if ok(i, hi) {
            continue;
        }
        let (mut lo, mut up) = (0.0, hi);
        for _ in 0..80 {
            let mid = 0.5 * (lo + up);
            if ok(i, mid) {
                lo = mid;
            } else {
                up = mid;
            }
        }
        t = lo;
    }
    t
}

/// Relative size below which a cone scale counts as zero.
const ZERO_SCALE: f64 = 1e-9;

/// `count` ω-psh samples from seeded band-limited generators with frequencies up to
/// `max_freq`. When `example` is given it is the first generator.
///
/// A generator whose cone scale vanishes is replaced by one-variable generators, then by
/// the constant `0`; both are flagged as fallbacks.
pub fn sample_psh<T: Real>(
    omega: &HermitianForm11Field<T>,
    count: usize,
    seed: u64,
    max_freq: usize,
    example: Option<&ScalarField<T>>,
) -> Result<Vec<PshSample<T>>> {
    let grid = omega.grid().clone();
    if max_freq == 0 || 8 * max_freq > grid.min_active_res() {
        return Err(Error::Argument(format!("max_freq {max_freq} must be in 1..=res/8")));
    }
    let sp = Spectral::new(&grid);
    let active = grid.active_axes();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (mut rng, derived) = rng_for(seed, k as u64 + 1);
        let mut candidates: Vec<(Generator, Vec<f64>)> = Vec::new();
        match (k, example) {
            (0, Some(e)) => candidates.push((Generator::Example, e.values().iter().map(|v| v.to_f64_lossy()).collect())),
            _ => candidates.push((Generator::Band, band_limited(&grid, &active, max_freq, &mut rng))),
        }
        for &axis in &active {
            for _ in 0..4 {
                candidates.push((Generator::Pullback { axis }, band_limited(&grid, &[axis], max_freq, &mut rng)));
            }
        }
        let mut chosen = None;
        for (idx, (generator, f)) in candidates.into_iter().enumerate() {
            let field = ScalarField::new(grid.clone(), f.iter().map(|&v| T::lit(v)).collect())?;
            let h = ddc_with(&sp, &field);
            let t = cone_scale(omega, &h);
            let curvature = h.sup_norm().to_f64_lossy();
            if t.is_infinite() || t * curvature > ZERO_SCALE {
                chosen = Some((generator, f, t, idx > 0));
                break;
            }
        }
        let sample = match chosen {
            Some((generator, f, t, fallback)) => {
                let scale = if t.is_finite() { SAFETY * t } else { 1.0 };
                let scaled: Vec<f64> = f.iter().map(|v| scale * v).collect();
                let offset = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let u = ScalarField::new(grid.clone(), scaled.iter().map(|v| T::lit(v - offset)).collect())?;
                let u = if t.is_infinite() { ScalarField::constant(&grid, T::zero()) } else { u };
                PshSample { u, t_star: t, scale, offset, seed: derived, generator, fallback }
            }
            None => PshSample {
                u: ScalarField::constant(&grid, T::zero()),
                t_star: 0.0,
                scale: 0.0,
                offset: 0.0,
                seed: derived,
                generator: Generator::Constant,
                fallback: true,
            },
        };
        let check = is_omega_psh_with(&sp, omega, &sample.u, PSH_TOL)?;
        if !check.ok {
            return Err(Error::Cone { point: check.worst_point, eigenvalue: check.worst_eigenvalue });
        }
        out.push(sample);
    }
    Ok(out)
}

/// Outcome of a pointwise cone check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PshCheck {
    pub ok: bool,
    pub worst_eigenvalue: f64,
    pub worst_point: usize,
}

/// Whether `M_ω + H[u] ⪰ -tol (1 + |M_ω + H[u]|)` at every grid point.
pub fn is_omega_psh<T: Real>(omega: &HermitianForm11Field<T>, u: &ScalarField<T>, tol: f64) -> Result<PshCheck> {
    omega.grid().same_as(u.grid())?;
    is_omega_psh_with(&Spectral::new(u.grid()), omega, u, tol)
}

pub(crate) fn is_omega_psh_with<T: Real>(
    sp: &Spectral<T>,
    omega: &HermitianForm11Field<T>,
    u: &ScalarField<T>,
    tol: f64,
) -> Result<PshCheck> {
    let h = ddc_with(sp, u);
    let mut check = PshCheck { ok: true, worst_eigenvalue: f64::INFINITY, worst_point: 0 };
    for i in 0..u.grid().len() {
        let a = omega.at(i).axpy(T::one(), &h.at(i));
        let e = a.min_eigenvalue();
        if e.to_f64_lossy() < check.worst_eigenvalue {
            check.worst_eigenvalue = e.to_f64_lossy();
            check.worst_point = i;
        }
        if e < -T::lit(tol) * (T::one() + a.norm()) {
            check.ok = false;
        }
    }
    Ok(check)
}

/// Worst ratio found for one inequality of condition (B).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    /// Smallest `B` making this inequality hold on the sample (`+∞` when the positive
    /// side vanishes where the other does not).
    pub b: f64,
    pub point: usize,
    /// Direction index, for pairings below top degree.
    pub direction: Option<usize>,
}

impl Certificate {
    fn zero() -> Self {
        Self { b: 0.0, point: 0, direction: None }
    }

    fn offer(&mut self, numerator: f64, denominator: f64, tol: f64, point: usize, direction: Option<usize>) {
        let value = numerator.abs();
        if value <= tol {
            return;
        }
        let b = if denominator > tol { value / denominator } else { f64::INFINITY };
        if b > self.b {
            *self = Self { b, point, direction };
        }
    }
}

/// Condition-(B) constant with one certificate per inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionB {
    pub b: f64,
    /// `-B ω² <= dd^c ω <= B ω²`.
    pub ddc: Certificate,
    /// `-B ω³ <= dω ^ d^c ω <= B ω³`.
    pub d_wedge_dc: Certificate,
}

/// See [`Scenario::condition_b_constant`]. Pairings whose magnitude is at most `tol` are
/// treated as zero.
pub fn condition_b_constant<T: Real>(
    omega: &HermitianForm11Field<T>,
    directions: &DirectionSet<T>,
    tol: f64,
) -> Result<ConditionB> {
    let grid = omega.grid();
    let n = grid.dim();
    let mut ddc_cert = Certificate::zero();
    let mut d_cert = Certificate::zero();
    if n >= 2 && omega.constant_value().is_none() {
        if directions.dim() != n {
            return Err(Error::Dimension(format!("directions in dimension {} for n = {n}", directions.dim())));
        }
        let sp = Spectral::new(grid);
        let w = FormField::from_hermitian(omega);
        let ddc_omega = w.ddc(&sp)?;
        let d_wedge = if n >= 3 { Some(w.exterior_d(&sp)?.wedge(&w.d_c(&sp)?)?) } else { None };
        for i in 0..grid.len() {
            let wp = PointForm::from_hermitian(&omega.at(i));
            let w2 = wp.wedge(&wp)?;
            let theta = ddc_omega.point(i, 2, 2)?;
            if n == 2 {
                let num = theta.top_density()?.re.to_f64_lossy();
                let den = w2.top_density()?.re.to_f64_lossy();
                ddc_cert.offer(num, den, tol, i, None);
            } else {
                let q_theta = pairing_matrix(&theta)?;
                let q_w2 = pairing_matrix(&w2)?;
                for (k, g) in directions.iter().enumerate() {
                    let g: Vec<Complex<f64>> = g.iter().map(|z| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())).collect();
                    ddc_cert.offer(quadratic(&q_theta, &g), quadratic(&q_w2, &g), tol, i, Some(k));
                }
                if let Some(dw) = &d_wedge {
                    let num = dw.point(i, 3, 3)?.top_density()?.re.to_f64_lossy();
                    let den = w2.wedge(&wp)?.top_density()?.re.to_f64_lossy();
                    d_cert.offer(num, den, tol, i, None);
                }
            }
        }
    }
    Ok(ConditionB { b: ddc_cert.b.max(d_cert.b), ddc: ddc_cert, d_wedge_dc: d_cert })
}

/// Coefficients `c_jk` with `Θ ^ i γ ^ γ̄ = Σ γ_j conj(γ_k) c_jk` for a (2,2)-form `Θ`
/// in dimension 3.
fn pairing_matrix<T: Real>(theta: &PointForm<T>) -> Result<[[Complex<f64>; 3]; 3]> {
    let zero = Complex::new(T::zero(), T::zero());
    let pair = |rows: &[Complex<T>]| -> Result<f64> {
        let m = HermitianMatrix::from_rows(3, rows)?;
        Ok(theta.wedge(&PointForm::from_hermitian(&m))?.top_density()?.re.to_f64_lossy())
    };
    let mut c = [[Complex::new(0.0, 0.0); 3]; 3];
    for j in 0..3 {
        let mut rows = [zero; 9];
        rows[4 * j] = Complex::new(T::one(), T::zero());
        c[j][j] = Complex::new(pair(&rows)?, 0.0);
        for k in j + 1..3 {
            let mut sym = [zero; 9];
            sym[3 * j + k] = Complex::new(T::one(), T::zero());
            sym[3 * k + j] = Complex::new(T::one(), T::zero());
            let mut skew = [zero; 9];
            skew[3 * j + k] = Complex::new(T::zero(), T::one());
            skew[3 * k + j] = Complex::new(T::zero(), -T::one());
            let (a, b) = (pair(&sym)?, pair(&skew)?);
            c[j][k] = Complex::new(0.5 * a, -0.5 * b);
            c[k][j] = Complex::new(0.5 * a, 0.5 * b);
        }
    }
    Ok(c)
}

fn quadratic(c: &[[Complex<f64>; 3]; 3], g: &[Complex<f64>]) -> f64 {
    let mut s = Complex::new(0.0, 0.0);
    for j in 0..3 {
        for k in 0..3 {
            s += g[j] * g[k].conj() * c[j][k];
        }
    }
    s.re
}

/// `LSE_k(u, -m) = k log(e^{u/k} + e^{-m/k})` with `k` spanning two grid cells of the
/// steepest slope of `u`; returns the clipped field and the smoothing perturbation
/// `k log 2`.
///
/// `ω + dd^c LSE_k(u, c)` is a convex combination of `ω + dd^c u` and `ω` plus a
/// positive gradient term, so the result stays ω-psh.
pub fn clip_below<T: Real>(u: &ScalarField<T>, m: f64) -> (ScalarField<T>, f64) {
    let grid = u.grid();
    let strides = grid.strides();
    let res = grid.res();
    let mut slope: f64 = 0.0;
    for i in 0..grid.len() {
        let idx = grid.multi_index(i);
        for (a, &r) in res.iter().enumerate() {
            if r == 1 {
                continue;
            }
            let j = if idx[a] + 1 == r { i + strides[a] - r * strides[a] } else { i + strides[a] };
            let d = (u.values()[j] - u.values()[i]).to_f64_lossy().abs() / grid.spacing(a);
            slope = slope.max(d);
        }
    }
    let h = grid.active_axes().iter().map(|&a| grid.spacing(a)).fold(0.0, f64::max);
    let k = (2.0 * h * slope).max(f64::MIN_POSITIVE);
    let clipped = u.map(|v| {
        let x = v.to_f64_lossy();
        let hi = x.max(-m);
        T::lit(hi + k * (-(x + m).abs() / k).exp().ln_1p())
    });
    (clipped, k * std::f64::consts::LN_2)
}
