//! Envelopes `P_ω(h) = sup{u ω-psh : u <= h}`.
//!
//! [`envelope_beta`] solves the exponential Monge-Ampère equations
//! `det(M_ω + H[φ]) = e^{β(φ - h)} det M_ω` along an increasing schedule of `β`, with
//! spectral derivatives and damped Newton steps on the density residual
//! `det(M_ω + H[φ]) / det M_ω - e^{β(φ-h)} - floor`. The floor keeps the density off
//! the contact set at `floor * det M_ω` instead of underflowing. A `β` whose Newton
//! iteration fails is approached through geometric intermediate values.
//!
//! [`envelope_obstacle_1d`] is an independent finite-difference obstacle solver for
//! `n = 1`, where the constraint `m + ¼Δu >= 0` is linear.

mod min_check;

pub use min_check::{dilate, envelope_min_check, BoxIntegrals, MinCheckOptions, MinCheckReport};

use num_complex::Complex;

use crate::algebra::HermitianMatrix;
use crate::calculus::density::{integrate, ma_density_with};
use crate::calculus::field::{HermitianForm11Field, ScalarField};
use crate::calculus::grid::GridSpec;
use crate::calculus::spectral::{ddc_with, Spectral};
use crate::error::{Error, Result};
use crate::linsolve::{gmres, SparseLu};
use crate::scalar::Real;

/// Largest grid for which the finite-difference preconditioner is factored directly.
const DIRECT_PRECONDITIONER_MAX: usize = 1 << 16;
/// Relative GMRES tolerance for Newton directions.
const LINEAR_TOL: f64 = 1e-10;
/// Intermediate `β` are inserted geometrically down to this ratio.
const MIN_SUBSTEP_RATIO: f64 = 1.05;
const MAX_SUBSTEPS: usize = 64;

/// Newton solver settings.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NewtonOptions {
    /// Sup-norm tolerance on `det(M_ω + H[φ]) / det M_ω - e^{β(φ-h)} - floor`.
    pub tol: f64,
    /// Newton iterations allowed per `β`.
    pub max_iter: usize,
    /// Smallest damping factor tried in the line search.
    pub damping_floor: f64,
    /// Floor added to `e^{β(φ-h)}`; `None` selects [`default_floor`] for the dimension.
    pub floor: Option<f64>,
    /// GMRES restart length.
    pub restart: usize,
    /// GMRES products allowed per Newton step.
    pub linear_max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 80,
            damping_floor: 1.0 / 1024.0,
            floor: None,
            restart: 40,
            linear_max_iter: 600,
        }
    }
}

/// Convergence record for one `β`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BetaStep {
    pub beta: f64,
    /// False for intermediate `β` inserted after a failed step.
    pub scheduled: bool,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    pub residual: f64,
    /// Sup-norm change of `φ` since the previous scheduled `β` (previous accepted `β` for
    /// intermediate steps).
    pub change: f64,
}

/// Output of [`envelope_beta`].
#[derive(Clone, Debug)]
pub struct EnvelopeResult<T> {
    pub phi: ScalarField<T>,
    pub beta_trace: Vec<BetaStep>,
    /// Contact threshold used for the mask and the defect.
    pub tau: f64,
    /// Floor added to the right-hand side.
    pub floor: f64,
    /// Grid points with `|φ - h| <= τ`.
    pub contact_mask: Vec<bool>,
    /// `∫_{φ < h - τ} (ω + dd^c φ)^n`.
    pub orthogonality_defect: T,
    /// `∫ (ω + dd^c φ)^n`.
    pub total_mass: T,
    /// `sup (φ - h)_+`.
    pub sup_violation: T,
}

/// Floor for `n` complex dimensions: `1e-6` for `n = 1`, `1e-4` otherwise.
///
/// For `n >= 2` the determinant is not linear along Newton directions and steps are
/// limited to about `sqrt(floor)` where `ω + dd^c φ` is nearly degenerate.
pub fn default_floor(n: usize) -> f64 {
    if n <= 1 {
        1e-6
    } else {
        1e-4
    }
}

/// Powers of four from 1 up to `beta_max`, ending exactly at `beta_max`.
pub fn beta_schedule(beta_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut b = 1.0;
    while b < beta_max {
        out.push(b);
        b *= 4.0;
    }
    out.push(beta_max.max(1.0));
    out
}

/// Distance between `φ_β` and the envelope that the scheme is trusted to, `16 / β`.
pub fn scheme_tol(beta_max: f64) -> f64 {
    16.0 / beta_max
}

/// Default contact threshold `max(10 / β, 5 scheme_tol(β))`.
pub fn default_tau(beta_max: f64) -> f64 {
    (10.0 / beta_max).max(5.0 * scheme_tol(beta_max))
}

/// Bound on the orthogonality defect as a fraction of the total mass:
/// `e^{-β τ} + 10 floor`.
pub fn defect_tol(beta_max: f64, tau: f64, floor: f64) -> f64 {
    (-beta_max * tau).exp() + 10.0 * floor
}

struct Linearization<T> {
    adj: Vec<HermitianMatrix<T>>,
    zeroth: Vec<T>,
}

struct State<T> {
    a: Vec<HermitianMatrix<T>>,
    /// `det A / det M - e^{β(φ-h)} - floor`.
    residual: Vec<T>,
    /// `e^{β(φ-h)}`.
    weight: Vec<T>,
}

impl<T: Real> State<T> {
    fn sup(&self) -> T {
        self.residual.iter().fold(T::zero(), |m, &r| m.max(r.abs()))
    }

    fn merit(&self) -> T {
        (self.residual.iter().fold(T::zero(), |m, &r| m + r * r) / T::of_usize(self.residual.len())).sqrt()
    }
}

struct Problem<'a, T: Real> {
    sp: Spectral<T>,
    omega: &'a HermitianForm11Field<T>,
    h: &'a ScalarField<T>,
    det_m: Vec<T>,
    floor: T,
}

/// Exponents are capped so that trial points far above the obstacle stay finite.
const MAX_EXPONENT: f64 = 600.0;

impl<'a, T: Real> Problem<'a, T> {
    fn evaluate(&self, phi: &ScalarField<T>, beta: T) -> Option<State<T>> {
        let hess = ddc_with(&self.sp, phi);
        let len = phi.grid().len();
        let mut st = State { a: Vec::with_capacity(len), residual: Vec::with_capacity(len), weight: Vec::with_capacity(len) };
        for i in 0..len {
            let a = self.omega.at(i).axpy(T::one(), &hess.at(i));
            if !(a.min_eigenvalue() > T::zero()) {
                return None;
            }
            let gap = phi.values()[i] - self.h.values()[i];
            let weight = (beta * gap).min(T::lit(MAX_EXPONENT)).exp();
            st.residual.push(a.det() / self.det_m[i] - weight - self.floor);
            st.weight.push(weight);
            st.a.push(a);
        }
        Some(st)
    }

    fn linearize(&self, st: &State<T>, beta: T) -> Linearization<T> {
        let adj = st.a.iter().zip(&self.det_m).map(|(a, &d)| a.adjugate().scale(T::one() / d)).collect();
        let zeroth = st.weight.iter().map(|&w| beta * w).collect();
        Linearization { adj, zeroth }
    }

    /// `tr(adj(A) H[δ]) / det M - zeroth δ`, the Jacobian of the residual.
    fn apply(&self, lin: &Linearization<T>, delta: &[T], out: &mut [T]) {
        let field = ScalarField::new_unchecked(self.h.grid().clone(), delta.to_vec());
        let hess = ddc_with(&self.sp, &field);
        let n = self.omega.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let hm = hess.at(i);
            let b = &lin.adj[i];
            let mut tr = T::zero();
            for j in 0..n {
                for k in 0..n {
                    tr = tr + (b.get(k, j) * hm.get(j, k)).re;
                }
            }
            *o = tr - lin.zeroth[i] * delta[i];
        }
    }
}

struct Solved<T> {
    phi: ScalarField<T>,
    state: State<T>,
    newton: usize,
    linear: usize,
}

impl<'a, T: Real> Problem<'a, T> {
    /// Damped Newton at one `β`, started from `phi`.
    fn newton(&self, mut phi: ScalarField<T>, b: f64, opts: &NewtonOptions) -> Result<Solved<T>> {
        let beta = T::lit(b);
        let fail = |residual: f64, iterations: usize| Error::Scheme { beta: b, residual, iterations };
        let mut st = self.evaluate(&phi, beta).ok_or_else(|| fail(f64::INFINITY, 0))?;
        let (mut newton, mut linear) = (0, 0);
        loop {
            let res = st.sup();
            if res <= T::lit(opts.tol) {
                return Ok(Solved { phi, state: st, newton, linear });
            }
            if newton >= opts.max_iter {
                return Err(fail(res.to_f64_lossy(), newton));
            }
            newton += 1;
            let lin = self.linearize(&st, beta);
            let pre = build_preconditioner(self, &lin)?;
            let rhs: Vec<T> = st.residual.iter().map(|&r| -r).collect();
            let (delta, stats) = gmres(
                &mut |x: &[T], y: &mut [T]| self.apply(&lin, x, y),
                &mut |r: &mut [T]| pre.apply(&self.sp, r),
                &rhs,
                opts.restart,
                LINEAR_TOL,
                opts.linear_max_iter,
            )
            .map_err(|_| fail(res.to_f64_lossy(), newton))?;
            linear += stats.iterations;
            let merit = st.merit();
            let mut t = 1.0;
            let mut next = None;
            while t >= opts.damping_floor {
                let step = T::lit(t);
                let cand = ScalarField::new_unchecked(
                    phi.grid().clone(),
                    phi.values().iter().zip(&delta).map(|(&p, &d)| p + step * d).collect(),
                );
                if let Some(cst) = self.evaluate(&cand, beta) {
                    if cst.merit() <= merit * T::lit(1.0 - 1e-4 * t) || cst.sup() <= T::lit(opts.tol) {
                        next = Some((cand, cst));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((cand, cst)) = next else { return Err(fail(res.to_f64_lossy(), newton)) };
            phi = cand;
            st = cst;
        }
    }
}

enum Preconditioner<T: Real> {
    Direct(Box<SparseLu>),
    Symbol(Vec<Complex<T>>),
}

fn neighbor(grid: &GridSpec, strides: &[usize], flat: usize, idx: &[usize; 6], axis: usize, step: i64) -> usize {
    let r = grid.res()[axis] as i64;
    let moved = (idx[axis] as i64 + step).rem_euclid(r) as usize;
    flat + moved * strides[axis] - idx[axis] * strides[axis]
}

/// Real second-order coefficients `C[a][b]` with `tr(B H[u]) = Σ C[a][b] ∂_a ∂_b u` over
/// the real axes `x_1, y_1, ..., x_n, y_n`.
fn real_coefficients<T: Real>(b: &HermitianMatrix<T>) -> [[f64; 6]; 6] {
    let n = b.dim();
    let mut c = [[0.0; 6]; 6];
    for j in 0..n {
        for k in 0..n {
            let z = b.get(k, j);
            let (re, im) = (0.25 * z.re.to_f64_lossy(), 0.25 * z.im.to_f64_lossy());
            c[2 * j][2 * k] += re;
            c[2 * j + 1][2 * k + 1] += re;
            c[2 * j][2 * k + 1] -= im;
            c[2 * j + 1][2 * k] += im;
        }
    }
    c
}

fn build_preconditioner<T: Real>(problem: &Problem<'_, T>, lin: &Linearization<T>) -> Result<Preconditioner<T>> {
    let grid = problem.h.grid();
    let active = grid.active_axes();
    if active.len() <= 2 && grid.len() <= DIRECT_PRECONDITIONER_MAX {
        let strides = grid.strides();
        let mut entries = Vec::with_capacity(grid.len() * 9);
        for i in 0..grid.len() {
            let idx = grid.multi_index(i);
            let mut c = real_coefficients(&lin.adj[i]);
            entries.push((i, i, -lin.zeroth[i].to_f64_lossy()));
            for (p, &a) in active.iter().enumerate() {
                for &b in &active[p + 1..] {
                    // mixed term as a second difference along the diagonal (h_a, ±h_b)
                    let (ha, hb) = (grid.spacing(a), grid.spacing(b));
                    let mixed = 0.5 * (c[a][b] + c[b][a]);
                    let sign: i64 = if mixed >= 0.0 { 1 } else { -1 };
                    let w = mixed.abs() / (ha * hb);
                    c[a][a] -= w * ha * ha;
                    c[b][b] -= w * hb * hb;
                    for step in [1i64, -1] {
                        let ja = neighbor(grid, &strides, i, &idx, a, step);
                        let jab = neighbor(grid, &strides, ja, &grid.multi_index(ja), b, sign * step);
                        entries.push((i, jab, w));
                    }
                    entries.push((i, i, -2.0 * w));
                }
            }
            for &a in &active {
                let ha = grid.spacing(a);
                let w = c[a][a] / (ha * ha);
                entries.push((i, neighbor(grid, &strides, i, &idx, a, 1), w));
                entries.push((i, neighbor(grid, &strides, i, &idx, a, -1), w));
                entries.push((i, i, -2.0 * w));
            }
        }
        return Ok(Preconditioner::Direct(Box::new(SparseLu::factor(grid.len(), &entries)?)));
    }
    let n = problem.omega.dim();
    let len = T::of_usize(grid.len());
    let mut mean_adj = HermitianMatrix::zeros(n)?;
    for b in &lin.adj {
        mean_adj = mean_adj.axpy(T::one() / len, b);
    }
    let mean_zeroth = lin.zeroth.iter().fold(T::zero(), |a, &z| a + z) / len;
    let sp = &problem.sp;
    let mut symbol = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    sp.for_each_index(|flat, idx| {
        let mut s = Complex::new(-mean_zeroth, T::zero());
        for j in 0..n {
            for k in 0..n {
                let sym = if j == k {
                    Complex::new(sp.dz_dzbar(j, idx), T::zero())
                } else {
                    sp.dz(j, idx) * sp.dzbar(k, idx)
                };
                s = s + mean_adj.get(k, j) * sym;
            }
        }
        symbol[flat] = s;
    });
    Ok(Preconditioner::Symbol(symbol))
}

impl<T: Real> Preconditioner<T> {
    fn apply(&self, sp: &Spectral<T>, r: &mut [T]) {
        match self {
            Self::Direct(lu) => {
                let mut buf: Vec<f64> = r.iter().map(|v| v.to_f64_lossy()).collect();
                lu.solve(&mut buf);
                for (ri, b) in r.iter_mut().zip(buf) {
                    *ri = T::lit(b);
                }
            }
            Self::Symbol(symbol) => {
                let mut buf: Vec<Complex<T>> = r.iter().map(|&v| Complex::new(v, T::zero())).collect();
                sp.forward(&mut buf);
                for (z, s) in buf.iter_mut().zip(symbol) {
                    *z = *z / *s;
                }
                sp.inverse(&mut buf);
                for (ri, z) in r.iter_mut().zip(buf) {
                    *ri = z.re;
                }
            }
        }
    }
}

/// Checks that `omega` is positive definite with margin, as the scheme requires.
fn require_definite<T: Real>(omega: &HermitianForm11Field<T>) -> Result<()> {
    let (lo, _) = omega.min_eigenvalue();
    let scale = T::one() + omega.sup_norm();
    if lo > T::lit(1e-6) * scale {
        Ok(())
    } else {
        Err(Error::NotPositive {
            what: "ω for the envelope scheme (pass ω + ε ω_X)".into(),
            eigenvalue: lo.to_f64_lossy(),
        })
    }
}

/// Envelope of `h` by the `β`-scheme.
///
/// `schedule` must be increasing; the contact threshold is [`default_tau`] of its last
/// entry.
pub fn envelope_beta<T: Real>(
    omega: &HermitianForm11Field<T>,
    h: &ScalarField<T>,
    schedule: &[f64],
    opts: &NewtonOptions,
) -> Result<EnvelopeResult<T>> {
    let beta_max = *schedule.last().ok_or_else(|| Error::Argument("empty β schedule".into()))?;
    envelope_beta_tau(omega, h, schedule, opts, default_tau(beta_max))
}

/// [`envelope_beta`] with an explicit contact threshold `tau`.
pub fn envelope_beta_tau<T: Real>(
    omega: &HermitianForm11Field<T>,
    h: &ScalarField<T>,
    schedule: &[f64],
    opts: &NewtonOptions,
    tau: f64,
) -> Result<EnvelopeResult<T>> {
    omega.grid().same_as(h.grid())?;
    if schedule.is_empty() || schedule.windows(2).any(|w| !(w[1] > w[0])) || !(schedule[0] > 0.0) {
        return Err(Error::Argument("β schedule must be positive and increasing".into()));
    }
    let floor = opts.floor.unwrap_or_else(|| default_floor(omega.dim()));
    if !(floor > 0.0) || !(opts.tol > 0.0) || !(opts.damping_floor > 0.0 && opts.damping_floor <= 1.0) {
        return Err(Error::Argument("Newton options out of range".into()));
    }
    if h.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("obstacle".into()));
    }
    require_definite(omega)?;
    let grid = h.grid();
    let problem = Problem {
        sp: Spectral::new(grid),
        omega,
        h,
        det_m: (0..grid.len()).map(|i| omega.at(i).det()).collect(),
        floor: T::lit(floor),
    };
    let mut phi = ScalarField::constant(grid, h.inf());
    let mut trace: Vec<BetaStep> = Vec::with_capacity(schedule.len());
    let mut accepted: Option<f64> = None;
    let mut scheduled_phi = phi.clone();
    let mut substeps = 0;
    for &target in schedule {
        let mut pending = vec![target];
        while let Some(&b) = pending.last() {
            match problem.newton(phi.clone(), b, opts) {
                Ok(solved) => {
                    pending.pop();
                    let scheduled = pending.is_empty();
                    let reference = if scheduled { &scheduled_phi } else { &phi };
                    let change = solved.phi.sup_distance(reference)?.to_f64_lossy();
                    trace.push(BetaStep {
                        beta: b,
                        scheduled,
                        newton_iterations: solved.newton,
                        linear_iterations: solved.linear,
                        residual: solved.state.sup().to_f64_lossy(),
                        change,
                    });
                    phi = solved.phi;
                    if scheduled {
                        scheduled_phi = phi.clone();
                    }
                    accepted = Some(b);
                }
                Err(err @ Error::Scheme { .. }) => {
                    let Some(lo) = accepted else { return Err(err) };
                    substeps += 1;
                    if b / lo < MIN_SUBSTEP_RATIO || substeps > MAX_SUBSTEPS {
                        return Err(err);
                    }
                    pending.push((lo * b).sqrt());
                }
                Err(err) => return Err(err),
            }
        }
    }
    let density = ma_density_with(&problem.sp, omega, &phi)?;
    let total_mass = integrate(&density);
    let orthogonality_defect = masked_mass(&density, &phi, h, tau);
    let contact_mask = contact_mask(&phi, h, tau);
    let sup_violation = phi
        .values()
        .iter()
        .zip(h.values())
        .fold(T::zero(), |m, (&p, &q)| m.max(p - q));
    Ok(EnvelopeResult { phi, beta_trace: trace, tau, floor, contact_mask, orthogonality_defect, total_mass, sup_violation })
}

/// Smallest `β` from which [`changes_decrease`] is expected to hold; below it `φ_β` is
/// still far from the envelope and the changes are not monotone.
pub const MONOTONE_FROM_BETA: f64 = 64.0;

/// Whether the sup-norm changes between consecutive scheduled `β >= from` decrease.
pub fn changes_decrease(trace: &[BetaStep], from: f64) -> bool {
    let changes: Vec<f64> = trace.iter().filter(|s| s.scheduled && s.beta >= from).map(|s| s.change).collect();
    changes.windows(2).all(|w| w[1] < w[0])
}

/// Grid points with `|φ - h| <= τ`.
pub fn contact_mask<T: Real>(phi: &ScalarField<T>, h: &ScalarField<T>, tau: f64) -> Vec<bool> {
    phi.values()
        .iter()
        .zip(h.values())
        .map(|(&p, &q)| (p - q).abs() <= T::lit(tau))
        .collect()
}

fn masked_mass<T: Real>(density: &ScalarField<T>, phi: &ScalarField<T>, h: &ScalarField<T>, tau: f64) -> T {
    let masked: Vec<T> = density
        .values()
        .iter()
        .zip(phi.values().iter().zip(h.values()))
        .map(|(&d, (&p, &q))| if p < q - T::lit(tau) { d } else { T::zero() })
        .collect();
    crate::calculus::density::mean(&masked)
}

/// `∫_{φ < h - τ} (ω + dd^c φ)^n`.
pub fn orthogonality_defect<T: Real>(
    omega: &HermitianForm11Field<T>,
    phi: &ScalarField<T>,
    h: &ScalarField<T>,
    tau: f64,
) -> Result<T> {
    omega.grid().same_as(phi.grid())?;
    phi.grid().same_as(h.grid())?;
    let sp = Spectral::new(phi.grid());
    let density = ma_density_with(&sp, omega, phi)?;
    Ok(masked_mass(&density, phi, h, tau))
}

/// Largest grid function `u <= h` with `m + ¼Δ_h u >= 0`, where `Δ_h` is the
/// second-difference Laplacian over the active axes.
///
/// Projected successive over-relaxation, started from `h` and iterated until the
/// complementarity residual `max |min(h - u, bound - u)|` is at most `1e-12`.
pub fn envelope_obstacle_1d<T: Real>(m: &ScalarField<T>, h: &ScalarField<T>) -> Result<ScalarField<T>> {
    let grid = h.grid();
    grid.same_as(m.grid())?;
    if grid.dim() != 1 {
        return Err(Error::Dimension("the obstacle oracle is for n = 1".into()));
    }
    if m.inf() < T::zero() {
        return Err(Error::Argument("density m must be non-negative".into()));
    }
    let active = grid.active_axes();
    if active.is_empty() {
        return Ok(h.clone());
    }
    let strides = grid.strides();
    let weights: Vec<f64> = active.iter().map(|&a| 1.0 / (grid.spacing(a) * grid.spacing(a))).collect();
    let diag: f64 = 2.0 * weights.iter().sum::<f64>();
    let hv: Vec<f64> = h.values().iter().map(|v| v.to_f64_lossy()).collect();
    let mv: Vec<f64> = m.values().iter().map(|v| v.to_f64_lossy()).collect();
    let neighbors: Vec<Vec<(usize, usize)>> = (0..grid.len())
        .map(|i| {
            let idx = grid.multi_index(i);
            active
                .iter()
                .map(|&a| (neighbor(grid, &strides, i, &idx, a, 1), neighbor(grid, &strides, i, &idx, a, -1)))
                .collect()
        })
        .collect();
    let bound = |u: &[f64], i: usize| -> f64 {
        let s: f64 = neighbors[i].iter().zip(&weights).map(|(&(p, q), w)| w * (u[p] + u[q])).sum();
        (s + 4.0 * mv[i]) / diag
    };
    let longest = active.iter().map(|&a| grid.res()[a]).max().unwrap_or(1) as f64;
    let relax = 2.0 / (1.0 + (std::f64::consts::PI / longest).sin());
    let mut u = hv.clone();
    const MAX_SWEEPS: usize = 1_000_000;
    for sweep in 0..MAX_SWEEPS {
        for i in 0..u.len() {
            let target = u[i] + relax * (bound(&u, i) - u[i]);
            u[i] = target.min(hv[i]);
        }
        if sweep % 16 == 15 {
            let res = (0..u.len())
                .map(|i| (hv[i] - u[i]).min(bound(&u, i) - u[i]).abs())
                .fold(0.0, f64::max);
            if res <= 1e-12 {
                return ScalarField::new(grid.clone(), u.into_iter().map(T::lit).collect());
            }
        }
    }
    Err(Error::NotConverged { solver: "projected SOR".into(), residual: f64::NAN, iterations: MAX_SWEEPS })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacles::Obstacle;
    use std::f64::consts::PI;

    fn flat(grid: &GridSpec) -> HermitianForm11Field<f64> {
        HermitianForm11Field::constant(grid, HermitianMatrix::identity(grid.dim()).unwrap()).unwrap()
    }

    fn line(res: usize) -> GridSpec {
        GridSpec::new(1, &[res, 1]).unwrap()
    }

    #[test]
    fn schedule_and_tolerances() {
        assert_eq!(beta_schedule(64.0), vec![1.0, 4.0, 16.0, 64.0]);
        assert_eq!(beta_schedule(100.0), vec![1.0, 4.0, 16.0, 64.0, 100.0]);
        assert_eq!(beta_schedule(16384.0).len(), 8);
        assert_eq!(scheme_tol(16384.0), 1.0 / 1024.0);
        assert_eq!(default_tau(16384.0), 5.0 / 1024.0);
        assert_eq!(default_tau(16.0), 5.0);
        assert!(defect_tol(16384.0, 1e-2, 1e-6) < 2e-5);
    }

    #[test]
    fn constant_obstacle_is_fixed() {
        let g = line(32);
        let h = ScalarField::constant(&g, 0.3);
        let r = envelope_beta(&flat(&g), &h, &beta_schedule(1024.0), &NewtonOptions::default()).unwrap();
        assert!(r.phi.sup_distance(&h).unwrap() < 1e-8);
        assert!(r.contact_mask.iter().all(|&c| c));
        assert!(r.orthogonality_defect.abs() < 1e-12);
    }

    #[test]
    fn admissible_obstacle_is_its_own_envelope() {
        let g = line(64);
        let h = ScalarField::from_fn(&g, |c| 0.02 * (2.0 * PI * c[0]).cos() + 0.01 * (2.0 * PI * c[1]).sin());
        let bmax = 1024.0;
        let r = envelope_beta(&flat(&g), &h, &beta_schedule(bmax), &NewtonOptions::default()).unwrap();
        assert!(r.phi.sup_distance(&h).unwrap() <= scheme_tol(bmax));
    }

    #[test]
    fn admissible_obstacle_two_dimensions() {
        let g = GridSpec::new(2, &[16, 1, 16, 1]).unwrap();
        let h = ScalarField::from_fn(&g, |c| 0.02 * ((2.0 * PI * c[0]).cos() + (2.0 * PI * (c[2] - c[0])).sin()));
        let bmax = 1024.0;
        let r = envelope_beta(&flat(&g), &h, &beta_schedule(bmax), &NewtonOptions::default()).unwrap();
        assert!(r.phi.sup_distance(&h).unwrap() <= scheme_tol(bmax));
        assert!(r.beta_trace.iter().all(|s| s.residual <= 1e-8));
    }

    #[test]
    fn crease_matches_oracle() {
        let g = line(128);
        let h = Obstacle::Crease.sample::<f64>(&g);
        let bmax = 4096.0;
        let r = envelope_beta_tau(&flat(&g), &h, &beta_schedule(bmax), &NewtonOptions::default(), 1e-2).unwrap();
        let oracle = envelope_obstacle_1d(&ScalarField::constant(&g, 1.0), &h).unwrap();
        assert!(r.phi.sup_distance(&oracle).unwrap() < 2e-3);
        assert!(r.orthogonality_defect <= defect_tol(bmax, 1e-2, r.floor) * r.total_mass);
        assert!(r.sup_violation <= scheme_tol(bmax));
        assert!(r.contact_mask.iter().any(|&c| !c));
        assert!(changes_decrease(&r.beta_trace, MONOTONE_FROM_BETA));
    }

    #[test]
    fn oracle_fixes_admissible_and_respects_constraint() {
        let g = line(64);
        let m = ScalarField::constant(&g, 1.0);
        let admissible = ScalarField::from_fn(&g, |c| 0.05 * (2.0 * PI * c[0]).cos());
        let u = envelope_obstacle_1d(&m, &admissible).unwrap();
        assert!(u.sup_distance(&admissible).unwrap() < 1e-12);
        let h = Obstacle::Ripple.sample::<f64>(&g);
        let u = envelope_obstacle_1d(&m, &h).unwrap();
        let dx = g.spacing(0);
        let v = u.values();
        for i in 0..64 {
            let lap = (v[(i + 1) % 64] - 2.0 * v[i] + v[(i + 63) % 64]) / (dx * dx);
            assert!(1.0 + 0.25 * lap >= -1e-9);
            assert!(v[i] <= h.values()[i]);
        }
    }

    #[test]
    fn rejects_degenerate_omega_and_bad_schedules() {
        let g = line(16);
        let h = ScalarField::constant(&g, 0.0);
        let zero = HermitianForm11Field::constant(&g, HermitianMatrix::zeros(1).unwrap()).unwrap();
        assert!(matches!(
            envelope_beta(&zero, &h, &[1.0], &NewtonOptions::default()),
            Err(Error::NotPositive { .. })
        ));
        let omega = flat(&g);
        for bad in [vec![], vec![4.0, 1.0], vec![0.0, 1.0]] {
            assert!(matches!(envelope_beta(&omega, &h, &bad, &NewtonOptions::default()), Err(Error::Argument(_))));
        }
        let opts = NewtonOptions { floor: Some(0.0), ..NewtonOptions::default() };
        assert!(envelope_beta(&omega, &h, &[1.0], &opts).is_err());
    }

    #[test]
    fn oracle_rejects_two_dimensions() {
        let g = GridSpec::new(2, &[16, 1, 16, 1]).unwrap();
        let h = ScalarField::constant(&g, 0.0);
        assert!(matches!(envelope_obstacle_1d(&h, &h), Err(Error::Dimension(_))));
    }
}
