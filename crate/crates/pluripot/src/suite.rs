//! The acceptance suite: twelve numbered checks at full or reduced scale.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{mixed_discriminant, popovici_pointwise, DirectionSet, HermitianMatrix};
use crate::calculus::field::{HermitianForm11Field, ScalarField};
use crate::calculus::forms::FormField;
use crate::calculus::grid::GridSpec;
use crate::calculus::spectral::Spectral;
use crate::comparison::{domination_falsification, modified_comparison_check, s_max};
use crate::envelope::{
    beta_schedule, envelope_beta, envelope_beta_tau, envelope_min_check, envelope_obstacle_1d, scheme_tol,
    MinCheckOptions, NewtonOptions,
};
use crate::error::Result;
use crate::morse::{closed_companion, morse_mass_convergence, popovici_integrated, random_metric};
use crate::obstacles::Obstacle;
use crate::report::{Contract, Report};
use crate::scenarios::{band_limited, rng_for, Scenario, ScenarioKind, ScenarioParams};
use crate::volume::{binomial_identity_check, eps_ladder, hat_v_closed_check, survey_scenario, volume};

/// Seed shared by every criterion.
pub const SUITE_SEED: u64 = 20_517;

/// Number of criteria.
pub const CRITERIA: u8 = 12;

/// Problem sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Full,
    Quick,
}

impl Scale {
    fn pick<X>(self, full: X, quick: X) -> X {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

/// Outcome of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub metrics: BTreeMap<String, Value>,
    pub contracts: Vec<Contract>,
    pub passed: bool,
}

impl CriterionResult {
    fn new(id: u8) -> Self {
        Self { id, title: title(id), metrics: BTreeMap::new(), contracts: Vec::new(), passed: true }
    }

    fn metric(&mut self, name: &str, v: impl Serialize) {
        self.metrics.insert(name.to_owned(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn contract(&mut self, c: Contract) {
        self.passed &= c.passed;
        self.contracts.push(c);
    }

    /// One-line summary naming the first failing contract.
    pub fn summary(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let detail = match self.contracts.iter().find(|c| !c.passed) {
            Some(c) => format!("{} = {:e} vs {:e}", c.metric, c.value, c.limit),
            None if self.contracts.is_empty() => "no contracts evaluated".to_owned(),
            None => format!("{} contracts", self.contracts.len()),
        };
        format!("criterion {:>2} {verdict} {}: {detail}", self.id, self.title)
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "mass constancy for closed forms",
        2 => "one-dimensional envelope against the obstacle oracle",
        3 => "envelope axioms",
        4 => "orthogonality of the envelope measure",
        5 => "collapsing example",
        6 => "modified comparison principle",
        7 => "Popovici inequalities",
        8 => "envelope of a minimum",
        9 => "epsilon-ladder limits",
        10 => "domination campaigns",
        11 => "algebra oracles",
        12 => "determinism",
        _ => "unknown",
    }
}

/// Runs criterion `id`. Errors are recorded as a failed contract.
pub fn run_criterion(id: u8, scale: Scale) -> CriterionResult {
    let mut r = CriterionResult::new(id);
    let outcome = match id {
        1 => mass_constancy(&mut r, scale),
        2 => envelope_oracle(&mut r, scale),
        3 => envelope_axioms(&mut r, scale),
        4 => orthogonality(&mut r, scale),
        5 => collapsing(&mut r, scale),
        6 => comparison(&mut r, scale),
        7 => popovici(&mut r, scale),
        8 => min_lemma(&mut r, scale),
        9 => ladder_limits(&mut r, scale),
        10 => domination(&mut r, scale),
        11 => algebra_oracles(&mut r, scale),
        12 => determinism(&mut r),
        _ => Err(crate::Error::Argument(format!("no criterion {id}"))),
    };
    if let Err(e) = outcome {
        r.metric("error", e.to_string());
        r.contract(Contract::holds("completed", false));
    }
    r
}

/// Runs the listed criteria on at most `threads` workers; results are in the order of
/// `ids`.
pub fn run_suite(ids: &[u8], scale: Scale, threads: usize) -> Vec<CriterionResult> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CriterionResult>>> = Mutex::new(vec![None; ids.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, ids.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&id) = ids.get(k) else { break };
                let r = run_criterion(id, scale);
                slots.lock().expect("no poisoned workers")[k] = Some(r);
            });
        }
    });
    slots.into_inner().expect("no poisoned workers").into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Report for a suite run.
pub fn suite_report(results: &[CriterionResult], scale: Scale) -> Result<Report> {
    let mut report = Report::new("suite", json!({ "scale": scale, "criteria": results.iter().map(|r| r.id).collect::<Vec<_>>() }))?
        .seed(SUITE_SEED);
    for r in results {
        report.metric(&format!("criterion_{:02}", r.id), r)?;
        for c in &r.contracts {
            report.tolerance(&format!("criterion_{:02}.{}", r.id, c.metric), c.limit);
            let mut c = c.clone();
            c.metric = format!("criterion_{:02}.{}", r.id, c.metric);
            report.contract(c);
        }
    }
    Ok(report)
}

fn scenario(kind: ScenarioKind, n: usize, res: usize) -> Result<Scenario<f64>> {
    Scenario::build(kind, ScenarioParams::new(n, res).seed(SUITE_SEED))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn mass_constancy(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, count) = scale.pick((64, 20), (32, 5));
    let s = scenario(ScenarioKind::GuanLiClosed, 2, res)?;
    let survey = survey_scenario(&s, count, SUITE_SEED, 2, &[1, 2])?;
    let dev = max_of(survey.masses.iter().flatten().map(|m| (m - survey.volume).abs() / survey.volume));
    r.metric("volume", survey.volume);
    r.metric("samples", count);
    r.contract(Contract::at_most("max_relative_mass_deviation", dev, 1e-6));
    Ok(())
}

fn envelope_oracle(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, beta) = scale.pick((256, 16384.0), (64, 4096.0));
    let (gap_tol, tau) = scale.pick((1e-3, 1e-2), (4e-3, 1e-2));
    let grid = GridSpec::new(1, &[res, 1])?;
    let omega = HermitianForm11Field::constant(&grid, HermitianMatrix::identity(1)?)?;
    let m = ScalarField::constant(&grid, 1.0);
    let (mut gaps, mut defects) = (Vec::new(), Vec::new());
    for ob in Obstacle::ONE_DIMENSIONAL {
        let h = ob.sample(&grid);
        let env = envelope_beta_tau(&omega, &h, &beta_schedule(beta), &NewtonOptions::default(), tau)?;
        let oracle = envelope_obstacle_1d(&m, &h)?;
        gaps.push(env.phi.sup_distance(&oracle)?);
        defects.push(env.orthogonality_defect / env.total_mass);
    }
    r.metric("gaps", &gaps);
    r.metric("defects", &defects);
    r.contract(Contract::at_most("max_gap", max_of(gaps), gap_tol));
    r.contract(Contract::at_most("max_relative_defect", max_of(defects), 1e-4));
    Ok(())
}

/// Seeded obstacle of sup-norm `0.1` with frequencies up to 2.
pub fn seeded_obstacle(grid: &GridSpec, seed: u64, index: u64) -> ScalarField<f64> {
    let (mut rng, _) = rng_for(seed, index);
    let v = band_limited(grid, &grid.active_axes(), 2, &mut rng);
    let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    ScalarField::new(grid.clone(), v.into_iter().map(|x| 0.1 * x / sup).collect()).expect("grid size")
}

fn envelope_axioms(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, beta, count) = scale.pick((64, 1024.0, 10), (32, 256.0, 2));
    let s = scenario(ScenarioKind::FlatKahler, 2, res)?;
    let schedule = beta_schedule(beta);
    let opts = NewtonOptions::default();
    let solve = |h: &ScalarField<f64>| envelope_beta(&s.omega, h, &schedule, &opts).map(|e| e.phi);
    let (mut mono, mut shift, mut idem, mut sub) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    const C: f64 = 0.37;
    for k in 0..count {
        let h = seeded_obstacle(&s.grid, SUITE_SEED, k as u64);
        let lower = h.sub(&seeded_obstacle(&s.grid, SUITE_SEED + 1, k as u64).map(|x| x.abs()))?;
        let p = solve(&h)?;
        let p_lower = solve(&lower)?;
        let p_shift = solve(&h.shift(C))?;
        let p_twice = solve(&p)?;
        mono = mono.max(p_lower.sub(&p)?.sup());
        shift = shift.max(p_shift.shift(-C).sup_distance(&p)?);
        idem = idem.max(p_twice.sup_distance(&p)?);
        sub = sub.max(p.sub(&h)?.sup());
    }
    let tol = 2.0 * scheme_tol(beta);
    r.metric("beta_max", beta);
    r.metric("obstacles", count);
    r.contract(Contract::at_most("monotonicity_violation", mono, tol));
    r.contract(Contract::at_most("shift_defect", shift, tol));
    r.contract(Contract::at_most("idempotence_defect", idem, tol));
    r.contract(Contract::at_most("sub_obstacle_violation", sub, tol));
    Ok(())
}

fn orthogonality(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, beta) = scale.pick((64, 16384.0), (32, 4096.0));
    let s = scenario(ScenarioKind::FlatKahler, 2, res)?;
    let h = Obstacle::TwoWell.sample(&s.grid);
    let env = envelope_beta(&s.omega, &h, &beta_schedule(beta), &NewtonOptions::default())?;
    r.metric("tau", env.tau);
    r.metric("total_mass", env.total_mass);
    r.contract(Contract::at_most("relative_defect", env.orthogonality_defect / env.total_mass, 1e-3));
    Ok(())
}

fn collapsing(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, beta) = scale.pick((64, COLLAPSING_BETA), (32, COLLAPSING_BETA));
    let s = scenario(ScenarioKind::ProductCollapsing, 2, res)?;
    let h = s.example_potential.clone().expect("collapsing scenarios carry their potential");
    let reference = volume(&s.omega_x)?;
    let mut masses = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let env = envelope_beta(&s.omega_eps(eps)?, &h, &beta_schedule(beta), &NewtonOptions::default())?;
        masses.push(env.total_mass);
    }
    let decreasing = masses.windows(2).all(|w| w[1] < w[0]);
    r.metric("masses", &masses);
    r.metric("reference_volume", reference);
    r.contract(Contract::holds("masses_decrease", decreasing));
    r.contract(Contract::at_most("last_mass_ratio", masses[2] / reference, 1e-2));
    Ok(())
}

/// `β_max` for the collapsing envelopes.
pub const COLLAPSING_BETA: f64 = 4096.0;

fn comparison(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, pairs, res3, pairs3) = scale.pick((32, 10, 16, 10), (16, 2, 16, 2));
    let mut closed_margin = f64::INFINITY;
    let mut checks = 0;
    for (k, kind) in (0..pairs).zip([ScenarioKind::FlatKahler, ScenarioKind::GuanLiClosed].into_iter().cycle()) {
        let s = scenario(kind, 2, res)?;
        let fam = s.sample_psh(2, SUITE_SEED + k as u64, 2)?;
        let lambda = if k % 2 == 0 { 0.25 } else { 0.5 };
        let osc = fam[0].u.sub(&fam[1].u.scale(1.0 - lambda))?;
        let osc = osc.sup() - osc.inf();
        let svals: Vec<f64> = [1e-3, 1e-2, 0.1, 0.5, 1.0].iter().map(|f| f * osc).collect();
        for rep in modified_comparison_check(&s.omega, &fam[0].u, &fam[1].u, lambda, &svals, 0.0)? {
            closed_margin = closed_margin.min(rep.margin / rep.total_mass);
            checks += 1;
        }
    }
    let s3 = scenario(ScenarioKind::NonclosedHermitian, 3, res3)?;
    let b = s3.condition_b_constant(&DirectionSet::new(3, 128, SUITE_SEED)?, 1e-12)?.b;
    let half = 0.5 * s_max(0.5, b, 3);
    let svals: Vec<f64> = (1..=4).map(|k| half * k as f64 / 4.0).collect();
    let fam = s3.sample_psh(2 * pairs3, SUITE_SEED, 2)?;
    let mut open_margin = f64::INFINITY;
    for k in 0..pairs3 {
        for rep in modified_comparison_check(&s3.omega, &fam[2 * k].u, &fam[2 * k + 1].u, 0.5, &svals, b)? {
            open_margin = open_margin.min(rep.margin / rep.total_mass);
        }
    }
    r.metric("closed_checks", checks);
    r.metric("condition_b", b);
    r.metric("s_max", 2.0 * half);
    r.contract(Contract::at_least("closed_relative_margin", closed_margin, -1e-8));
    r.contract(Contract::at_least("nonclosed_relative_margin", open_margin, -1e-6));
    Ok(())
}

/// `G G* + δ I` with entries of `G` uniform in the unit square and `δ` log-uniform in
/// `[1e-3, 1]`.
pub fn random_positive_matrix(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix<f64> {
    let g: Vec<Complex<f64>> =
        (0..n * n).map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let delta = rng.random_range(1e-3f64.ln()..0.0).exp();
    let mut rows = vec![Complex::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = Complex::new(if a == b { delta } else { 0.0 }, 0.0);
            for m in 0..n {
                s += g[a * n + m] * g[b * n + m].conj();
            }
            rows[a * n + b] = s;
        }
    }
    HermitianMatrix::from_rows(n, &rows).expect("hermitian by construction")
}

fn popovici(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (triples, fields) = scale.pick((100_000, 100), (5_000, 6));
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut worst = f64::INFINITY;
    for k in 0..triples {
        let n = 2 + k % 2;
        let t: Vec<HermitianMatrix<f64>> = (0..3).map(|_| random_positive_matrix(&mut rng, n)).collect();
        let (lhs, rhs) = popovici_pointwise(&t[0], &t[1], &t[2])?;
        worst = worst.min((lhs - rhs) / lhs.abs().max(rhs.abs()));
    }
    let mut worst_int = f64::INFINITY;
    for k in 0..fields {
        let n = 2 + k % 2;
        let grid = ScenarioKind::FlatKahler.grid(n, 16)?;
        let t: Vec<HermitianForm11Field<f64>> =
            (0..3).map(|j| random_metric(&grid, SUITE_SEED + 3 * k as u64 + j, 2)).collect::<Result<_>>()?;
        let p = popovici_integrated(&t[0], &t[1], &t[2], true)?;
        worst_int = worst_int.min((p.lhs - p.rhs) / p.rhs);
    }
    r.metric("pointwise_triples", triples);
    r.metric("integrated_triples", fields);
    r.contract(Contract::at_least("pointwise_relative_margin", worst, -1e-12));
    r.contract(Contract::at_least("integrated_relative_margin", worst_int, -1e-9));
    Ok(())
}

fn min_lemma(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, beta, pairs) = scale.pick((64, 16384.0, 20), (16, 4096.0, 2));
    let s = scenario(ScenarioKind::FlatKahler, 2, res)?;
    let fam = s.sample_psh(2 * pairs, SUITE_SEED, 2)?;
    let opts = MinCheckOptions { schedule: beta_schedule(beta), ..MinCheckOptions::default() };
    let (mut sub, mut upper, mut lower, mut excluded) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, 0.0f64);
    for k in 0..pairs {
        let rep = envelope_min_check(&s.omega, &fam[2 * k].u, &fam[2 * k + 1].u, &opts)?;
        sub = sub.min(rep.subadditivity_margin / rep.reference_mass);
        upper = upper.min(rep.upper_margin / rep.reference_mass);
        lower = lower.min(rep.lower_margin / rep.reference_mass);
        excluded = excluded.max(rep.excluded_fraction);
    }
    r.metric("max_excluded_fraction", excluded);
    r.contract(Contract::at_least("subadditivity_margin", sub, -1e-4));
    r.contract(Contract::at_least("upper_margin", upper, -1e-4));
    r.contract(Contract::at_least("lower_margin", lower, -1e-4));
    Ok(())
}

fn ladder_limits(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, count) = scale.pick((32, 8), (16, 3));
    let s = scenario(ScenarioKind::NefDegenerate, 2, res)?;
    let ladder = eps_ladder(0.1, 4);
    let hat = hat_v_closed_check(&s, &ladder, count, SUITE_SEED, 2)?;
    let morse = morse_mass_convergence(&s, &closed_companion(&s.grid, 0.8)?, &ladder, count, SUITE_SEED, 2)?;
    r.metric("hat_v_slopes", hat.rows.iter().map(|x| x.slope).collect::<Vec<_>>());
    r.metric("morse_mass_slopes", morse.rows.iter().map(|x| x.mass_deviation / x.eps).collect::<Vec<_>>());
    r.contract(Contract::at_most("hat_v_slope_drift", hat.slope_drift, 0.2));
    r.contract(Contract::at_most("hat_v_spectral_deviation", hat.spectral_deviation, 1e-8));
    r.contract(Contract::at_most("morse_mass_slope_drift", morse.mass_slope_drift, 0.2));
    r.contract(Contract::at_most("morse_mixed_slope_drift", morse.mixed_slope_drift, 0.2));
    r.contract(Contract::at_most("morse_spectral_deviation", morse.spectral_deviation, 1e-8));
    Ok(())
}

fn domination(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let (res, trials) = scale.pick((32, 500), (16, 50));
    let mut total = 0;
    for kind in ScenarioKind::ALL {
        let s = scenario(kind, 2, res)?;
        let omega = if s.is_definite(1e-6) { s.omega.clone() } else { s.omega_eps(0.05)? };
        let rep = domination_falsification(&omega, trials, 0.5, 1.0, SUITE_SEED, 2)?;
        r.metric(kind.name(), rep);
        total += rep.violations();
    }
    r.contract(Contract::at_most("violations", total as f64, 0.0));
    Ok(())
}

/// `D(A_1, ..., A_n)` by inclusion-exclusion over subsets of the slots.
pub fn inclusion_exclusion_discriminant(mats: &[HermitianMatrix<f64>]) -> f64 {
    let n = mats.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut sum = HermitianMatrix::zeros(mats[0].dim()).expect("valid dimension");
        for (i, m) in mats.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum = sum.add(m).expect("same dimension");
            }
        }
        let sign = if (n - mask.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * sum.det();
    }
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    total / fact
}

fn algebra_oracles(r: &mut CriterionResult, scale: Scale) -> Result<()> {
    let triples = scale.pick(1000, 200);
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut worst = 0.0f64;
    for k in 0..triples {
        let n = 1 + k % 3;
        let mats: Vec<HermitianMatrix<f64>> = (0..n)
            .map(|_| {
                let a = random_positive_matrix(&mut rng, n);
                let b = random_positive_matrix(&mut rng, n);
                a.sub(&b).expect("same dimension")
            })
            .collect();
        let refs: Vec<&HermitianMatrix<f64>> = mats.iter().collect();
        let d = mixed_discriminant(&refs)?;
        let scale_ = mats.iter().map(|m| m.norm()).product::<f64>();
        worst = worst.max((d - inclusion_exclusion_discriminant(&mats)).abs() / scale_);
    }
    let mut d2 = 0.0f64;
    for n in [1, 2, 3] {
        let grid = ScenarioKind::FlatKahler.grid(n, 16)?;
        let sp = Spectral::new(&grid);
        let (mut rng, _) = rng_for(SUITE_SEED, n as u64);
        let u = ScalarField::new(grid.clone(), band_limited(&grid, &grid.active_axes(), 3, &mut rng))?;
        let theta = random_metric(&grid, SUITE_SEED + n as u64, 2)?;
        for f in [FormField::from_scalar(&u), FormField::from_hermitian(&theta)] {
            if f.degree() + 2 > 2 * n {
                continue;
            }
            let df = f.exterior_d(&sp)?;
            let ddf = df.exterior_d(&sp)?;
            d2 = d2.max(ddf.sup_norm() / df.sup_norm().max(1.0));
        }
    }
    let mut binomial = 0.0f64;
    for (kind, n, res) in [(ScenarioKind::GuanLiClosed, 2, 32), (ScenarioKind::NonclosedHermitian, 2, 32), (ScenarioKind::NonclosedHermitian, 3, 16)] {
        let s = scenario(kind, n, res)?;
        for smp in s.sample_psh(scale.pick(5, 2), SUITE_SEED, 2)? {
            binomial = binomial.max(binomial_identity_check(&s.omega, &smp.u)?);
        }
    }
    r.metric("triples", triples);
    r.contract(Contract::at_most("mixed_discriminant_relative_error", worst, 1e-12));
    r.contract(Contract::at_most("d_squared_defect", d2, 1e-9));
    r.contract(Contract::at_most("binomial_defect", binomial, 1e-9));
    Ok(())
}

fn determinism(r: &mut CriterionResult) -> Result<()> {
    let run = || -> Result<String> {
        let results = [run_criterion(1, Scale::Quick), run_criterion(11, Scale::Quick)];
        suite_report(&results, Scale::Quick)?.to_json()
    };
    let (a, b) = (run()?, run()?);
    r.metric("bytes", a.len());
    r.contract(Contract::holds("identical_reports", a == b));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusion_exclusion_on_diagonals() {
        let a = HermitianMatrix::diag(&[1.0, 2.0]).unwrap();
        let b = HermitianMatrix::diag(&[3.0, 5.0]).unwrap();
        // D = (a1 b2 + a2 b1) / 2
        assert!((inclusion_exclusion_discriminant(&[a, b]) - 5.5).abs() < 1e-14);
        assert!((inclusion_exclusion_discriminant(&[a, a]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn random_positive_matrices_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            for _ in 0..50 {
                assert!(random_positive_matrix(&mut rng, n).min_eigenvalue() > 0.0);
            }
        }
    }

    #[test]
    fn quick_algebra_and_determinism() {
        let r = run_suite(&[11, 12], Scale::Quick, 2);
        assert_eq!(r.iter().map(|x| x.id).collect::<Vec<_>>(), vec![11, 12]);
        for x in &r {
            assert!(x.passed, "{}", x.summary());
        }
    }

    #[test]
    fn unknown_criterion_fails_cleanly() {
        let r = run_criterion(13, Scale::Quick);
        assert!(!r.passed && r.metrics.contains_key("error"));
    }
}
