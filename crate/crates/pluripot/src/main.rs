//! Command-line front end. Exit status: 0 when every contract holds, 1 on usage errors,
//! 2 on contract violations or numerical failures.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use pluripot::algebra::DirectionSet;
use pluripot::calculus::field::{HermitianForm11Field, ScalarField};
use pluripot::calculus::forms::closedness;
use pluripot::calculus::hmaf;
use pluripot::calculus::spectral::Spectral;
use pluripot::comparison::{domination_falsification, modified_comparison_check, s_max};
use pluripot::envelope::{
    beta_schedule, changes_decrease, default_tau, defect_tol, envelope_beta_tau, scheme_tol, NewtonOptions,
    MONOTONE_FROM_BETA,
};
use pluripot::morse::{
    closed_companion, is_gauduchon, lamari_pairing_scan, morse_mass_convergence, popovici_integrated, random_metric,
    FamilySpec, GauduchonFamily, GAUDUCHON_TOL,
};
use pluripot::obstacles::Obstacle;
use pluripot::report::{num, Contract, Report, Table};
use pluripot::scenarios::{Scenario, ScenarioKind, ScenarioParams};
use pluripot::suite::{run_suite, suite_report, Scale, CRITERIA};
use pluripot::volume::survey_scenario;
use pluripot::Error;

#[derive(Parser, Debug)]
#[command(name = "pluripot", version, about = "Monge-Ampère experiments on flat complex tori")]
struct Cli {
    /// Output directory for reports, tables and field dumps.
    #[arg(long, global = true, env = "PLURIPOT_OUT_DIR", default_value = "pluripot-out")]
    out: PathBuf,
    /// Worker threads for the suite.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..=256))]
    threads: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List or build scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Envelope computations.
    #[command(subcommand)]
    Envelope(EnvelopeCmd),
    /// Mixed Monge-Ampère masses.
    #[command(subcommand)]
    Mass(MassCmd),
    /// Comparison and domination checks.
    #[command(subcommand)]
    Compare(CompareCmd),
    /// Gauduchon family, pairing scan, Popovici and ε-ladder checks.
    #[command(subcommand)]
    Morse(MorseCmd),
    /// The acceptance suite.
    Suite(SuiteArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScenarioArgs {
    /// Scenario name (see `scenario list`).
    #[arg(long, default_value = "flat_kahler")]
    scenario: String,
    /// Complex dimension.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    n: u8,
    /// Grid resolution per active axis: 1 or a power of two from 16.
    #[arg(long, default_value_t = 32)]
    grid: usize,
    /// Scenario amplitude; the scenario default when omitted.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ScenarioArgs {
    fn build(&self) -> pluripot::Result<Scenario<f64>> {
        let kind = ScenarioKind::from_name(&self.scenario)?;
        let mut p = ScenarioParams::new(self.n as usize, self.grid).seed(self.seed);
        if let Some(a) = self.amplitude {
            p = p.amplitude(a);
        }
        Scenario::build(kind, p)
    }
}

#[derive(Subcommand, Debug)]
enum ScenarioCmd {
    /// Print the scenario names.
    List,
    /// Build and verify a scenario.
    Build {
        #[command(flatten)]
        s: ScenarioArgs,
        /// Write `ω` as an HMAF file.
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Subcommand, Debug)]
enum EnvelopeCmd {
    /// Envelope of an obstacle by the β-scheme.
    Run(EnvelopeArgs),
}

#[derive(Args, Debug, Serialize)]
struct EnvelopeArgs {
    #[command(flatten)]
    s: ScenarioArgs,
    /// Builtin obstacle, or `example` for the potential of a collapsing scenario.
    #[arg(long, default_value = "two_well")]
    obstacle: String,
    #[arg(long, default_value_t = 16384.0)]
    beta_max: f64,
    /// Contact threshold; defaults to max(10/β, 5·16/β).
    #[arg(long)]
    tau: Option<f64>,
    /// Run on `ω + ε ω_X`.
    #[arg(long)]
    eps: Option<f64>,
    /// Write the obstacle and the envelope as HMAF files.
    #[arg(long)]
    dump: bool,
}

#[derive(Subcommand, Debug)]
enum MassCmd {
    /// Masses `∫(ω + dd^c u)^j ^ ω^{n-j}` over a sampled family.
    Survey(MassArgs),
}

#[derive(Args, Debug, Serialize)]
struct MassArgs {
    #[command(flatten)]
    s: ScenarioArgs,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 2)]
    max_freq: usize,
    /// Degrees `j`; all of `1..=n` when omitted.
    #[arg(long, value_delimiter = ',')]
    j: Vec<usize>,
}

#[derive(Subcommand, Debug)]
enum CompareCmd {
    /// Modified comparison principle and domination campaign.
    Check(CompareArgs),
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    #[command(flatten)]
    s: ScenarioArgs,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Explicit s values; a sweep up to the admissible range when omitted.
    #[arg(long, value_delimiter = ',')]
    svals: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    /// Domination trials.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Run on `ω + ε ω_X` (required for degenerate scenarios).
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum MorseCmd {
    /// Gauduchon family, pairing scan, Popovici and mass convergence.
    Check(MorseArgs),
}

#[derive(Args, Debug, Serialize)]
struct MorseArgs {
    #[command(flatten)]
    s: ScenarioArgs,
    #[arg(long, default_value_t = 8)]
    family_size: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    eps_ladder: Vec<f64>,
    /// Rescale θ_1 so that θ_1^n = θ_2 ^ θ_3^{n-1} before the Popovici check.
    #[arg(long)]
    constructed: bool,
    #[arg(long, default_value_t = 4)]
    count: usize,
    #[arg(long, default_value_t = 2)]
    max_freq: usize,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Reduced resolutions and sample counts.
    #[arg(long)]
    quick: bool,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=CRITERIA as i64))]
    only: Vec<u8>,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Contract(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) | Error::Dimension(_) | Error::Grid(_) | Error::Build { .. } | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Contract(metrics)) => {
            for m in metrics {
                eprintln!("contract violated: {m}");
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let out = cli.out.as_path();
    let report = match &cli.command {
        Command::Scenario(ScenarioCmd::List) => {
            for k in ScenarioKind::ALL {
                println!("{}", k.name());
            }
            return Ok(());
        }
        Command::Scenario(ScenarioCmd::Build { s, dump }) => scenario_build(s, *dump, out)?,
        Command::Envelope(EnvelopeCmd::Run(a)) => envelope_run(a, out)?,
        Command::Mass(MassCmd::Survey(a)) => mass_survey(a, out)?,
        Command::Compare(CompareCmd::Check(a)) => compare_check(a, out)?,
        Command::Morse(MorseCmd::Check(a)) => morse_check(a, out)?,
        Command::Suite(a) => suite(a, cli.threads as usize, out)?,
    };
    let path = report.write(out, &report.op.replace(' ', "_"))?;
    println!("{}", path.display());
    let failures: Vec<String> =
        report.failures().iter().map(|c| format!("{} = {:e} (limit {:e})", c.metric, c.value, c.limit)).collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Contract(failures))
    }
}

fn dump_scalar(dir: &Path, name: &str, u: &ScalarField<f64>) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let mut w = BufWriter::new(File::create(dir.join(format!("{name}.hmaf"))).map_err(Error::from)?);
    hmaf::write_scalar(&mut w, u)?;
    Ok(())
}

fn scenario_build(a: &ScenarioArgs, dump: bool, out: &Path) -> Result<Report, Failure> {
    let s = a.build()?;
    let mut r = Report::new("scenario build", a)?.scenario(s.kind.name()).seed(a.seed);
    r.metric("amplitude", s.amplitude)?;
    r.metric("grid", &s.grid)?;
    r.metric("min_eigenvalue", s.omega.min_eigenvalue().0)?;
    r.metric("volume", pluripot::volume::volume(&s.omega)?)?;
    if s.dim() >= 2 {
        let c = closedness(&Spectral::new(&s.grid), &s.omega)?;
        r.metric("d_norm", c.d_norm)?;
        r.metric("ddc_norm", c.ddc_norm)?;
        r.metric("d_wedge_dc_norm", c.d_wedge_dc_norm)?;
        if s.is_definite(1e-9) {
            let b = s.condition_b_constant(&DirectionSet::new(s.dim(), 128, a.seed)?, 1e-12)?;
            r.metric("condition_b", b)?;
        }
    }
    if dump {
        std::fs::create_dir_all(out).map_err(Error::from)?;
        let mut w = BufWriter::new(File::create(out.join("omega.hmaf")).map_err(Error::from)?);
        hmaf::write_herm11(&mut w, &s.omega)?;
    }
    Ok(r)
}

fn envelope_run(a: &EnvelopeArgs, out: &Path) -> Result<Report, Failure> {
    if !(a.beta_max >= 1.0) {
        return Err(Failure::Usage(format!("--beta-max {} must be at least 1", a.beta_max)));
    }
    let s = a.s.build()?;
    let omega = match a.eps {
        Some(e) if e > 0.0 => s.omega_eps(e)?,
        Some(e) => return Err(Failure::Usage(format!("--eps {e} must be positive"))),
        None => s.omega.clone(),
    };
    let h = if a.obstacle == "example" {
        s.example_potential.clone().ok_or_else(|| Failure::Usage(format!("{} has no example potential", s.kind.name())))?
    } else {
        Obstacle::from_name(&a.obstacle)?.sample(&s.grid)
    };
    let tau = a.tau.unwrap_or_else(|| default_tau(a.beta_max));
    let env = envelope_beta_tau(&omega, &h, &beta_schedule(a.beta_max), &NewtonOptions::default(), tau)?;
    let mut r = Report::new("envelope run", a)?.scenario(s.kind.name()).seed(a.s.seed);
    let rel_defect = env.orthogonality_defect / env.total_mass;
    r.metric("total_mass", env.total_mass)?;
    r.metric("orthogonality_defect", env.orthogonality_defect)?;
    r.metric("sup_violation", env.sup_violation)?;
    r.metric("contact_fraction", env.contact_mask.iter().filter(|&&c| c).count() as f64 / s.grid.len() as f64)?;
    r.metric("beta_trace", &env.beta_trace)?;
    let dtol = defect_tol(a.beta_max, tau, env.floor);
    r.tolerance("tau", tau);
    r.contract(Contract::at_most("relative_orthogonality_defect", rel_defect, dtol));
    r.contract(Contract::at_most("sup_violation", env.sup_violation, scheme_tol(a.beta_max)));
    if a.beta_max > MONOTONE_FROM_BETA {
        r.contract(Contract::holds("changes_decrease", changes_decrease(&env.beta_trace, MONOTONE_FROM_BETA)));
    }
    let mut t = Table::new(&["beta", "scheduled", "newton_iterations", "linear_iterations", "residual", "change"]);
    for b in &env.beta_trace {
        t.push(vec![
            num(b.beta),
            b.scheduled.to_string(),
            b.newton_iterations.to_string(),
            b.linear_iterations.to_string(),
            num(b.residual),
            num(b.change),
        ]);
    }
    t.write(out, "envelope_trace")?;
    if a.dump {
        dump_scalar(out, "obstacle", &h)?;
        dump_scalar(out, "envelope", &env.phi)?;
    }
    Ok(r)
}

fn mass_survey(a: &MassArgs, out: &Path) -> Result<Report, Failure> {
    let s = a.s.build()?;
    let js: Vec<usize> = if a.j.is_empty() { (1..=s.dim()).collect() } else { a.j.clone() };
    let survey = survey_scenario(&s, a.count, a.s.seed, a.max_freq, &js)?;
    let mut r = Report::new("mass survey", a)?.scenario(s.kind.name()).seed(a.s.seed);
    r.metric("volume", survey.volume)?;
    r.metric("extrema", &survey.extrema)?;
    if s.kind.is_closed() {
        let dev = survey.masses.iter().flatten().map(|m| (m - survey.volume).abs() / survey.volume).fold(0.0, f64::max);
        r.contract(Contract::at_most("max_relative_mass_deviation", dev, 1e-6));
    }
    let mut t = Table::new(&["sample", "j", "mass"]);
    for (i, row) in survey.masses.iter().enumerate() {
        for (j, m) in js.iter().zip(row) {
            t.push(vec![i.to_string(), j.to_string(), num(*m)]);
        }
    }
    t.write(out, "mass_survey")?;
    Ok(r)
}

fn compare_check(a: &CompareArgs, out: &Path) -> Result<Report, Failure> {
    let s = a.s.build()?;
    let omega = match a.eps {
        Some(e) if e > 0.0 => s.omega_eps(e)?,
        Some(e) => return Err(Failure::Usage(format!("--eps {e} must be positive"))),
        None if s.is_definite(1e-9) => s.omega.clone(),
        None => return Err(Failure::Usage(format!("{} is degenerate; pass --eps", s.kind.name()))),
    };
    let n = s.dim();
    let b = if s.kind.is_closed() && a.eps.is_none() || n == 1 {
        0.0
    } else {
        pluripot::scenarios::condition_b_constant(&omega, &DirectionSet::new(n, 128, a.s.seed)?, 1e-12)?.b
    };
    let fam = pluripot::scenarios::sample_psh(&omega, 2 * a.pairs, a.s.seed, 2, None)?;
    let tol = if b == 0.0 { 1e-8 } else { 1e-6 };
    let mut r = Report::new("compare check", a)?.scenario(s.kind.name()).seed(a.s.seed);
    r.metric("condition_b", b)?;
    let limit = s_max(a.lambda, b, n);
    r.metric("s_max", if limit.is_finite() { json!(limit) } else { json!("inf") })?;
    let mut t = Table::new(&["pair", "s", "cells", "lhs", "rhs", "margin", "strict_margin"]);
    let mut worst = f64::INFINITY;
    let mut vacuous = 0;
    for k in 0..a.pairs {
        let (u, v) = (&fam[2 * k].u, &fam[2 * k + 1].u);
        let svals = if a.svals.is_empty() {
            let top = if limit.is_finite() {
                0.5 * limit
            } else {
                let d = u.sub(&v.scale(1.0 - a.lambda))?;
                d.sup() - d.inf()
            };
            (1..=8).map(|i| top * i as f64 / 8.0).collect()
        } else {
            a.svals.clone()
        };
        for rep in modified_comparison_check(&omega, u, v, a.lambda, &svals, b)? {
            worst = worst.min(rep.margin / rep.total_mass);
            vacuous += rep.vacuous as usize;
            t.push(vec![k.to_string(), num(rep.s), rep.cells.to_string(), num(rep.lhs), num(rep.rhs), num(rep.margin), num(rep.strict_margin)]);
        }
    }
    t.write(out, "compare")?;
    let dom = domination_falsification(&omega, a.trials, 0.5, 1.0, a.s.seed, 2)?;
    r.metric("vacuous_checks", vacuous)?;
    r.metric("domination", dom)?;
    r.contract(Contract::at_least("relative_margin", worst, -tol));
    r.contract(Contract::at_most("domination_violations", dom.violations() as f64, 0.0));
    Ok(r)
}

fn morse_check(a: &MorseArgs, out: &Path) -> Result<Report, Failure> {
    let s = a.s.build()?;
    if a.family_size == 0 {
        return Err(Failure::Usage("--family-size must be positive".into()));
    }
    let fam = GauduchonFamily::build(&s.grid, FamilySpec { size: a.family_size, seed: a.s.seed, max_freq: a.max_freq })?;
    let mut r = Report::new("morse check", a)?.scenario(s.kind.name()).seed(a.s.seed);
    let defects: Vec<f64> = fam.members.iter().map(|m| is_gauduchon(m, GAUDUCHON_TOL).map(|x| x.1)).collect::<Result<_, _>>()?;
    r.metric("gauduchon_defects", &defects)?;
    r.contract(Contract::at_most("max_gauduchon_defect", defects.iter().copied().fold(0.0, f64::max), GAUDUCHON_TOL));
    let scan = lamari_pairing_scan(&s.omega, &s.omega_x, &fam)?;
    r.metric("pairing_scan", &scan)?;
    let t: Vec<HermitianForm11Field<f64>> = (0..3).map(|k| random_metric(&s.grid, a.s.seed.wrapping_add(k), a.max_freq)).collect::<Result<_, _>>()?;
    let pop = popovici_integrated(&t[0], &t[1], &t[2], a.constructed)?;
    r.metric("popovici", pop)?;
    r.contract(Contract::at_least("popovici_relative_margin", (pop.lhs - pop.rhs) / pop.rhs, -1e-9));
    if s.kind.is_closed() && s.kind != ScenarioKind::GuanLiClosed {
        let half = s.omega_x.scale(0.5).axpy(-1.0, &s.omega)?;
        if half.min_eigenvalue().0 >= -1e-12 {
            let table = morse_mass_convergence(&s, &closed_companion(&s.grid, 0.8)?, &a.eps_ladder, a.count, a.s.seed, a.max_freq)?;
            let mut csv = Table::new(&["eps", "mass_deviation", "mixed_deviation", "spectral_deviation", "fallbacks"]);
            for row in &table.rows {
                csv.push(vec![num(row.eps), num(row.mass_deviation), num(row.mixed_deviation), num(row.spectral_deviation), row.fallbacks.to_string()]);
            }
            csv.write(out, "morse_ladder")?;
            r.contract(Contract::at_most("spectral_deviation", table.spectral_deviation, 1e-8));
            if a.eps_ladder.len() >= 2 {
                r.contract(Contract::at_most("mass_slope_drift", table.mass_slope_drift, 0.2));
                r.contract(Contract::at_most("mixed_slope_drift", table.mixed_slope_drift, 0.2));
            }
            r.metric("ladder", &table)?;
        }
    }
    Ok(r)
}

fn suite(a: &SuiteArgs, threads: usize, out: &Path) -> Result<Report, Failure> {
    let scale = if a.quick { Scale::Quick } else { Scale::Full };
    let ids: Vec<u8> = if a.only.is_empty() { (1..=CRITERIA).collect() } else { a.only.clone() };
    let results = run_suite(&ids, scale, threads);
    let mut t = Table::new(&["criterion", "title", "passed", "metric", "value", "limit"]);
    for res in &results {
        println!("{}", res.summary());
        for c in &res.contracts {
            t.push(vec![res.id.to_string(), res.title.to_owned(), c.passed.to_string(), c.metric.clone(), num(c.value), num(c.limit)]);
        }
    }
    t.write(out, "suite")?;
    Ok(suite_report(&results, scale)?)
}
