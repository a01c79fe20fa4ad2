//! End-to-end checks of the command-line front end.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use pluripot::calculus::hmaf::{read, HmafField};

fn out_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pluripot-cli-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pluripot"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn scenario_list_prints_five_names() {
    let o = run(&out_dir("list"), &["scenario", "list"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = String::from_utf8(o.stdout).unwrap().lines().map(str::to_owned).collect();
    assert_eq!(names, ["flat_kahler", "guan_li_closed", "nonclosed_hermitian", "nef_degenerate", "product_collapsing"]);
}

#[test]
fn usage_errors_exit_one() {
    let dir = out_dir("usage");
    for args in [
        &["--bogus"][..],
        &["scenario", "build", "--scenario", "nope"],
        &["--threads", "0", "scenario", "list"],
        &["suite", "--only", "13"],
        &["scenario", "build", "--n", "4"],
    ] {
        let o = run(&dir, args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn contract_violation_exits_two_and_names_the_metric() {
    let dir = out_dir("violation");
    let o = run(
        &dir,
        &["morse", "check", "--scenario", "nef_degenerate", "--n", "2", "--grid", "16", "--count", "2", "--eps-ladder", "0.4,0.2,0.1"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("slope_drift"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("morse_check.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn envelope_run_writes_report_trace_and_fields() {
    let dir = out_dir("envelope");
    let args = ["envelope", "run", "--scenario", "flat_kahler", "--n", "1", "--grid", "64", "--beta-max", "1024", "--dump"];
    let o = run(&dir, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("envelope_run.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["inputs"]["beta_max"], 1024.0);
    assert!(report["tolerances"].as_object().is_some_and(|t| !t.is_empty()));
    let trace = fs::read_to_string(dir.join("envelope_trace.csv")).unwrap();
    assert!(trace.lines().count() > 2);
    let HmafField::Scalar(phi) = read(&mut fs::File::open(dir.join("envelope.hmaf")).unwrap()).unwrap() else {
        panic!("envelope dump is a scalar field");
    };
    let HmafField::Scalar(h) = read(&mut fs::File::open(dir.join("obstacle.hmaf")).unwrap()).unwrap() else {
        panic!("obstacle dump is a scalar field");
    };
    assert_eq!(phi.values().len(), 64);
    assert!(phi.values().iter().zip(h.values()).all(|(p, q)| p - q <= 16.0 / 1024.0));

    let again = out_dir("envelope-again");
    assert_eq!(code(&run(&again, &args)), 0);
    for f in ["envelope_run.json", "envelope_trace.csv", "envelope.hmaf"] {
        assert_eq!(fs::read(dir.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
    fs::remove_dir_all(dir).unwrap();
    fs::remove_dir_all(again).unwrap();
}

#[test]
fn output_directory_defaults_from_environment() {
    let dir = out_dir("env");
    let o = Command::new(env!("CARGO_BIN_EXE_pluripot"))
        .env("PLURIPOT_OUT_DIR", &dir)
        .args(["scenario", "build", "--scenario", "guan_li_closed", "--n", "2", "--grid", "16"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.join("scenario_build.json").exists());
    fs::remove_dir_all(dir).unwrap();
}
