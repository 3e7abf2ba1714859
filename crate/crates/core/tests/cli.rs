//! End-to-end tests of the `mamass` binary.

use std::process::{Command, Output};

use serde_json::Value;

const MONOMIAL: &str = "monomial_ideal(m=[[1,0],[0,2]],w=[1,1])";
const POLY: &str = "smooth_poly(terms=[(1,[1,0],[1,0]),(1,[0,1],[0,1]),(0.25,[2,1],[0,1]),(0.25,[0,1],[2,1])])";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mamass")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn analyze_radial_in_dimension_two() {
    let out = run(&["analyze", "--function", "radial(profile=log,c=1)", "--dim", "2", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let tau = r["tau"]["extrapolated"].as_f64().unwrap();
    assert!((tau - 1.0).abs() <= 1e-6, "τ = {tau}");
    assert_eq!(r["passed"], Value::Bool(true));
}

#[test]
fn analyze_monomial_in_dimension_one() {
    let out = run(&["analyze", "--function", MONOMIAL, "--dim", "1"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let get = |k: &str| r[k]["extrapolated"].as_f64().unwrap();
    assert!((get("lambda") - 2.0).abs() <= 2e-2);
    assert!((get("tau") - 2.0).abs() <= 2e-2);
    assert!((r["nu"]["by_I"].as_f64().unwrap() - 1.0).abs() <= 1e-2);
}

#[test]
fn analyze_writes_csv_svg_and_json_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (j, c, s) = (path("r.json"), path("t.csv"), path("p.svg"));
    let out = run(&["analyze", "--function", MONOMIAL, "--json", &j, "--csv", &c, "--svg", &s]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    let rows = report["tau"]["t_grid"].as_array().unwrap().len();
    let csv = std::fs::read_to_string(&c).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,boundary_mass,stderr,I_over_pin,E_0,E_1"));
    assert_eq!(lines.count(), rows);
    let svg = std::fs::read_to_string(&s).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn analyze_rejects_non_invariant_functions() {
    assert_eq!(code(&run(&["analyze", "--function", POLY])), 2);
}

#[test]
fn bad_configuration_is_a_usage_error() {
    assert_eq!(code(&run(&["analyze", "--function", MONOMIAL, "--t-grid", "-10,-5"])), 2);
    assert_eq!(code(&run(&["analyze", "--function", MONOMIAL, "--t-grid", "-5"])), 2);
    assert_eq!(code(&run(&["analyze", "--function", "radial(c=1)"])), 2);
    assert_eq!(code(&run(&["analyze", "--function", MONOMIAL, "--fd-step", "0.5"])), 2);
    assert_eq!(code(&run(&["nonsense"])), 2);
}

#[test]
fn constants_table() {
    let out = run(&["constants", "--max-n", "4"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let c: Vec<&str> = r["dimensional"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(c, ["2", "7", "24", "96"]);
    assert_eq!(code(&run(&["constants", "--max-n", "0"])), 2);
}

#[test]
fn identities_pass_and_detect_faults() {
    assert_eq!(code(&run(&["identities", "--max-n", "8"])), 0);
    assert_eq!(code(&run(&["identities", "--max-n", "1"])), 0);
    assert_eq!(code(&run(&["identities", "--max-n", "3", "--inject-fault"])), 1);
}

#[test]
fn verify_suites() {
    let out = run(&["verify", "--suite", "mass-oracles", "--function", "loglinear(A=[[1,1],[0,1]])", "--dim", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(code(&run(&["verify", "--suite", "frames", "--function", POLY])), 0);
    assert_eq!(code(&run(&["verify", "--suite", "frames", "--function", POLY, "--inject-fault"])), 1);
    assert_eq!(code(&run(&["verify", "--suite", "contact", "--dim", "2"])), 0);
    assert_eq!(code(&run(&["verify", "--suite", "contact", "--inject-fault"])), 1);
    assert_eq!(code(&run(&["verify", "--suite", "regularize", "--dim", "2"])), 2);
    assert_eq!(code(&run(&["verify", "--suite", "positivity", "--inject-fault"])), 2);
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["analyze", "--function", MONOMIAL, "--seed", "3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
