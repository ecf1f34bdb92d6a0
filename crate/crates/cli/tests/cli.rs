use std::path::{Path, PathBuf};
use std::process::Command;

use ipsinv::models::MODEL_NAMES;
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn ipsinv(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_ipsinv")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn emit(dir: &TempDir, name: &str, params: &[&str]) -> PathBuf {
    let path = dir.path().join(format!("{name}.json"));
    let mut args = vec!["model", name];
    args.extend_from_slice(params);
    args.extend_from_slice(&["--emit", path.to_str().unwrap()]);
    let r = ipsinv(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    path
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ising_check_markov_prints_zero_certificate() {
    let dir = TempDir::new().unwrap();
    let f = emit(&dir, "stochastic_ising", &[]);
    let r = ipsinv(&["check-markov", s(&f), "--exact", "--report", "json"]);
    assert_eq!(r.code, 0);
    let j = r.json();
    assert_eq!(j["verdict"], "invariant");
    let cert = j["certificate"].as_array().unwrap();
    assert_eq!(cert.len(), 16);
    assert!(cert.iter().all(|e| e["value"] == "0"));
    assert!(j["timings"]["total"].is_number());
}

#[test]
fn voter_absorbing_excludes_markov_laws() {
    let dir = TempDir::new().unwrap();
    let f = emit(&dir, "voter", &[]);
    let r = ipsinv(&["absorbing", s(&f), "--n-min", "3", "--n-max", "8"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("no full-support Markov law (m ≤ 5 certified; pattern persists)"), "{}", r.stdout);
}

#[test]
fn three_colour_tasep_fails_with_witness() {
    let dir = TempDir::new().unwrap();
    let f = emit(&dir, "tasep3", &["r10=1", "r20=1", "r21=1"]);
    let r = ipsinv(&["check-product", s(&f), "--report", "json"]);
    assert_eq!(r.code, 1);
    let j = r.json();
    assert_eq!(j["verdict"], "not-invariant");
    assert_eq!(j["witness"]["word"], serde_json::json!([1, 2, 0]));
    let good = emit(&dir, "tasep3", &["r10=1", "r20=2", "r21=1"]);
    assert_eq!(ipsinv(&["check-product", s(&good)]).code, 0);
}

#[test]
fn rerunning_on_a_reemitted_file_reproduces_the_report() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, &[&str], &str); 3] = [
        ("tasep3", &["r10=1", "r20=1", "r21=1"], "check-product"),
        ("stochastic_ising", &[], "check-markov"),
        ("square_pair_flip", &[], "check-2d"),
    ];
    for (name, params, cmd) in cases {
        let f = emit(&dir, name, params);
        let first = ipsinv(&[cmd, s(&f), "--report", "json"]);
        let parsed: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
        let copy = write(&dir, "copy.json", &serde_json::to_string(&parsed).unwrap());
        let second = ipsinv(&[cmd, s(&copy), "--report", "json"]);
        assert_eq!(first.code, second.code, "{name}");
        let (a, b) = (first.json(), second.json());
        for key in ["verdict", "criterion", "witness", "certificate", "residuals", "words_enumerated"] {
            assert_eq!(a[key], b[key], "{name}: {key}");
        }
    }
}

#[test]
fn emitting_twice_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = std::fs::read_to_string(emit(&dir, "hmc_example", &[])).unwrap();
    let b = std::fs::read_to_string(emit(&dir, "hmc_example", &[])).unwrap();
    assert_eq!(a, b);
    let j: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(j["schema"], 1);
}

#[test]
fn every_catalog_model_holds() {
    for name in MODEL_NAMES {
        let r = ipsinv(&["model", name, "--report", "json"]);
        assert_eq!(r.code, 0, "{name}: {}", r.stderr);
        let json_start = r.stdout.rfind("\n{\n  \"command\"").map(|i| i + 1).unwrap_or(0);
        let j: Value = serde_json::from_str(&r.stdout[json_start..]).unwrap();
        assert_eq!(j["verdict"], "holds", "{name}: {:?}", j["notes"]);
    }
}

#[test]
fn exact_and_float_agree_on_cycles() {
    let dir = TempDir::new().unwrap();
    let f = emit(&dir, "tasep", &["p=1/4"]);
    for n in ["3", "6"] {
        let e = ipsinv(&["verify-cycle", s(&f), "--n", n, "--report", "json"]).json();
        let x = ipsinv(&["verify-cycle", s(&f), "--n", n, "--float", "--report", "json"]).json();
        assert_eq!(e["verdict"], x["verdict"]);
        assert_eq!(e["residuals"][0]["value"], "0");
        assert!(x["residuals"][0]["value"].as_str().unwrap().parse::<f64>().unwrap().abs() <= 1e-12);
    }
}

#[test]
fn segment_uses_file_boundaries() {
    let dir = TempDir::new().unwrap();
    let body = r#"{
        "schema": 1, "kappa": 2, "range": 2,
        "rates": [{"from": [1, 0], "to": [0, 1], "rate": "1"}],
        "kernel": {"memory": 1, "rows": [["1/2", "1/2"], ["1/2", "1/2"]]},
        "beta": {"left": [{"from": [0], "to": [1], "rate": "1/2"}],
                 "right": [{"from": [1], "to": [0], "rate": "1/2"}]}
    }"#;
    let f = write(&dir, "seg.json", body);
    let r = ipsinv(&["segment", s(&f), "--n", "5", "--report", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    assert_eq!(j["verdict"], "invariant");
    assert_eq!(j["residuals"][0]["value"], "0");
    let c = ipsinv(&["segment", s(&f), "--n", "5", "--construct-boundaries"]);
    assert_eq!(c.code, 0, "{}", c.stderr);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let unknown = write(&dir, "u.json", r#"{"schema": 1, "kappa": 2, "range": 2, "rates": [], "extra": 0}"#);
    let r = ipsinv(&["check-markov", s(&unknown)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("unknown field `extra`"), "{}", r.stderr);

    let version = write(&dir, "v.json", r#"{"schema": 2, "kappa": 2, "range": 2, "rates": []}"#);
    assert_eq!(ipsinv(&["check-markov", s(&version)]).code, 2);

    let rate = write(&dir, "r.json", r#"{"schema": 1, "kappa": 2, "range": 2, "rho": ["1/2", "1/2"],
        "rates": [{"from": [1, 0], "to": [0, 1], "rate": "1/0"}]}"#);
    let r = ipsinv(&["check-product", s(&rate)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("rates[0].rate"), "{}", r.stderr);

    assert_eq!(ipsinv(&["check-markov", "/nonexistent/model.json"]).code, 2);
    assert_eq!(ipsinv(&["model", "no_such_model"]).code, 2);
    assert_eq!(ipsinv(&["model", "tasep", "p"]).code, 2);
    assert_eq!(ipsinv(&["no-such-command"]).code, 2);
}

#[test]
fn state_cap_exits_three() {
    let dir = TempDir::new().unwrap();
    let f = emit(&dir, "tasep", &[]);
    let r = ipsinv(&["verify-cycle", s(&f), "--n", "12", "--max-states", "100"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn square_commands_report_torus_residual() {
    let dir = TempDir::new().unwrap();
    let flip = emit(&dir, "square_flip", &[]);
    let j = ipsinv(&["check-2d", s(&flip), "--report", "json"]).json();
    assert_eq!(j["verdict"], "invariant");
    assert_eq!(j["residuals"][0]["value"], "0");
    let pair = emit(&dir, "square_pair_flip", &[]);
    let r = ipsinv(&["check-2d", s(&pair)]);
    assert_eq!(r.code, 1);
    assert_eq!(ipsinv(&["check-markov", s(&flip)]).code, 2);
}

#[test]
fn equivalence_panel_and_searches() {
    let dir = TempDir::new().unwrap();
    let f = emit(&dir, "stochastic_ising", &[]);
    let j = ipsinv(&["equivalences", s(&f), "--report", "json"]).json();
    assert_eq!(j["verdict"], "invariant");
    assert!(j["details"]["predicates"].as_object().unwrap().values().all(|v| v == true));

    let t = emit(&dir, "tasep", &[]);
    assert_eq!(ipsinv(&["find-product", s(&t), "--report", "json"]).json()["verdict"], "all-products");
    assert_eq!(ipsinv(&["find-markov", s(&t), "--report", "json"]).json()["verdict"], "found");
}
