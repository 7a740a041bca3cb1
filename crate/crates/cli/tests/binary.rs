use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use convext_cli::instance_file::{parse_instance, serialize_instance};
use convext_cli::report::parse_report;

const TWO_SAMPLE: &str = r#"{
  "features": [[1.0], [-1.0]],
  "C": 1.0,
  "loss": {"kind": "hinge"},
  "regularizer": {"kind": "l2", "half": true},
  "constraints": {"cardinality": 1}
}"#;

fn convext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convext")).args(args).env_remove("CONVEXT_SEED").output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn value(out: &Output) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    parse_report(&text).into_iter().find(|(k, _)| k == "value").expect("value line").1.parse().unwrap()
}

#[test]
fn solve_two_sample_instance_with_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "two.json", TWO_SAMPLE);
    let p = path.to_str().unwrap();
    for method in ["bnb", "oracle"] {
        let out = convext(&["solve", p, "--method", method, "--single-thread"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!((value(&out) - 0.5).abs() < 1e-6);
    }
    let bnb = convext(&["solve", p, "--tol", "1e-7"]);
    let text = String::from_utf8_lossy(&bnb.stdout);
    let gap: f64 = parse_report(&text).into_iter().find(|(k, _)| k == "proven_gap").unwrap().1.parse().unwrap();
    assert!(gap <= 1e-7, "{text}");
    let relax = convext(&["solve", p, "--method", "relax", "--extension", "trivial"]);
    assert!(relax.status.success());
    assert!(value(&relax) <= 0.5 + 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let infeasible = write(
        dir.path(),
        "infeasible.json",
        &TWO_SAMPLE.replace("\"cardinality\": 1", "\"fixed\": {\"0\": 1, \"1\": 1}, \"cardinality\": 1"),
    );
    assert_eq!(convext(&["solve", infeasible.to_str().unwrap()]).status.code(), Some(2));

    let broken = write(dir.path(), "broken.json", "{\n  \"features\": [[1.0]],\n  \"C\": ,\n}");
    let out = convext(&["solve", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = dir.path().join("missing.json");
    assert_eq!(convext(&["solve", missing.to_str().unwrap()]).status.code(), Some(1));

    let ok = write(dir.path(), "two.json", TWO_SAMPLE);
    assert_eq!(convext(&["solve", ok.to_str().unwrap(), "--extension", "theorem1"]).status.code(), Some(1));
    assert_eq!(convext(&["solve", ok.to_str().unwrap(), "--method", "simplex"]).status.code(), Some(1));
}

#[test]
fn instance_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
      "features": [[1.0, 0.0], [0.5, -1.0], [-1.0, 2.0]],
      "C": 3.0,
      "loss": {"kind": "logistic", "c0": 2.0, "c1": 2.0},
      "regularizer": {"kind": "l2", "half": false},
      "constraints": {"fixed": {"2": true}, "linear": [{"coeffs": [1.0, 1.0, 0.0], "rhs": 1.0}]},
      "decomposition": "logistic_partial"
    }"#;
    let inst = parse_instance(text).unwrap();
    let again = serialize_instance(&inst);
    let path = write(dir.path(), "again.json", &again);
    assert_eq!(parse_instance(&std::fs::read_to_string(path).unwrap()).unwrap(), inst);
}

#[test]
fn surfaces_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = ["surface", "--loss", "logistic", "--reg", "l2", "--C", "16", "--theta", "-3:3:0.25", "--y", "0:1:0.1"];
    for out in [&a, &b] {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", out.to_str().unwrap()]);
        let run = convext(&full);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 1 + 25 * 11);
}

#[test]
fn surface_boundary_values_of_the_hinge_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let run = convext(&[
        "surface",
        "--loss",
        "hinge",
        "--reg",
        "l2",
        "--C",
        "5",
        "--x",
        "1",
        "--theta",
        "-1.2:0:1.2",
        "--y",
        "0:0:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 2);
    assert!((values[0] - 0.72).abs() < 1e-12);
    assert!((values[1] - 5.0).abs() < 1e-12);
}

#[test]
fn unbounded_l1_surface_needs_the_diagnostic_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let run = convext(&[
        "surface",
        "--loss",
        "hinge",
        "--reg",
        "l1",
        "--C",
        "4",
        "--theta",
        "-2:2:1",
        "--y",
        "0:1:0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("bounded"));
}

#[test]
fn check_suites_report_and_exit() {
    let ok = convext(&["check", "extension", "--samples", "5", "--seed", "3"]);
    assert!(ok.status.success());
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("status: pass"));
    assert!(text.contains("seed: 3"));

    let control = convext(&["check", "convexity", "--negative-control", "--samples", "2000"]);
    assert_eq!(control.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&control.stderr).contains("detected: true"));

    assert_eq!(convext(&["check", "nonsense"]).status.code(), Some(1));
}

#[test]
fn seed_comes_from_the_environment_when_set() {
    let out = Command::new(env!("CARGO_BIN_EXE_convext"))
        .args(["check", "extension", "--samples", "2", "--seed", "1"])
        .env("CONVEXT_SEED", "42")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed: 42"));
}
