use std::path::Path;
use std::process::Command;

use formbound::fbf::{self, Dtype};
use formbound::field::Field;
use formbound::grid::Grid;
use formbound::presets;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_formbound")).args(args).output().expect("spawn formbound");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn carleson_lebesgue_closed_form() {
    let (code, stdout, _) = run(&["carleson", "--dim", "3", "--grid", "32", "--preset", "lebesgue"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let c = v["results"]["constant"].as_f64().unwrap();
    assert!((c - 4.0 / 3.0 * (1.0 - 4f64.powi(-6))).abs() <= 1e-12, "{c}");
    assert_eq!(v["schema_version"], "formbound-report/1");
    assert_eq!(v["config"]["subcommand"], "carleson");
}

#[test]
fn decompose_gradient_file_has_no_stream() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::unit(2, 16).unwrap();
    let b = presets::gradient(&presets::default_potential(g));
    let path = dir.path().join("b.fbf");
    fbf::save(&path, &Field::Vector(b), Dtype::Real).unwrap();
    let out = dir.path().join("r.json");
    let (code, _, err) =
        run(&["decompose", "--dim", "2", "--grid", "16", "--input", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v = report(&out);
    for row in v["results"]["stream_entry_max"].as_array().unwrap() {
        for e in row.as_array().unwrap() {
            assert!(e.as_f64().unwrap() <= 1e-10);
        }
    }
}

#[test]
fn planar_potential_exits_two() {
    let (code, stdout, _) = run(&["verdict", "--dim", "2", "--grid", "32", "--preset", "constant_potential"]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["results"]["overall"], "certified_unbounded_n2");
}

#[test]
fn magnetic_shift_flips_planar_verdict() {
    let base = ["magnetic", "--dim", "2", "--grid", "32", "--preset", "coulomb_gauge"];
    assert_eq!(run(&base).0, 0);
    let mut shifted = base.to_vec();
    shifted.extend(["--q-shift", "0.1"]);
    assert_eq!(run(&shifted).0, 2);
}

#[test]
fn malformed_configuration_exits_one() {
    let (code, _, err) = run(&["carleson", "--dim", "3", "--grid", "30", "--preset", "lebesgue"]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
    assert_eq!(run(&["trace", "--preset", "nonexistent"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["trace"]).0, 1);
}

#[test]
fn infinitesimal_writes_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let (code, _, err) =
        run(&["infinitesimal", "--dim", "3", "--grid", "32", "--preset", "smooth_trig", "--csv", csv.to_str().unwrap()]);
    assert!(code == 0 || code == 2, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta,vmo,local_trace"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn reruns_are_identical_and_timing_is_opt_in() {
    let args = ["formnorm", "--dim", "2", "--grid", "16", "--preset", "random", "--seed", "7"];
    let (_, a, _) = run(&args);
    let (_, b, _) = run(&args);
    assert_eq!(a, b);
    assert!(!a.contains("timing_seconds"));
    let mut timed = args.to_vec();
    timed.push("--timing");
    assert!(run(&timed).1.contains("timing_seconds"));
}

#[test]
fn capacity_and_gauge() {
    let (code, stdout, err) = run(&["capacity", "--dim", "3", "--grid", "32", "--tau", "1.0", "--samples", "4"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["results"]["capacity"].as_f64().unwrap() > 0.0);
    assert_eq!(v["results"]["gauge"]["within_bound"], true);
}

#[test]
fn bmo_profile_and_thread_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_formbound"))
        .args(["bmo", "--dim", "2", "--grid", "32", "--preset", "log_singular", "--deltas", "0.125,0.25"])
        .env("FORMBOUND_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["vmo_profile"].as_array().unwrap().len(), 2);
    let bad = Command::new(env!("CARGO_BIN_EXE_formbound"))
        .args(["bmo", "--dim", "2", "--grid", "32", "--preset", "stream"])
        .env("FORMBOUND_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn reports_validate_against_published_schema() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json")).unwrap())
            .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let runs: [&[&str]; 9] = [
        &["decompose", "--dim", "2", "--grid", "16", "--preset", "stream"],
        &["bmo", "--dim", "2", "--grid", "16", "--preset", "vortex", "--deltas", "0.125,0.25"],
        &["carleson", "--dim", "3", "--grid", "16", "--preset", "bump"],
        &["capacity", "--dim", "2", "--grid", "16", "--flavor", "inhomogeneous", "--shape", "cube", "--size", "0.25"],
        &["trace", "--dim", "3", "--grid", "16", "--preset", "point_mass"],
        &["formnorm", "--dim", "3", "--grid", "16", "--preset", "gradient", "--sandwich", "--timing"],
        &["verdict", "--dim", "3", "--grid", "16", "--preset", "vortex"],
        &["magnetic", "--dim", "3", "--grid", "16", "--preset", "coulomb_gauge"],
        &["infinitesimal", "--dim", "3", "--grid", "16", "--preset", "smooth_trig"],
    ];
    for args in runs {
        let (code, stdout, err) = run(args);
        assert!(code == 0 || code == 2, "{args:?}: {err}");
        let v: Value = serde_json::from_str(&stdout).unwrap();
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| format!("{e} at {}", e.instance_path)).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
    let broken = serde_json::json!({"schema_version": "formbound-report/1", "config": {}, "results": {}});
    assert!(!validator.is_valid(&broken));
}
