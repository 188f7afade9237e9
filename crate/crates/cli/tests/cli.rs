use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn warpcone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpcone")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const TWO_POINT: &str = r#"{"schema_version": 1, "points": ["a", "b"], "weights": [0.5, 0.5],
  "transition": [[0.7, 0.3], [0.3, 0.7]]}"#;

const SWAP: &str = r#"{"schema_version": 1, "points": ["x", "y"], "weights": [0.5, 0.5],
  "generators": [{"symbol": "s", "inverse": "s", "length": 1, "perm": [1, 0]}],
  "metric": [[0, 1], [1, 0]]}"#;

#[test]
fn cheeger_on_two_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "twopoint.json", TWO_POINT);
    let out = warpcone(&["cheeger", "--input", &input]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "cheeger");
    assert!((v["kappa"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!((v["lambda2"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(v["holds"], true);
}

#[test]
fn warp_swap_is_one_at_every_scale() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "swap.json", SWAP);
    let out = warpcone(&["warp", "--input", &input, "--t-list", "1,10"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv, "t,atom,x,y\n1,x,0,1\n1,y,1,0\n10,x,0,1\n10,y,1,0\n");
}

#[test]
fn warp_json_and_levels() {
    let out = warpcone(&["warp", "--builtin", "cycle:4", "--levels", "2^0..2^3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ts: Vec<f64> = v["levels"].as_array().unwrap().iter().map(|l| l["t"].as_f64().unwrap()).collect();
    assert_eq!(ts, vec![1.0, 2.0, 4.0, 8.0]);
    assert_eq!(v["levels"][0]["check"]["holds"], true);
}

#[test]
fn output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectrum.json");
    let out = warpcone(&["spectrum", "--builtin", "two-point:0.3,0.3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((v["lambda2"].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn parse_failure_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.json", "{\n  \"points\": [\"a\",\n  }");
    let out = warpcone(&["cheeger", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3, column 3"), "{err}");
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(warpcone(&["cheeger", "--builtin", "no-such-family:3"]).status.code(), Some(2));
    assert_eq!(warpcone(&["cheeger", "--input", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(warpcone(&["expansion", "--builtin", "two-point:0.3,0.3"]).status.code(), Some(2));
    assert_eq!(warpcone(&["verify", "--builtin", "cycle:4", "--tolerance", "bogus=1"]).status.code(), Some(2));
    assert_eq!(warpcone(&["cheeger", "--builtin", "cycle:4", "--cap", "0"]).status.code(), Some(2));
}

#[test]
fn cap_exceeded_exits_3() {
    let out = warpcone(&["cheeger", "--builtin", "cycle:8", "--cap", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn verify_exit_codes() {
    let small = ["verify", "--builtin", "cycle:4;two-point:0.3,0.3", "--random-kernels", "5", "--random-actions", "5"];
    let out = warpcone(&small);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 25);

    let mut strict = small.to_vec();
    strict.extend(["--tolerance", "identity=0"]);
    let out = warpcone(&strict);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    let failed: Vec<&Value> = v["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "fail").collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["worst_violation"].as_f64().unwrap() > 0.0));
}

#[test]
fn reports_are_deterministic() {
    let args = ["verify", "--builtin", "cycle:4;weighted-cycle:2", "--random-kernels", "10", "--random-actions", "5"];
    let a = warpcone(&args);
    let b = warpcone(&args);
    assert_eq!(a.stdout, b.stdout);
    let other = warpcone(&[&args[..], &["--seed", "8"]].concat());
    assert_ne!(a.stdout, other.stdout);

    let g1 = warpcone(&["gen", "--random-kernel", "6", "--seed", "3"]);
    let g2 = warpcone(&["gen", "--random-kernel", "6", "--seed", "3"]);
    assert_eq!(g1.status.code(), Some(0));
    assert_eq!(g1.stdout, g2.stdout);
}

#[test]
fn reals_use_seventeen_significant_digits() {
    let out = warpcone(&["cheeger", "--builtin", "two-point:0.3,0.3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"kappa\": 0.29999999999999999"), "{text}");
}

#[test]
fn generated_documents_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for builtin in ["margulis:2", "weighted-cycle:5", "two-point:0.3,0.3", "schreier-dyadic:2"] {
        let out = warpcone(&["gen", "--builtin", builtin]);
        assert_eq!(out.status.code(), Some(0), "{builtin}");
        let input = write(dir.path(), "doc.json", std::str::from_utf8(&out.stdout).unwrap());
        let from_file = json(&warpcone(&["spectrum", "--input", &input]));
        let direct = json(&warpcone(&["spectrum", "--builtin", builtin]));
        let strip = |mut v: Value| {
            match v.get_mut("families") {
                Some(list) => list.as_array_mut().unwrap().iter_mut().for_each(|f| {
                    f.as_object_mut().unwrap().remove("family");
                }),
                None => {
                    v.as_object_mut().unwrap().remove("family");
                }
            }
            v
        };
        assert_eq!(strip(from_file), strip(direct), "{builtin}");
    }
}

#[test]
fn oplab_modes_run() {
    for mode in ["propagation", "qlocal", "power", "ghost", "poincare"] {
        let out = warpcone(&["oplab", mode, "--builtin", "cycle:4"]);
        assert_eq!(out.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["command"], format!("oplab {mode}"));
    }
    let v = json(&warpcone(&["oplab", "power", "--builtin", "two-point:0.3,0.3", "--n-max", "5"]));
    for step in v["power"]["steps"].as_array().unwrap() {
        let n = step["n"].as_f64().unwrap();
        assert!((step["norm"].as_f64().unwrap() - 0.4f64.powf(n)).abs() < 1e-9);
    }
    let v = json(&warpcone(&["oplab", "ghost", "--sides", "2,4"]));
    assert_eq!(v["strictly_decreasing"], true);
}

#[test]
fn expansion_report_on_weighted_swap() {
    let v = json(&warpcone(&["expansion", "--builtin", "weighted-cycle:2"]));
    let r2 = 2f64.sqrt();
    assert!((v["markov_expansion"]["kappa"].as_f64().unwrap() - r2 / (1.0 + r2)).abs() < 1e-12);
    assert!((v["sigma"][0].as_f64().unwrap() - (1.0 + r2)).abs() < 1e-12);
}
