use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use matxai_cli::io::{emit_matrix, parse_matrix};
use matxai_core::RealMatrix;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schema")
        .join(name);
    let schema: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn matxai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matxai"))
        .args(args)
        .env_remove("XAI_WORKERS")
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = matxai(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let validator = schema("run_report.schema.json");
    if let Err(e) = validator.validate(&v) {
        panic!("{args:?}: schema violation: {e}");
    }
    v
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn read_fixture(name: &str) -> RealMatrix {
    let path = fixture(name);
    parse_matrix(&std::fs::read(&path).unwrap(), &path).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn distill_delta_input_returns_target_as_kernel() {
    let (x, y) = (fixture("delta_x.csv"), fixture("delta_y.csv"));
    let v = report(&[
        "distill",
        "--input",
        s(&x),
        "--output",
        s(&y),
        "--lambda",
        "0",
    ]);
    let expected = read_fixture("delta_y.csv");
    let kernel: Vec<f64> = v["attributions"]["kernel"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(numbers)
        .collect();
    for (a, b) in kernel.iter().zip(expected.data()) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert_eq!(v["diagnostics"]["lambda_used"], 0.0);
}

#[test]
fn distill_fixture_fits_with_small_residual() {
    let (x, y) = (fixture("distill_x.csv"), fixture("distill_y.csv"));
    let v = report(&[
        "distill",
        "--input",
        s(&x),
        "--output",
        s(&y),
        "--block",
        "4x4",
        "--workers",
        "3",
    ]);
    assert!(v["diagnostics"]["residual"].as_f64().unwrap() <= 1e-6);
    let contribution = v["attributions"]["contribution"].as_array().unwrap();
    assert_eq!(contribution.len(), 2);
    assert_eq!(v["attributions"]["ranking"].as_array().unwrap().len(), 4);
    assert_eq!(v["workers"], 3);
}

#[test]
fn distill_errors_map_to_exit_codes() {
    let y = fixture("distill_y.csv");
    let missing = matxai(&["distill", "--input", "/nonexistent.csv", "--output", s(&y)]);
    assert_eq!(missing.status.code(), Some(2));

    let c = fixture("constant_x.csv");
    let singular = matxai(&[
        "distill",
        "--input",
        s(&c),
        "--output",
        s(&y),
        "--lambda",
        "0",
    ]);
    assert_eq!(singular.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&singular.stderr).contains("--lambda"));

    let bad_block = matxai(&[
        "distill",
        "--input",
        s(&c),
        "--output",
        s(&y),
        "--block",
        "9x1",
    ]);
    assert_eq!(bad_block.status.code(), Some(2));
    let bad_arg = matxai(&[
        "distill",
        "--input",
        s(&c),
        "--output",
        s(&y),
        "--block",
        "nope",
    ]);
    assert_eq!(bad_arg.status.code(), Some(2));
}

#[test]
fn unparsable_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3\n").unwrap();
    let out = matxai(&["distill", "--input", s(&bad), "--output", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shapley_linear_matches_closed_form_and_forms_agree() {
    let (m, x) = (fixture("linear.json"), fixture("x6.csv"));
    let model: Value = serde_json::from_slice(&std::fs::read(&m).unwrap()).unwrap();
    let w = numbers(&model["weights"]);
    let xs = read_fixture("x6.csv");

    let mut phis = Vec::new();
    for form in ["permutation", "subset", "matrix"] {
        let v = report(&[
            "shapley",
            "--model",
            s(&m),
            "--input",
            s(&x),
            "--form",
            form,
        ]);
        assert_eq!(v["attributions"]["form"], form);
        let phi = numbers(&v["attributions"]["phi"]);
        for ((p, wi), xi) in phi.iter().zip(&w).zip(xs.data()) {
            assert!((p - wi * xi).abs() <= 1e-9);
        }
        assert!(v["diagnostics"]["efficiency_gap"].as_f64().unwrap() <= 1e-9);
        phis.push(phi);
    }
    for (a, b) in phis[1].iter().zip(&phis[2]) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn shapley_too_many_players_exits_4() {
    let (m, x) = (fixture("linear21.json"), fixture("x21.csv"));
    let out = matxai(&["shapley", "--model", s(&m), "--input", s(&x)]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn shapley_arity_mismatch_exits_2() {
    let (m, x) = (fixture("linear.json"), fixture("x21.csv"));
    let out = matxai(&["shapley", "--model", s(&m), "--input", s(&x)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ig_linear_is_complete() {
    let (m, x) = (fixture("linear.json"), fixture("x6.csv"));
    let v = report(&["ig", "--model", s(&m), "--input", s(&x)]);
    assert!(v["diagnostics"]["completeness_gap"].as_f64().unwrap() <= 1e-12);
    assert_eq!(v["diagnostics"]["steps"], 50);
}

#[test]
fn ig_methods_agree_on_logistic() {
    let (m, x) = (fixture("logistic.json"), fixture("x6.csv"));
    let t = report(&["ig", "--model", s(&m), "--input", s(&x), "--steps", "10000"]);
    let v = report(&[
        "ig",
        "--model",
        s(&m),
        "--input",
        s(&x),
        "--method",
        "vandermonde",
        "--degree",
        "10",
    ]);
    assert_eq!(v["diagnostics"]["degree"], 10);
    let a = numbers(&t["attributions"]["per_feature"]);
    let b = numbers(&v["attributions"]["per_feature"]);
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() <= 1e-5, "{p} vs {q}");
    }
}

#[test]
fn ig_at_baseline_is_zero() {
    let (m, x) = (fixture("polynomial.json"), fixture("x6.csv"));
    let v = report(&[
        "ig",
        "--model",
        s(&m),
        "--input",
        s(&x),
        "--baseline",
        s(&x),
    ]);
    assert!(numbers(&v["attributions"]["per_feature"])
        .iter()
        .all(|&a| a == 0.0));
}

#[test]
fn workers_come_from_env_and_flag_wins() {
    let (m, x) = (fixture("linear.json"), fixture("x6.csv"));
    let run = |extra: &[&str], env: Option<&str>| -> Value {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_matxai"));
        cmd.args(["shapley", "--model", s(&m), "--input", s(&x)])
            .args(extra);
        match env {
            Some(w) => cmd.env("XAI_WORKERS", w),
            None => cmd.env_remove("XAI_WORKERS"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        serde_json::from_slice(&out.stdout).unwrap()
    };
    assert_eq!(run(&[], None)["workers"], 1);
    assert_eq!(run(&[], Some("3"))["workers"], 3);
    assert_eq!(run(&["--workers", "2"], Some("3"))["workers"], 2);
    assert_eq!(
        matxai(&[
            "shapley",
            "--model",
            s(&m),
            "--input",
            s(&x),
            "--workers",
            "0"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn report_and_bench_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("bench.json");
    let csv = dir.path().join("bench.csv");
    let out = matxai(&[
        "bench",
        "--grid",
        "sizes=8,4x6",
        "workers=1,2",
        "repeats=3",
        "--op",
        "dft2d",
        "--report",
        s(&json),
        "--csv",
        s(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    schema("bench_report.schema.json").validate(&v).unwrap();
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    assert!(cells.iter().all(|c| c["correct"] == true));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("op,rows,cols,workers,median_seconds,speedup,correct\n"));
    assert_eq!(table.lines().count(), 5);

    let bad = matxai(&["bench", "--grid", "repeats=2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn emitted_csv_matches_fixture_text() {
    let text = std::fs::read_to_string(fixture("distill_x.csv")).unwrap();
    assert_eq!(emit_matrix(&read_fixture("distill_x.csv")), text);
}
