use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const OFFSET_ZERO: &str = r#"{"zeros":[{"re":0,"im":0},{"re":0,"im":0},{"re":0.5,"im":0}]}"#;
const DOUBLING: &str = r#"{"zeros":[{"re":0,"im":0},{"re":0,"im":0}]}"#;
const HARMONIC: &str = r#"{"kind":"power","p":1,"flags":{"tends_to_zero":true,"abs_summable":false,"slow_decay":false}}"#;
const MANUAL: &str =
    r#"{"epsilon_f":0.5,"c_f":0.3,"eta_f":0.18,"gamma0":0.9,"delta1":0.1,"T_gap":4}"#;

fn blaschke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blaschke"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    blaschke(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eval_at_the_origin_prints_zero() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &["eval", "--product", OFFSET_ZERO, "--point", "0"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0");
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "eval");
    assert_eq!(manifest["decimal_digits"], 16);
    assert!(manifest["versions"]["blaschke_sums"].is_string());
    assert!(dir.path().join("trace.json").exists());
}

#[test]
fn boundary_evaluation_of_the_doubling_map() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "eval",
            "--product",
            DOUBLING,
            "--turn",
            "0.3",
            "--precision",
            "64",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.starts_with("0.6"), "{line}");
    assert_eq!(line.len(), 2 + 20, "64 bits print 20 decimals: {line}");
}

#[test]
fn auto_precision_follows_the_depth() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "iterate",
            "--product",
            OFFSET_ZERO,
            "--turn",
            "0.1",
            "-n",
            "50",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["precision_bits"], 234);
    assert_eq!(manifest["decimal_digits"], 71);
}

#[test]
fn contract_errors_exit_with_two_on_one_line() {
    let dir = TempDir::new().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["no-such-command"],
        vec!["eval", "--point", "0"],
        vec![
            "eval",
            "--product",
            r#"{"zeros":[{"re":1.5,"im":0}]}"#,
            "--point",
            "0",
        ],
        vec!["eval", "--product", OFFSET_ZERO, "--point", "2"],
        vec!["eval", "--product", "{not json", "--point", "0"],
        vec!["lemma-suite", "--id", "lemma9.9"],
        vec![
            "solve-target",
            "--product",
            DOUBLING,
            "--coeffs",
            r#"{"kind":"power","p":2}"#,
            "--target",
            "0.1",
        ],
        vec![
            "eval",
            "--product",
            OFFSET_ZERO,
            "--point",
            "0",
            "--precision",
            "lots",
        ],
    ];
    for args in cases {
        let o = run_in(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error"), "{err}");
    }
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "iterate",
            "--product",
            OFFSET_ZERO,
            "--turn",
            "0.1",
            "-n",
            "100",
            "--precision",
            "80",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("precision"));

    let o = run_in(
        dir.path(),
        &[
            "solve-target",
            "--product",
            DOUBLING,
            "--coeffs",
            HARMONIC,
            "--target",
            "0.3+0.4i",
            "--tol",
            "1e-12",
            "--max-rounds",
            "3",
            "--constants",
            MANUAL,
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let trace = read_json(&dir.path().join("trace.json"));
    assert_eq!(trace["status"], "not-reached");
}

#[test]
fn solve_target_writes_trace_and_sums() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "solve-target",
            "--product",
            DOUBLING,
            "--coeffs",
            HARMONIC,
            "--target",
            "0.3+0.4i",
            "--tol",
            "1e-3",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = read_json(&dir.path().join("trace.json"));
    assert_eq!(trace["status"], "converged");
    assert!(trace["trace"]["final_value"].as_f64().unwrap() <= 1e-3);
    assert!(
        (trace["trace"]["recomputed_value"].as_f64().unwrap()
            - trace["trace"]["final_value"].as_f64().unwrap())
        .abs()
            < 1e-6
    );
    let sums = fs::read_to_string(dir.path().join("sums.csv")).unwrap();
    assert!(sums.starts_with("round,depth,re,im,case\n"));
    assert!(sums.lines().count() > 2);
    let manifest = read_json(&dir.path().join("manifest.json"));
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["trace.json", "sums.csv"]);
}

#[test]
fn negative_targets_parse() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &[
            "cluster-follow",
            "--product",
            DOUBLING,
            "--coeffs",
            HARMONIC,
            "--target",
            "-0.2i",
            "--target",
            "-0.1-0.1i",
            "--tol",
            "1e-2",
            "--constants",
            MANUAL,
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = read_json(&dir.path().join("trace.json"));
    assert_eq!(trace["trace"]["visits"].as_array().unwrap().len(), 2);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.json");
    let out = dir.path().join("from-config");
    let body = serde_json::json!({
        "product": serde_json::from_str::<Value>(OFFSET_ZERO).unwrap(),
        "seed": 5,
        "precision_bits": 100,
        "output_dir": out,
    });
    fs::write(&config, body.to_string()).unwrap();
    let o = blaschke(&[
        "eval",
        "--config",
        config.to_str().unwrap(),
        "--turn",
        "0.25",
        "--seed",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["seed"], 6);
    assert_eq!(manifest["config"]["precision_bits"], 100);
    assert_eq!(manifest["decimal_digits"], 31);

    fs::write(&config, r#"{"sed": 5}"#).unwrap();
    let o = blaschke(&["eval", "--config", config.to_str().unwrap(), "--point", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

fn files_without_manifest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (
                e.file_name().to_string_lossy().to_string(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn seeded_runs_are_byte_identical() {
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "lemma-suite",
            "--id",
            "lemma2.1",
            "--id",
            "cor2.3",
            "--trials",
            "500",
            "--seed",
            "7",
        ],
        vec!["calibrate", "--product", OFFSET_ZERO, "--seed", "3"],
        vec![
            "solve-target",
            "--product",
            OFFSET_ZERO,
            "--coeffs",
            HARMONIC,
            "--target",
            "-2+1i",
            "--seed",
            "3",
        ],
        vec![
            "abel-check",
            "--product",
            DOUBLING,
            "--coeffs",
            r#"{"kind":"geometric","ratio":0.5}"#,
            "--turn",
            "0.3719",
        ],
    ];
    for args in commands {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        let oa = run_in(a.path(), &args);
        let ob = run_in(b.path(), &args);
        assert_eq!(oa.status.code(), Some(0), "{args:?}: {}", stderr(&oa));
        assert_eq!(oa.stdout, ob.stdout);
        let (fa, fb) = (
            files_without_manifest(a.path()),
            files_without_manifest(b.path()),
        );
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{args:?}");
    }
}
