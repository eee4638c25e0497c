use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn codedmv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codedmv")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn construct_companion_collection() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "gf8.json",
        r#"{"construction": "udm-companion", "N": 6, "delta": 4, "ell": 3, "field": "2^3"}"#,
    );
    let out = tmp.path().join("out");
    let o = codedmv(&["construct", "--scheme", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("collection.json"));
    assert_eq!(doc["meta"]["delta"], 12);
    assert_eq!(doc["meta"]["ell"], 9);
    assert_eq!(doc["meta"]["s"], 3);
    assert_eq!(doc["meta"]["domain"], "integer-lift");
    assert_eq!(doc["matrices"].as_array().unwrap().len(), 6);
    let csv = fs::read_to_string(out.join("worker_5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.lines().all(|l| l.split(',').count() == 9));
}

#[test]
fn construct_rs_real_logs_every_beta() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "rs.json", r#"{"construction": "rs-real", "N": 6, "delta": 4, "ell": 3}"#);
    let o = codedmv(&["construct", "--scheme", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&tmp.path().join("collection.json"));
    let betas = doc["meta"]["provenance"]["betas"].as_array().unwrap();
    assert_eq!(betas.len(), 18);
    assert_eq!(betas[0], -1.0);
    assert_eq!(betas[17], 1.0);
}

#[test]
fn field_too_small_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "small.json",
        r#"{"construction": "udm-ff", "N": 6, "delta": 4, "ell": 3, "field": "2^2"}"#,
    );
    let o = codedmv(&["construct", "--scheme", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("field too small"));
}

#[test]
fn unknown_config_fields_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{"construction": "rs-real", "N": 6, "delta": 4, "ell": 3, "bogus": 1}"#);
    assert_eq!(codedmv(&["analyze", "--scheme", &cfg, "--out", tmp.path().to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn verify_example_and_counterexample() {
    let tmp = TempDir::new().unwrap();
    let good = write_config(tmp.path(), "ex1.json", r#"{"construction": "example-one", "N": 3, "delta": 3, "ell": 2}"#);
    let o = codedmv(&["verify", "--scheme", &good]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS: 7 patterns"), "{}", stdout(&o));
    let o = codedmv(&["verify", "--scheme", &good, "--strict-psi"]);
    assert!(stdout(&o).contains("PASS: 1 patterns"), "{}", stdout(&o));

    let bad = write_config(
        tmp.path(),
        "naive.json",
        r#"{"construction": "naive-real-embed", "N": 2, "delta": 4, "ell": 2,
            "beta": {"source": "explicit", "values": [1.0, -1.0]}}"#,
    );
    let out = tmp.path().join("v");
    let o = codedmv(&["verify", "--scheme", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("[2, 2]"), "{}", stdout(&o));
    let v = read_json(&out.join("verify.json"));
    assert_eq!(v["certification"]["verdict"]["result"], "fail");
    assert_eq!(v["certification"]["verdict"]["pattern"], serde_json::json!([2, 2]));
}

#[test]
fn multiply_with_a_dead_worker() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "udm.json",
        r#"{"construction": "udm-companion", "N": 6, "delta": 4, "ell": 3, "field": "2^3"}"#,
    );
    let a: String = (0..24).map(|i| (0..5).map(|j| format!("{}", (i * 5 + j) % 7)).collect::<Vec<_>>().join(",") + "\n").collect();
    fs::write(tmp.path().join("a.csv"), &a).unwrap();
    fs::write(tmp.path().join("x.txt"), "1\n-1\n2\n0.5\n3\n").unwrap();
    let out = tmp.path().join("run");
    let o = codedmv(&[
        "multiply",
        "--scheme",
        &cfg,
        "--a",
        tmp.path().join("a.csv").to_str().unwrap(),
        "--x",
        tmp.path().join("x.txt").to_str().unwrap(),
        "--disable",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = read_json(&out.join("diagnostics.json"));
    assert_eq!(diag["pattern"][0], 0);
    assert!(diag["relative_error"].as_f64().unwrap() < 1e-9);
    let x = [1.0, -1.0, 2.0, 0.5, 3.0];
    let ax: Vec<f64> = fs::read_to_string(out.join("ax.txt")).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    for (i, got) in ax.iter().enumerate() {
        let want: f64 = (0..5).map(|j| ((i * 5 + j) % 7) as f64 * x[j]).sum();
        assert!((got - want).abs() < 1e-8, "row {i}: {got} vs {want}");
    }
    let trace = read_json(&out.join("trace.json"));
    assert_eq!(trace["config_hash"], diag["config_hash"]);
}

#[test]
fn too_few_workers_is_infeasible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "udm.json", r#"{"construction": "udm-real", "N": 6, "delta": 4, "ell": 3}"#);
    let o = codedmv(&["simulate", "--scheme", &cfg, "--budgets", "3,0,0,0,0,0", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let o = codedmv(&["simulate", "--scheme", &cfg, "--disable", "0,1,2,3,4", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn table_one_and_deterministic_output() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = codedmv(&["analyze", "--table", "1", "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let doc = read_json(&a.join("table1.json"));
    assert_eq!(doc["rows"].as_array().unwrap().len(), 8);
    let text = fs::read_to_string(a.join("table1.txt")).unwrap();
    assert!(text.contains("UDM+Companion GF(3^2)"));
    for f in ["table1.json", "table1.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }

    let cfg = write_config(tmp.path(), "rs.json", r#"{"construction": "rs-real", "N": 6, "delta": 4, "ell": 3}"#);
    for dir in [&a, &b] {
        let o = codedmv(&["simulate", "--scheme", &cfg, "--seed", "11", "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["trace.json", "diagnostics.json", "ax.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }
}

#[test]
fn full_mode_on_large_table_exceeds_budget() {
    let o = codedmv(&["analyze", "--table", "2", "--mode", "full", "--out", TempDir::new().unwrap().path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}
