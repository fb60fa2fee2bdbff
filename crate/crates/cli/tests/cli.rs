use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_annealbench"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null)
}

#[test]
fn gen_tinyqap_ladder_writes_ten_files() {
    let dir = tempfile::tempdir().unwrap();
    let v = ok(&run(dir.path(), &["gen", "--tinyqap-ladder", "3", "12", "--out", "d"]));
    assert_eq!(v["files"].as_array().unwrap().len(), 10);
}

#[test]
fn solve_oracle_report_round() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("path.txt"), "p 3 2\n0 1\n1 2\n").unwrap();
    let gt = ok(&run(dir.path(), &["oracle", "--problem", "path.txt", "--formulation", "mvc", "--out", "gt.json"]));
    assert_eq!(gt["energy"], 1.0);
    let v = ok(&run(
        dir.path(),
        &["solve", "--problem", "path.txt", "--formulation", "mvc", "--solver", "sa", "--reads", "10", "--sweeps", "50", "--ground-truth", "gt.json"],
    ));
    assert_eq!(v["summary"]["best_energy"], 1.0);
    assert_eq!(v["summary"]["p_f"], 100.0);
    assert_eq!(v["normalization"], "ground_truth");
    let out = run(dir.path(), &["report", v["record"].as_str().unwrap()]);
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().ends_with("/1"));
}

#[test]
fn manifest_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.txt"), "p 3 3\n0 1\n1 2\n0 2\n").unwrap();
    let manifest = r#"{
        "problem": {"source": "file", "path": "tri.txt", "format": "edge_list"},
        "formulation": {"kind": "maxcut"},
        "solver": {"type": "brute_force"},
        "seed": 1,
        "output_dir": "m_out"
    }"#;
    fs::write(dir.path().join("m.json"), manifest).unwrap();
    let v = ok(&run(dir.path(), &["solve", "--manifest", "m.json", "--solver", "sa", "--formulation", "mvc"]));
    assert_eq!(v["summary"]["best_energy"], 2.0);
    assert!(dir.path().join("m_out/tri.result.json").exists());
}

#[test]
fn failure_prints_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--problem", "missing.txt"]);
    assert!(!out.status.success());
    let e: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["error"], "io");
    let out = run(dir.path(), &["solve"]);
    let e: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["error"], "parameter");
}

#[test]
fn warehouse_table_has_five_policies() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = r#"{
        "layout": {"rows": 4, "columns": 2},
        "orders": {"source": "generated", "n_orders": 10, "lines_per_order": 2, "skew": "none"},
        "repetitions": 2,
        "seed": 3,
        "oos": {"iterations": 2000, "temperature_schedule": "auto", "seed": 0},
        "decomp": {"io_weight": 1.0, "decomp": {"partition": "auto", "matching": "exhaustive", "sub_solver": {"type": "exact"}, "seed": 0}},
        "output": "wh.csv"
    }"#;
    fs::write(dir.path().join("wh.json"), manifest).unwrap();
    let out = run(dir.path(), &["warehouse", "--manifest", "wh.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("wh.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "run,ABC,COI,OOS,Random,decomp");
}
