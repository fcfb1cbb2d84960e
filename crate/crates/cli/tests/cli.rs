use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hmflow(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmflow")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn shoot_writes_profile_and_header() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hmflow(tmp.path(), &["shoot", "--extrema", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let theta = v["header"]["theta_m"].as_f64().unwrap();
    assert!((theta - 1.826249).abs() < 1e-5, "{theta}");
    let csv = std::fs::read_to_string(tmp.path().join("steady/profile_m3_a1.csv")).unwrap();
    assert!(csv.starts_with("r,phi,dphi\n"));
    assert!(csv.lines().count() > 50);
}

#[test]
fn flow_writes_a_content_addressed_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hmflow(tmp.path(), &["flow", "--preset", "thm1.1-global"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["outcome"], "global_existence");
    assert_eq!(v["expected_matched"], true);
    let dir = Path::new(v["run_dir"].as_str().unwrap());
    assert!(dir.join("manifest.json").is_file());
    assert!(dir.join("monitors.csv").is_file());
}

#[test]
fn classify_reports_type_i_for_the_blowup_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hmflow(tmp.path(), &["classify", "--preset", "thm1.1-blowup"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["classification"], "TypeI");
    assert!((v["omega_hat"].as_f64().unwrap() - 0.10963).abs() < 1e-3);
}

#[test]
fn contradicted_expectation_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hmflow(tmp.path(), &["classify", "--preset", "thm1.1-global", "--set", "params.b=3.0", "--set", "stop.m_stop=300.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hmflow(tmp.path(), &["flow", "--preset", "thm1.1-global", "--set", "config.max_steps=5"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout_json(&o)["outcome"], "solver_failure");
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(hmflow(tmp.path(), &["flow", "--preset", "no-such-preset"]).status.code(), Some(1));
    assert_eq!(hmflow(tmp.path(), &["flow", "--set", "params.b"]).status.code(), Some(1));
    assert_eq!(hmflow(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(hmflow(tmp.path(), &["report"]).status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scenario.toml");
    std::fs::write(&cfg, "preset = \"thm1.1-global\"\nname = \"from-file\"\n\n[params]\nb = 0.5\n").unwrap();
    let o = hmflow(tmp.path(), &["flow", "--config", cfg.to_str().unwrap(), "--set", "params.b=0.75"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["scenario"], "from-file");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(v["run_dir"].as_str().unwrap()).join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["scenario"]["params"]["b"], 0.75);
}

#[test]
fn report_is_long_format() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(hmflow(tmp.path(), &["flow", "--preset", "thm1.1-global"]).status.code(), Some(0));
    let file = tmp.path().join("long.csv");
    let o = hmflow(tmp.path(), &["report", "--file", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&file).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["run", "scenario", "source", "index", "index_value", "variable", "value"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert!(rows.iter().any(|r| &r[2] == "monitors.csv" && &r[5] == "gradient"));
    assert!(rows.iter().all(|r| r[6].parse::<f64>().is_ok()));
}

#[test]
fn sweep_brackets_the_boundary() {
    let tmp = tempfile::tempdir().unwrap();
    let o = hmflow(
        tmp.path(),
        &["sweep", "--b", "1.0,3.1", "--set", "config.grid.base_cells=128", "--set", "stop.m_stop=200.0", "--jobs", "2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["b_global_max"], 1.0);
    assert_eq!(v["b_blowup_min"], 3.1);
    assert!(tmp.path().join("sweep.csv").is_file());
}

#[test]
fn pair_suite_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sweep", "--pairs", "2", "--seed", "7", "--set", "config.grid.base_cells=128", "--pair-times", "0.05,0.1"];
    let a = hmflow(tmp.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let first = std::fs::read(tmp.path().join("pairs.json")).unwrap();
    assert_eq!(hmflow(tmp.path(), &args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(tmp.path().join("pairs.json")).unwrap());
    assert_eq!(stdout_json(&a)["fraction_non_increasing"], 1.0);
}
