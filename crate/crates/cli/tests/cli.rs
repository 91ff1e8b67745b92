use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn simulate(dir: &Path, experiment: &str, config: &str, extra: &[&str], jobs_env: Option<&str>) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_simulate"));
    cmd.arg(experiment).arg("--config").arg(&cfg).args(extra).env_remove("SIMULATE_JOBS");
    if let Some(j) = jobs_env {
        cmd.env("SIMULATE_JOBS", j);
    }
    cmd.output().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn splitting_sweep_has_negative_log_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("split.csv");
    let config = r#"{
        "experiment": "splitting",
        "fixed": {"e_c": 0.1, "e_l": 1.0},
        "sweep": {"name": "e_j", "start": 0.1, "stop": 1.0, "count": 6},
        "units": {"energy": "GHz", "time": "ns"}
    }"#;
    let o = simulate(dir.path(), "splitting", config, &["--out", out.to_str().unwrap(), "--jobs", "2"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out);
    assert_eq!(rows.len(), 6);
    let (n, l) = (col(&h, "alpha_prime_sq"), col(&h, "ln_e01"));
    let xs: Vec<f64> = rows.iter().map(|r| r[n].parse().unwrap()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[l].parse().unwrap()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 6.0, ys.iter().sum::<f64>() / 6.0);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    assert!(sxy < 0.0);
    assert!(rows.iter().all(|r| r[col(&h, "status")] == "ok"));
}

#[test]
fn manifest_records_hash_and_jobs_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pd.csv");
    let config = r#"{"experiment":"phase_diagram","fixed":{"ec_over_el":0.5},"sweep":{"name":"ej_over_el","values":[0.8,2.0]}}"#;
    let o = simulate(dir.path(), "phase_diagram", config, &["--out", out.to_str().unwrap()], Some("3"));
    assert!(o.status.success());
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("pd.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["jobs"], 3);
    assert_eq!(m["points"], 2);
    assert_eq!(m["failed"], 0);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn output_is_independent_of_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"experiment":"phase_diagram","sweep":[
        {"name":"ec_over_el","values":[0.1,1.0,2.5]},
        {"name":"ej_over_el","start":0.5,"stop":4,"count":4}]}"#;
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(simulate(dir.path(), "phase_diagram", config, &["--out", a.to_str().unwrap(), "--jobs", "1"], None).status.success());
    assert!(simulate(dir.path(), "phase_diagram", config, &["--out", b.to_str().unwrap(), "--jobs", "4"], None).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let ma: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    let mb: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn failed_point_gives_exit_one_and_a_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let config = r#"{"experiment":"xgate","sweep":{"name":"hold","values":[0.01,0.3]}}"#;
    let o = simulate(dir.path(), "xgate", config, &["--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let (h, rows) = read_csv(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][col(&h, "status")], "failed");
    assert!(rows[0][col(&h, "error_message")].contains("hold"));
    assert_eq!(rows[1][col(&h, "status")], "ok");
    let err: f64 = rows[1][col(&h, "error")].parse().unwrap();
    assert!((0.0..=1.0).contains(&err));
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"experiment":"bitflip","fixed":{"e_c":-0.1,"e_l":0.1,"e_j":3},"sweep":{"name":"e_q","values":[1]},"extra":true}"#;
    let o = simulate(dir.path(), "bitflip", config, &["--out", dir.path().join("b.csv").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    for needle in ["fixed.e_c", "sweep.e_q", "extra"] {
        assert!(msg.contains(needle), "{needle} not in {msg}");
    }
    assert!(!dir.path().join("b.csv").exists());
}

#[test]
fn experiment_argument_must_match_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), "overlap", r#"{"experiment":"xgate"}"#, &[], None);
    assert_eq!(o.status.code(), Some(2));
    let o = simulate(dir.path(), "nonsense", r#"{}"#, &[], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convergence_flags_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let config = r#"{"experiment":"qps_pair","fixed":{"e_c_node":0.05,"e_q":0.2,"e_j":8.0},"numerics":{"n_max":8}}"#;
    let o = simulate(dir.path(), "qps_pair", config, &["--out", out.to_str().unwrap(), "--verify-convergence"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out);
    assert!(["true", "false"].contains(&rows[0][col(&h, "converged")].as_str()));
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("q.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["convergence_checked"], true);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = fs::read_to_string(&path).unwrap();
            if let Err(e) = fluxcat_cli::validate_config(&text, None) {
                panic!("{}: {e}", path.display());
            }
            seen += 1;
        }
    }
    assert_eq!(seen, 9);
}
