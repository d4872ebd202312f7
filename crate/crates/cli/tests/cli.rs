use std::process::{Command, Output};

fn fran(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fran")).args(args).output().expect("spawn fran")
}

fn light_config(dir: &tempfile::TempDir) -> String {
    let path = dir.path().join("light.toml");
    std::fs::write(&path, "scheduled_users = 5\n").unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn realize_emits_a_trace_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = light_config(&dir);
    let a = fran(&["realize", "--config", &cfg, "--seed", "7", "--trace"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 7);
    assert!(!v["trace"].as_array().unwrap().is_empty());
    let b = fran(&["realize", "--config", &cfg, "--seed", "7", "--trace"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_and_plot_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = light_config(&dir);
    let out = dir.path().join("o.csv");
    let plot = dir.path().join("p.json");
    let r = fran(&[
        "realize", "--config", &cfg, "--seed", "1", "--trace", "--format", "csv",
        "--out", out.to_str().unwrap(), "--plot", plot.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(r.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("seed,"));
    assert_eq!(text.lines().count(), 2);
    let series: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&plot).unwrap()).unwrap();
    assert!(series.is_array());
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "cache_size = 1000\n").unwrap();
    let r = fran(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&r.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn missing_config_and_bad_flags_exit_with_one() {
    assert_eq!(fran(&["validate", "--config", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(fran(&["validate", "--bogus"]).status.code(), Some(1));
    assert_eq!(fran(&["sweep", "--realizations", "0"]).status.code(), Some(1));
}

#[test]
fn validate_passes() {
    let r = fran(&["validate"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn small_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = light_config(&dir);
    let r = fran(&[
        "sweep", "--config", &cfg, "--format", "csv", "--baseline", "benchmark",
        "--capacities-mbps", "104", "--cached", "2", "--realizations", "2", "--workers", "1",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("capacity_mbps,cached_requested,mode,"));
    assert!(text.contains(",benchmark,"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn oracle_summary() {
    let r = fran(&["oracle", "--instances", "3", "--seed", "0"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["instances"].as_array().unwrap().len(), 3);
    assert_eq!(v["lower_bound_violations"], 0);
}
