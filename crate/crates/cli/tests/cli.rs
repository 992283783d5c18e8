use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kinfluid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinfluid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_SIMULATION: &str = r#"
experiment = "simulate"
[grid]
points_per_axis = 16
[hermite]
degree_cap = 4
[time]
t_end = 0.2
dt = 0.01
sample_every = 2
[initial_data]
generator = "random_band"
amplitude = 0.05
seed = 3
"#;

#[test]
fn validate_reports_range_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "experiment = \"simulate\"\n[system]\ngamma = 0.9\nmu = -0.1\n",
    );
    let out = kinfluid(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gamma must exceed 1"), "{err}");
    assert!(err.contains("mu must be nonnegative"), "{err}");
}

#[test]
fn validate_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "experiment = \"simulate\"\n[time]\nsteps = 4\n",
    );
    let out = kinfluid(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("unknown key `time.steps`"));
}

#[test]
fn validate_prints_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.toml", "experiment = \"torus_decay\"\n");
    let out = kinfluid(&["validate", &cfg]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["experiment"], "torus_decay");
    assert_eq!(v["grid"]["points_per_axis"], 64);
    assert_eq!(v["system"]["gamma"], 2.0);
    assert_eq!(v["analysis"]["fit_window"], serde_json::json!([5.0, 40.0]));
}

#[test]
fn simulate_is_deterministic_and_manifest_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.toml", SMALL_SIMULATION);
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = kinfluid(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        csvs.push(fs::read(out_dir.join("energy.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs[0].clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,energy,dissipation,"));
    assert_eq!(lines.count(), 11);

    let manifest = json(&dir.path().join("a/manifest.json"));
    let config = &manifest["config"];
    for (section, key) in [
        ("grid", "domain_length"),
        ("hermite", "degree_cap"),
        ("system", "c0"),
        ("time", "energy_order"),
        ("initial_data", "seed"),
        ("analysis", "lyapunov_c"),
        ("analysis", "mus"),
    ] {
        assert!(
            !config[section][key].is_null(),
            "{section}.{key} missing from manifest"
        );
    }
    assert_eq!(manifest["artifacts"], serde_json::json!(["energy.csv"]));
    let summary = json(&dir.path().join("a/summary.json"));
    assert_eq!(summary["passed"], true);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sim.toml", SMALL_SIMULATION);
    let out_dir = dir.path().join("seeded");
    let out = kinfluid(&[
        "run",
        &cfg,
        "--seed",
        "11",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        json(&out_dir.join("manifest.json"))["config"]["initial_data"]["seed"],
        11
    );
    let reference = dir.path().join("plain");
    kinfluid(&["run", &cfg, "--output-dir", reference.to_str().unwrap()]);
    assert_ne!(
        fs::read(out_dir.join("energy.csv")).unwrap(),
        fs::read(reference.join("energy.csv")).unwrap()
    );
}

#[test]
fn torus_decay_reports_exponential_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("torus");
    let cfg = write_config(
        dir.path(),
        "torus.toml",
        &format!(
            "experiment = \"torus_decay\"\noutput_dir = {:?}\n",
            out_dir.to_str().unwrap()
        ),
    );
    let out = kinfluid(&["run", &cfg, "--threads", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let summary = json(&out_dir.join("summary.json"));
    assert!(summary["metrics"]["kappa"].as_f64().unwrap() > 0.0);
    assert!(summary["metrics"]["r_squared"].as_f64().unwrap() > 0.99);
    assert_eq!(summary["passed"], true);
}

#[test]
fn oracles_command_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = kinfluid(&["oracles", "--output-dir", dir.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let table = fs::read_to_string(dir.path().join("oracles.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn degenerate_run_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("short");
    let cfg = write_config(
        dir.path(),
        "short.toml",
        &format!(
            "experiment = \"inviscid_order\"\noutput_dir = {:?}\n[grid]\npoints_per_axis = 16\n[hermite]\ndegree_cap = 4\n[time]\nt_end = 0.05\ndt = 0.01\nsample_every = 1\n[initial_data]\namplitude = 0.0\n",
            out_dir.to_str().unwrap()
        ),
    );
    let out = kinfluid(&["run", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("degenerate difference reports"));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("saturated");
    let cfg = write_config(
        dir.path(),
        "saturated.toml",
        &format!(
            "experiment = \"inviscid_order\"\noutput_dir = {:?}\n[grid]\npoints_per_axis = 16\n[hermite]\ndegree_cap = 4\n[time]\nt_end = 2.0\ndt = 0.01\nsample_every = 10\n[analysis]\nmus = [2.0, 4.0, 8.0]\n",
            out_dir.to_str().unwrap()
        ),
    );
    let out = kinfluid(&["run", &cfg]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("FAIL convergence order"), "{stdout}");
    assert_eq!(json(&out_dir.join("summary.json"))["passed"], false);
}
