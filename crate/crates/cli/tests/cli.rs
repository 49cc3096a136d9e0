use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmabs"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("pd_si_4.json");
    let o = run(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "integration.duration=1.0",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["run.csv", "metrics.json", "stability_report.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(csv.starts_with("t,theta,omega,theta_d,"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["n_members"], 4);
}

#[test]
fn missing_mass_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("pd_si_4.json")).unwrap()).unwrap();
    let roster = v
        .pointer_mut("/swarm/members/0")
        .and_then(|m| m.as_object_mut())
        .expect("explicit roster");
    roster.remove("mass");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let o = run(&["simulate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_override_and_threads_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("pd_si_4.json");
    let o = run(
        &[
            "check-stability",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "parent.no_such_key=1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let o = run(
        &[
            "check-stability",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn strict_stability_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pd = config("pd_si_4.json");
    let o = run(
        &[
            "check-stability",
            "--config",
            pd.to_str().unwrap(),
            "--strict-stability",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let arise = config("arise_si_4.json");
    let o = run(
        &[
            "simulate",
            "--config",
            arise.to_str().unwrap(),
            "--strict-stability",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4);
    assert!(dir.path().join("stability_report.json").is_file());
    assert!(!dir.path().join("run.csv").exists());
}

#[test]
fn design_lqr_reports_gains() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("pd_lqr.json");
    let o = run(
        &["design-lqr", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lqr_gains.json")).unwrap())
            .unwrap();
    let k1 = v["k1"].as_f64().unwrap();
    assert!((k1.abs() - 10f64.sqrt()).abs() < 1e-3);
    assert!(v["residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn atlas_writes_grid_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("atlas_two_robot.json");
    let o = run(
        &[
            "atlas",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "grid.n_m1=10",
            "--set",
            "grid.n_j=10",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("atlas.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 100);
    assert!(dir.path().join("edges.csv").is_file());
    assert!(dir.path().join("manifold_cert.json").is_file());
}

#[test]
fn sweep_runs_each_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("sweep_sizes.json");
    let o = run(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "integration.duration=2.0",
            "--threads",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap())
            .unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn runaway_step_is_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("pd_si_4.json");
    let o = run(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "integration.dt=0.5",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
