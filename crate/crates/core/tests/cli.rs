//! The `rbclock` binary: exit codes, output files and determinism.

mod common;

use common::preset_path;
use std::path::Path;
use std::process::{Command, Output};

const FAST: [&str; 6] = [
    "--set",
    "grid.speed_nodes=60",
    "--set",
    "grid.transverse_nodes=12",
    "--set",
    "detuning.points=201",
];

fn rbclock(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbclock"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn spectrum_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbclock(&[&["spectrum"], &FAST[..]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(read(dir.path(), "spectrum.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "delta_hz,b,c,P,env_L,env_U"));
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 202);
    let summary: serde_json::Value = serde_json::from_slice(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["command"], "spectrum");
    assert!(summary["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(summary["derived"]["recoil_shift_hz"].as_f64().unwrap() > 11e3);
}

#[test]
fn reruns_and_thread_counts_give_identical_csv() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, threads) in dirs.iter().zip(["1", "1", "3"]) {
        let o = rbclock(&[&["fringes", "--points", "301", "--threads", threads], &FAST[..]].concat(), d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let a = read(dirs[0].path(), "fringes.csv");
    assert_eq!(a, read(dirs[1].path(), "fringes.csv"));
    assert_eq!(a, read(dirs[2].path(), "fringes.csv"));
}

#[test]
fn invalid_configuration_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbclock(&["spectrum", "--set", "laser.waist_radius_mm=-0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("spectrum.csv").exists());
    let o = rbclock(&["spectrum", "--config", "/nonexistent/rbclock.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn degenerate_fringe_fit_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbclock(&[&["shift", "--set", "laser.target_pulse_area_pi=1e-4"], &FAST[..]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rbclock(&["frobnicate"], dir.path()).status.code(), Some(64));
    assert_eq!(rbclock(&["sweep-waist", "--nodes", "x"], dir.path()).status.code(), Some(64));
}

#[test]
fn every_preset_loads_and_runs() {
    let dir = std::fs::read_dir(preset_path("default").parent().unwrap()).unwrap();
    let mut n = 0;
    for entry in dir {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let out = tempfile::tempdir().unwrap();
        let o = rbclock(
            &[&["spectrum", "--config", path.to_str().unwrap()], &FAST[..]].concat(),
            out.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        n += 1;
    }
    assert!(n >= 10);
}
