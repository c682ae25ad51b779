//! End-to-end runs of the `pcm-detect` binary.

use std::path::Path;
use std::process::{Command, Output};

use pcm_detect::calibration::CalibrationRecord;
use pcm_detect::cube::read_map_csv;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pcm-detect"));
    c.env_remove("PCM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn calibrate_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.json");
    let out = run(&["calibrate", "--arch", "BIC-D-P1", "--K", "40", "--trials", "500", "--seed", "3", "--out", s(&cal)]);
    ok(&out);
    let record = CalibrationRecord::from_json(&std::fs::read_to_string(&cal).unwrap()).unwrap();
    assert_eq!(record.architecture, "BIC-D-P1");
    assert!(record.eta.is_finite());

    let report = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    let out = run(&[
        "simulate", "--arch", "BIC-D-P1", "--scenario", "H11", "--K", "40", "--trials", "30", "--eta", s(&cal),
        "--format", "json", "--out", s(&report), "--trace", s(&trace),
    ]);
    ok(&out);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["eta"].as_f64().unwrap(), record.eta);
    assert_eq!(v["trials"], 30);
    let pd = v["pd"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pd));
    let trace = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(trace.lines().count(), 1 + 3 * 10);
}

#[test]
fn calibration_for_another_architecture_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.json");
    ok(&run(&["calibrate", "--arch", "AIC-D-P1", "--K", "20", "--trials", "500", "--out", s(&cal)]));
    let out = run(&["simulate", "--arch", "BIC-D-P1", "--scenario", "H0", "--K", "20", "--trials", "5", "--eta", s(&cal)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_classify_render() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("c.pcube");
    ok(&run(&["synth", "--rows", "14", "--cols", "28", "--left", "2", "--right", "3", "--seed", "5", "--out", s(&cube)]));
    let map = dir.path().join("map.csv");
    let hyp = dir.path().join("hyp.csv");
    let ppm = dir.path().join("map.ppm");
    let out = run(&[
        "classify", "--cube", s(&cube), "--window", "7x7", "--arch", "BASELINE-BIC", "--out", s(&map),
        "--hypotheses", s(&hyp), "--ppm", s(&ppm),
    ]);
    ok(&out);
    let (rows, cols, classes) = read_map_csv(&map).unwrap();
    assert_eq!((rows, cols), (2, 4));
    let labels: Vec<u8> = classes.iter().map(|c| c.index()).collect();
    assert_eq!(labels, [2, 2, 3, 3, 2, 2, 3, 3]);
    // baselines always declare H0, stored as index 0
    let hyp = std::fs::read_to_string(&hyp).unwrap();
    assert!(hyp.lines().all(|l| l.split(',').all(|v| v.trim() == "0")), "{hyp}");

    let rendered = dir.path().join("again.ppm");
    ok(&run(&["render", "--map", s(&map), "--out", s(&rendered)]));
    assert_eq!(std::fs::read(&rendered).unwrap(), std::fs::read(&ppm).unwrap());
}

#[test]
fn thread_count_does_not_change_the_output() {
    let calibrate = |threads: &str| {
        let out = bin()
            .env("PCM_THREADS", threads)
            .args(["calibrate", "--arch", "GIC-D-P2", "--K", "30", "--trials", "500", "--seed", "8"])
            .output()
            .unwrap();
        ok(&out);
        let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v.as_object_mut().unwrap().remove("runtime_seconds");
        v
    };
    assert_eq!(calibrate("1"), calibrate("4"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["calibrate", "--K", "40"]).status.code(), Some(2));
    assert_eq!(run(&["calibrate", "--arch", "XYZ-D-P1", "--K", "40"]).status.code(), Some(2));
    assert_eq!(run(&["calibrate", "--arch", "GIC-D-P1", "--rho", "0.5", "--K", "40"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--arch", "AIC-D-P1", "--scenario", "H11", "--K", "40"]).status.code(), Some(2));
    let bad_threads = bin().env("PCM_THREADS", "many").args(["synth", "--rows", "2", "--cols", "2", "--out", "/dev/null"]).output().unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreadable_cube_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("bad.pcube");
    std::fs::write(&cube, b"NOPE0000000000000000").unwrap();
    let out = run(&["classify", "--cube", s(&cube), "--arch", "BASELINE-AIC"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("magic"));
}

#[test]
fn window_larger_than_cube_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cube = dir.path().join("small.pcube");
    ok(&run(&["synth", "--rows", "5", "--cols", "5", "--out", s(&cube)]));
    let out = run(&["classify", "--cube", s(&cube), "--window", "11x11", "--arch", "BASELINE-AIC"]);
    assert_eq!(out.status.code(), Some(2));
}
