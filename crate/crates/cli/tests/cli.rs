use std::f64::consts::TAU;
use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn singrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singrad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse_csv(text: &str) -> Vec<[f64; 6]> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,y,r,phi_unwrapped,winding"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            v.try_into().unwrap()
        })
        .collect()
}

#[test]
fn list_prints_six_stable_lines() {
    let a = singrad(&["list"]);
    assert_eq!(code(&a), 0);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 6);
    for id in ["S1", "S2", "S3", "S4", "S5", "S6"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id}");
    }
    assert_eq!(text, stdout(&singrad(&["list"])));
}

#[test]
fn run_stops_at_the_inner_radius() {
    let out = singrad(&["run", "S1", "--rmin", "1e-3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&stdout(&out));
    assert!(rows.len() > 10);
    assert!(rows.last().unwrap()[3] <= 1e-3);
    assert!(rows
        .windows(2)
        .all(|w| w[1][0] > w[0][0] && w[1][3] < w[0][3]));
}

#[test]
fn json_report_has_the_documented_schema() {
    let out = singrad(&["run", "S3", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        [
            "scenario_id",
            "params",
            "trajectory_summary",
            "checks",
            "notes"
        ]
    );
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "winding"));
    for c in checks {
        let keys: Vec<&str> = c.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["name", "measured", "expected", "tol", "pass"]);
    }
    let summary = &v["trajectory_summary"];
    for k in ["start", "end", "stop_reason", "winding", "crossings"] {
        assert!(!summary[k].is_null(), "{k}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&singrad(&["run", "S9"])), 2);
    assert_eq!(code(&singrad(&["run", "S3", "--bogus"])), 2);
    assert_eq!(code(&singrad(&["run", "S3", "--x0", "0.2"])), 2);
    assert_eq!(code(&singrad(&["run", "S3", "--mode", "fast"])), 2);
    assert_eq!(code(&singrad(&["run", "S3", "--x0", "2", "--y0", "0"])), 2);
    assert_eq!(code(&singrad(&["sweep", "S3"])), 2);
    assert_eq!(code(&singrad(&["frobnicate"])), 2);
}

#[test]
fn numerical_failure_exits_three() {
    let out = singrad(&["run", "S1", "--max-steps", "5"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("MaxSteps"));
}

#[test]
fn failed_checks_exit_one() {
    // the start already lies beyond the outer stop radius, so the run never reaches the inner one
    let out = singrad(&["run", "S3", "--rmax", "0.4"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn csv_round_trips_to_the_printed_precision() {
    let coarse = stdout(&singrad(&["run", "S3", "--precision", "8"]));
    let fine = parse_csv(&stdout(&singrad(&["run", "S3", "--precision", "17"])));
    let rows = parse_csv(&coarse);
    assert_eq!(rows.len(), fine.len());
    for (a, b) in rows.iter().zip(&fine) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 5e-8 * y.abs(), "{x} {y}");
        }
    }
    // reformatting the parsed values reproduces the text
    for (line, row) in coarse.lines().skip(1).zip(&rows) {
        let again: Vec<String> = row.iter().map(|v| format!("{:.7e}", v)).collect();
        assert_eq!(line, again.join(","));
    }
    assert_eq!(code(&singrad(&["run", "S3", "--precision", "5"])), 2);
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["run", "S4", "--format", "json"][..],
        &["run", "S5"][..],
        &["verify", "--points", "10", "--seed", "7"][..],
    ] {
        let a = singrad(args);
        assert_eq!(a.stdout, singrad(args).stdout, "{args:?}");
    }
}

#[test]
fn verify_passes_and_flags_the_printed_h() {
    let out = singrad(&["verify"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("pullback_identity"));

    let out = singrad(&["verify", "--use-printed-h"]);
    assert_eq!(code(&out), 1);
    let line = stdout(&out)
        .lines()
        .find(|l| l.contains("pullback_identity"))
        .unwrap()
        .to_string();
    assert!(line.ends_with("FAIL"), "{line}");
}

fn windings(text: &str) -> Vec<f64> {
    text.lines()
        .filter(|l| l.starts_with("start "))
        .map(|l| {
            let w = l
                .split_whitespace()
                .find_map(|f| f.strip_prefix("winding="))
                .unwrap();
            w.parse().unwrap()
        })
        .collect()
}

#[test]
fn sweep_windings_match_one_turn() {
    let rmin = format!("{:e}", 0.5 * (-TAU).exp());
    let out = singrad(&["sweep", "S3", "--grid", "8", "--rmin", &rmin]);
    assert_eq!(code(&out), 0);
    let w = windings(&stdout(&out));
    assert_eq!(w.len(), 8);
    assert!(w.iter().all(|x| (x - 1.0).abs() <= 0.01), "{w:?}");
    assert!(stdout(&out)
        .lines()
        .last()
        .unwrap()
        .starts_with("aggregate: starts=8"));

    let out = singrad(&["sweep", "S6", "--grid", "8"]);
    assert_eq!(code(&out), 0);
    assert!(windings(&stdout(&out)).iter().all(|x| x.abs() <= 1e-6));
}

#[test]
fn sweep_of_one_equals_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let out = singrad(&[
        "sweep",
        "S3",
        "--grid",
        "1",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let swept: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let run: Value =
        serde_json::from_str(&stdout(&singrad(&["run", "S3", "--format", "json"]))).unwrap();
    assert_eq!(swept, Value::Array(vec![run]));
}

#[test]
fn sweep_reads_a_start_file() {
    let dir = tempfile::tempdir().unwrap();
    let starts = dir.path().join("starts.txt");
    fs::write(&starts, "# x y\n0.5 0\n0,0.3\n\n-0.2 -0.2\n").unwrap();
    let out = singrad(&["sweep", "S3", "--starts", starts.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(windings(&stdout(&out)).len(), 3);
}

#[test]
fn polar_and_cartesian_starts_agree() {
    let a = singrad(&["run", "S3", "--x0", "0", "--y0", "0.4", "--format", "json"]);
    let b = singrad(&[
        "run",
        "S3",
        "--phi0",
        "1.5707963267948966",
        "--r0",
        "0.4",
        "--format",
        "json",
    ]);
    let (a, b): (Value, Value) = (
        serde_json::from_str(&stdout(&a)).unwrap(),
        serde_json::from_str(&stdout(&b)).unwrap(),
    );
    let wa = a["trajectory_summary"]["winding"].as_f64().unwrap();
    let wb = b["trajectory_summary"]["winding"].as_f64().unwrap();
    // the two starts differ in the last bit, and the step sequence with them
    assert!((wa - wb).abs() < 1e-6, "{wa} {wb}");
}

#[test]
fn svg_and_out_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, svg) = (dir.path().join("t.csv"), dir.path().join("t.svg"));
    let out = singrad(&[
        "run",
        "S5",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert!(parse_csv(&fs::read_to_string(&csv).unwrap()).len() > 10);
    let svg = fs::read_to_string(&svg).unwrap();
    assert!(
        svg.starts_with("<svg") && svg.contains("<polyline") && svg.matches("<circle").count() == 2
    );
}
