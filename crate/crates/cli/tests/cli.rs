use std::path::Path;
use std::process::{Command, Output};

use charentropy::io::{jumps_to_json, write_section_csv};
use charentropy::model::{Grid2, JumpCurve};
use charentropy::PiecewiseSection;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_charentropy"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("ndjson line"))
        .collect()
}

/// Stationary or moving two-state shock section plus its jump descriptor.
fn write_shock(dir: &Path, ul: f64, ur: f64, speed: f64) -> (String, String) {
    let grid = Grid2::covering(-0.5, 0.5, 60, 0.0, 1.0, 60).unwrap();
    let jump = JumpCurve::straight(0.0, 0.0, speed, 1.0, ul, ur).unwrap();
    let sec = PiecewiseSection::sample(grid, vec![jump.clone()], |x, t| if x < speed * t { ul } else { ur }).unwrap();
    let s = dir.join("section.csv");
    let j = dir.join("jumps.json");
    write_section_csv(&sec, std::fs::File::create(&s).unwrap()).unwrap();
    std::fs::write(&j, jumps_to_json(&[jump]).unwrap()).unwrap();
    (s.display().to_string(), j.display().to_string())
}

#[test]
fn check_jump_exit_codes() {
    let ok = run(&["check-jump", "--model", "flat_projective", "--jump", "0,0", "--nu", "1,0", "--ul", "1", "--ur", "-1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(lines(&ok)[0]["entropic"], Value::Bool(true));
    let bad = run(&["check-jump", "--jump", "0,0", "--nu", "1,0", "--ul", "-1", "--ur", "1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(lines(&bad)[0]["entropic"], Value::Bool(false));
}

#[test]
fn invalid_input_exits_with_two() {
    let missing = run(&["check-jump", "--model", "/nonexistent/m.toml", "--jump", "0,0", "--nu", "1,0", "--ul", "1", "--ur", "0"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(run(&["check-jump", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let equal = run(&["check-jump", "--jump", "0,0", "--nu", "1,0", "--ul", "1", "--ur", "1"]);
    assert_eq!(equal.status.code(), Some(2));
    let threads = bin().env("CHARENTROPY_THREADS", "many").args(["integrability", "--grid", "3"]).output().unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn model_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.toml");
    std::fs::write(
        &m,
        "[model]\nm = 2\nname = \"burgers\"\ndomain = { lo = [-2.0, -2.0, -2.0], hi = [2.0, 2.0, 2.0] }\n\n\
         [[flux.x]]\ncoef = 0.5\npowers = [0, 0, 2]\n\n[[flux.t]]\ncoef = 1.0\npowers = [0, 0, 1]\n",
    )
    .unwrap();
    let out = run(&["check-jump", "--model", m.to_str().unwrap(), "--jump", "0,0", "--nu", "1,-0.5", "--ul", "1", "--ur", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m3 = dir.path().join("m3.toml");
    std::fs::write(&m3, "[model]\nm = 3\nbuiltin = \"flat_projective\"\n").unwrap();
    let out = run(&["integrability", "--model", m3.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_section_flags_the_wrong_shock() {
    let dir = tempfile::tempdir().unwrap();
    let (s, j) = write_shock(dir.path(), 1.0, 0.0, 0.5);
    let good = run(&["verify-section", "--section", &s, "--jumps", &j]);
    assert_eq!(good.status.code(), Some(0), "{}", String::from_utf8_lossy(&good.stdout));
    let report = lines(&good);
    assert!(report.iter().any(|l| l["check"] == "weak_rh"));
    assert!(report.iter().any(|l| l["check"] == "entropy"));
    assert!(report.iter().any(|l| l["check"] == "jump"));

    let (s, j) = write_shock(dir.path(), 0.0, 1.0, 0.5);
    let bad = run(&["verify-section", "--section", &s, "--jumps", &j]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(lines(&bad).iter().any(|l| l["check"] == "entropy" && l["pass"] == Value::Bool(false)));
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (s, j) = write_shock(dir.path(), 1.0, -0.5, 0.25);
    let a = run(&["verify-section", "--section", &s, "--jumps", &j, "--seed", "7"]);
    let b = bin()
        .env("CHARENTROPY_THREADS", "1")
        .args(["verify-section", "--section", &s, "--jumps", &j, "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn volpert_identity_on_a_shock() {
    let dir = tempfile::tempdir().unwrap();
    let (s, j) = write_shock(dir.path(), 1.0, 0.0, 0.5);
    let out = run(&["volpert", "--section", &s, "--jumps", &j, "--phi", "0.1,0.5,0.3,0.3", "--theta", "0.4,0.5", "--tol", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let l = &lines(&out)[0];
    assert!(l["difference"].as_f64().unwrap() < 1e-3);
}

#[test]
fn riemann_and_solve_write_csv() {
    let out = run(&["riemann", "--ul", "0", "--ur", "1", "--T", "1", "--nx", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    // Rarefaction u = x/t between 0 and 1.
    assert!((rows[3][1] - 0.5).abs() < 1e-12 && rows[0][1] == 0.0 && rows[4][1] == 1.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.csv");
    let out = run(&["solve", "--u0", "sin(3.141592653589793*x)", "--T", "0.2", "--nx", "40", "--boundary", "periodic", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sec = charentropy::io::load_section(&path, None).unwrap();
    assert_eq!(sec.grid.nx, 40);
}

#[test]
fn trace_follows_the_straight_characteristic() {
    let out = run(&["trace", "--from", "0,0,0.5", "--span", "1", "--step", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 0.5).abs() < 1e-12 && (last[2] - 1.0).abs() < 1e-12 && last[3] == 0.5);
}

#[test]
fn oriented_and_separability_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("f.csv");
    let ok = run(&["oriented-test", "--weight", "exp(-x-t)", "--grid-out", grid.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(std::fs::read_to_string(&grid).unwrap().starts_with("x,t,f"));
    let no = run(&["oriented-test", "--scale", "1+x^2+y^2"]);
    assert_eq!(no.status.code(), Some(1));
    assert!(lines(&no)[0]["residual"].as_f64().unwrap() >= 1e-2);
    assert_eq!(run(&["separability", "--f", "exp(y)*exp(x+t)"]).status.code(), Some(0));
    assert_eq!(run(&["separability", "--f", "exp(x*y)"]).status.code(), Some(1));
}

#[test]
fn build_claw_recovers_burgers_on_a_coarse_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("alpha.csv");
    let out = run(&["build-claw", "--spacing", "0.075", "--grid-out", grid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = lines(&out);
    assert_eq!(report.len(), 3);
    assert_eq!(report[2]["nondegenerate"], Value::Bool(true));
    let text = std::fs::read_to_string(&grid).unwrap();
    for l in text.lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[3] + v[2]).abs() < 5e-3 && (v[4] - 0.5 * v[2] * v[2]).abs() < 5e-3);
    }
}
