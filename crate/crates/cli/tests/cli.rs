//! End-to-end behavior of the binary: exit codes, output shapes, overrides.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scene_path(dir: &str, name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(dir)
        .join(name)
        .to_str()
        .expect("utf-8 path")
        .to_string()
}

fn corpus(name: &str) -> String {
    scene_path("scenes", name)
}

fn fixture(name: &str) -> String {
    scene_path("fixtures", name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathlift"))
        .args(args)
        .env("PATHLIFT_SEED", "42")
        .output()
        .expect("binary is runnable")
}

fn stdout_of(output: &Output) -> &str {
    std::str::from_utf8(&output.stdout).expect("utf-8 output")
}

fn stderr_of(output: &Output) -> &str {
    std::str::from_utf8(&output.stderr).expect("utf-8 output")
}

#[test]
fn successful_runs_exit_zero() {
    for (subcommand, file) in [
        ("transport", "diagonal-growth.toml"),
        ("solve-section", "section-decay.toml"),
        ("lpath", "flat-line.toml"),
        ("frame", "diagonal-growth.toml"),
        ("holonomy", "rotation-holonomy.toml"),
        ("check", "rotation-holonomy.toml"),
    ] {
        let out = run(&[subcommand, "--scene", &corpus(file)]);
        assert_eq!(out.status.code(), Some(0), "{subcommand}: {}", stderr_of(&out));
    }
}

#[test]
fn validation_problems_exit_one() {
    let out = run(&["transport", "--scene", &fixture("bad-dim.toml")]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("dimension mismatch"), "{}", stderr_of(&out));

    // Holonomy needs a closed path; a straight segment is not one.
    let out = run(&["holonomy", "--scene", &corpus("diagonal-growth.toml")]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));

    // The straightening frame exists only for generator transports.
    let out = run(&["frame", "--scene", &corpus("rotation-holonomy.toml")]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));

    let out = Command::new(env!("CARGO_BIN_EXE_pathlift"))
        .args(["check", "--scene", &corpus("diagonal-growth.toml")])
        .env("PATHLIFT_SEED", "not-a-number")
        .output()
        .expect("binary is runnable");
    assert_eq!(out.status.code(), Some(1), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("PATHLIFT_SEED"), "{}", stderr_of(&out));

    let out = run(&["transport", "--scene", "/nonexistent/scene.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_two() {
    let out = run(&["transport", "--scene", &fixture("pole.toml")]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("division by zero"), "{}", stderr_of(&out));
}

#[test]
fn check_failures_exit_three_and_name_the_law() {
    let out = run(&[
        "check",
        "--scene",
        &corpus("diagonal-growth.toml"),
        "--tolerance",
        "1e-30",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("law 'composition'"), "{}", stderr_of(&out));
    // The report itself still comes out, with the failing laws marked.
    assert!(stdout_of(&out).contains("\"pass\": false"), "{}", stdout_of(&out));
}

#[test]
fn equator_lift_lands_on_the_quarter_turn_endpoint() {
    let out = run(&["lpath", "--scene", &corpus("equator-lift.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,theta,phi,dtheta,dphi"));
    let last = text.lines().last().expect("has rows");
    let cells: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    let half_pi = std::f64::consts::FRAC_PI_2;
    assert!((cells[0] - half_pi).abs() < 1e-12, "parameter end {last}");
    assert!((cells[1] - half_pi).abs() < 1e-6, "theta end {last}");
    assert!((cells[2] - half_pi).abs() < 1e-6, "phi end {last}");
}

#[test]
fn transport_at_the_same_parameter_returns_the_input_verbatim() {
    let out = run(&["transport", "--scene", &corpus("tensor-fixed-point.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    let input = serde_json::to_string(&doc["input"]).unwrap();
    let result = serde_json::to_string(&doc["result"]).unwrap();
    assert_eq!(input, result);
    assert_eq!(input, "[[1.25,-2.5],[0.75,3.0]]");
}

#[test]
fn scalar_tensors_ride_along_unchanged() {
    // Scene asks for CSV, so the document arrives flattened to key,value.
    let out = run(&["transport", "--scene", &corpus("scalar-weight.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.starts_with("key,value\n"), "{text}");
    assert!(text.contains("input,2.5\n"), "{text}");
    assert!(text.contains("result,2.5\n"), "{text}");
}

#[test]
fn latitude_loop_transport_turns_by_the_holonomy_angle() {
    let out = run(&["transport", "--scene", &corpus("latitude-transport.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    let m = &doc["matrix"];
    let trace = m[0][0].as_f64().unwrap() + m[1][1].as_f64().unwrap();
    let angle = (trace / 2.0).clamp(-1.0, 1.0).acos();
    let expected = 2.0 * std::f64::consts::PI * (1.0 - (std::f64::consts::FRAC_PI_4).cos());
    assert!((angle - expected).abs() < 1e-5, "angle {angle}, expected {expected}");
}

#[test]
fn solve_section_tabulates_the_requested_grid() {
    let out = run(&["solve-section", "--scene", &corpus("section-decay.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,sigma1,sigma2");
    assert_eq!(lines.len(), 1 + 41);
    let first: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(&first, &[0.0, 1.0, 0.0]);
}

#[test]
fn format_and_out_flags_override_the_scene() {
    let dir = std::env::temp_dir().join(format!("pathlift-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let dest: PathBuf = dir.join("lift.json");
    let dest_str = dest.to_str().unwrap();

    let out = run(&[
        "lpath",
        "--scene",
        &corpus("flat-line.toml"),
        "--format",
        "json",
        "--out",
        dest_str,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(doc["columns"][0], "s");
    assert_eq!(doc["columns"][1], "x1");
    assert!(doc["rows"].as_array().unwrap().len() > 100);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn steps_can_be_overridden_from_the_command_line() {
    // A coarser step still finds the flat-space straight line exactly.
    let out = run(&[
        "lpath",
        "--scene",
        &corpus("flat-line.toml"),
        "--step",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert_eq!(text.lines().count(), 1 + 21);
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((last[1] - 1.0).abs() < 1e-14, "{last:?}");
    assert!((last[2] - 2.0).abs() < 1e-14, "{last:?}");

    let bad = run(&[
        "lpath",
        "--scene",
        &corpus("flat-line.toml"),
        "--step",
        "-0.1",
    ]);
    assert_eq!(bad.status.code(), Some(1), "{}", stderr_of(&bad));
}

#[test]
fn check_report_honors_scene_tolerance_overrides() {
    let out = run(&["check", "--scene", &corpus("sphere-christoffel.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(stdout_of(&out)).unwrap();
    assert_eq!(doc["samples"], 24);
    let laws = doc["laws"].as_array().unwrap();
    let mutual = laws
        .iter()
        .find(|l| l["law"] == "mutual inverse")
        .expect("mutual inverse law present");
    assert_eq!(mutual["tolerance"], 1e-5);
    assert_eq!(doc["pass"], true);
}
