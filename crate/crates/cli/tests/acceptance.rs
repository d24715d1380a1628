//! Acceptance gate for the scene driver: determinism and round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pathlift::scene::{load_scene, parse_scene, serialize_scene, Encoding, Scene};

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn scene_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/scenes")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathlift"))
        .args(args)
        .env("PATHLIFT_SEED", "42")
        .output()
        .expect("binary is runnable")
}

#[test]
fn criterion_12_cli_determinism_and_scene_round_trip() {
    // Every subcommand, run twice with the same seed, byte for byte.
    let runs = [
        ("transport", "diagonal-growth.toml"),
        ("solve-section", "section-decay.toml"),
        ("lpath", "equator-lift.toml"),
        ("frame", "turning-frame.json"),
        ("holonomy", "rotation-holonomy.toml"),
        ("check", "sphere-christoffel.toml"),
    ];
    let mut all_ran = true;
    let mut all_identical = true;
    let mut failures = Vec::new();
    for (subcommand, file) in runs {
        let path = scene_path(file);
        let path = path.to_str().expect("utf-8 path");
        let first = run(&[subcommand, "--scene", path]);
        let second = run(&[subcommand, "--scene", path]);
        if !(first.status.success() && second.status.success() && !first.stdout.is_empty()) {
            all_ran = false;
            failures.push(format!(
                "{subcommand}: {}",
                String::from_utf8_lossy(&first.stderr).trim()
            ));
        }
        if first.stdout != second.stdout {
            all_identical = false;
            failures.push(format!("{subcommand}: reruns differ"));
        }
    }

    // Every corpus scene reparses to an equal tree, in its own encoding and
    // in the other one.
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/scenes");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("corpus directory")
        .map(|e| e.expect("directory entry").path())
        .collect();
    files.sort();
    let mut round_trips = 0usize;
    let mut all_equal = true;
    for file in &files {
        let (scene, encoding): (Scene, Encoding) = match load_scene(file) {
            Ok(pair) => pair,
            Err(e) => {
                all_equal = false;
                failures.push(format!("{}: {e}", file.display()));
                continue;
            }
        };
        for enc in [encoding, flip(encoding)] {
            let text = serialize_scene(&scene, enc).expect("serializable scene");
            match parse_scene(&text, enc) {
                Ok(again) if again == scene => {}
                _ => {
                    all_equal = false;
                    failures.push(format!("{}: {enc:?} round trip", file.display()));
                }
            }
        }
        round_trips += 1;
    }

    let ok = all_ran && all_identical && all_equal && round_trips == 10;
    println!(
        "criterion 12 | cli determinism and scene round-trip | {} | {} subcommands byte-identical across seeded reruns, {} scenes reparse to equal trees in both encodings",
        verdict(ok),
        runs.len(),
        round_trips
    );
    assert!(ok, "{failures:?}");
}

fn flip(encoding: Encoding) -> Encoding {
    match encoding {
        Encoding::Toml => Encoding::Json,
        Encoding::Json => Encoding::Toml,
    }
}
