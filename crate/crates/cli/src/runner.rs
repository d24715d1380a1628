//! Argument parsing, subcommand dispatch, and exit codes.
//!
//! Exit codes: 0 on success, 1 for validation problems (bad arguments,
//! malformed scenes, dimension mismatches), 2 for numerical failures
//! (singular or ill-conditioned matrices, step limits, evaluation errors,
//! truncated lifts), 3 when the check suite finds a violated law.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pathlift_core::linalg::Matrix;
use pathlift_core::tensor::{transport_tensor, TensorTransportRule};
use pathlift_core::transport::{change_transport_frame, holonomy, special_frame, transport_vector};
use pathlift_core::derivation::solve_transport_equation;
use pathlift_core::{defaults, Error, Result};
use serde_json::{json, Value};

use crate::builder::{build, SceneObjects};
use crate::checks::{complete_lift, run_checks, uniform_grid, LawOutcome};
use crate::output::{deliver, json_matrix, json_tensor, Payload};
use crate::scene::{load_scene, Format, Scene};

#[derive(Parser)]
#[command(
    name = "pathlift",
    version,
    about = "Linear transports along paths: declarative scenes in, trajectories and law reports out"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transport a vector or tensor between two path parameters.
    Transport(TaskArgs),
    /// Integrate the transport equation and tabulate the section.
    SolveSection(TaskArgs),
    /// Lift a path from initial data by the straightness condition.
    Lpath(TaskArgs),
    /// Report the straightening frame of a generator transport.
    Frame(TaskArgs),
    /// Transport around a closed path.
    Holonomy(TaskArgs),
    /// Run the law suite against the scene.
    Check(TaskArgs),
}

impl Command {
    fn args(&self) -> &TaskArgs {
        match self {
            Command::Transport(a)
            | Command::SolveSection(a)
            | Command::Lpath(a)
            | Command::Frame(a)
            | Command::Holonomy(a)
            | Command::Check(a) => a,
        }
    }
}

#[derive(Args)]
struct TaskArgs {
    /// Scene file, .toml or .json.
    #[arg(long)]
    scene: PathBuf,

    /// Integration step override.
    #[arg(long)]
    step: Option<f64>,

    /// Write here instead of the scene's destination or stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output encoding override.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// One tolerance for every law in check.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(None) => 0,
        Ok(Some(broken)) => {
            eprintln!(
                "check failed: law '{}' deviated by {:e}, tolerance {:e}",
                broken.law, broken.deviation, broken.tolerance
            );
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

/// Runs one subcommand. `Ok(Some(law))` means the output was delivered but
/// the check suite found that law violated.
fn execute(cli: Cli) -> Result<Option<LawOutcome>> {
    let args = cli.command.args();
    let (scene, _encoding) = load_scene(&args.scene).map_err(Error::InvalidInput)?;
    let step = args.step.or(scene.task.step).unwrap_or(defaults::ODE_STEP);
    let objects = build(&scene, step)?;

    let mut failing = None;
    let payload = match &cli.command {
        Command::Transport(_) => transport_payload(&scene, &objects)?,
        Command::SolveSection(_) => solve_section_payload(&scene, &objects)?,
        Command::Lpath(_) => lpath_payload(&scene, &objects)?,
        Command::Frame(_) => frame_payload(&objects)?,
        Command::Holonomy(_) => holonomy_payload(&objects)?,
        Command::Check(_) => {
            let report = run_checks(&scene, &objects, seed_from_env()?, args.tolerance)?;
            failing = report.failing().cloned();
            Payload::Document(report.to_json())
        }
    };

    let scene_output = scene.output.as_ref();
    let format = args
        .format
        .map(Format::from)
        .or_else(|| scene_output.and_then(|o| o.format))
        .unwrap_or_else(|| payload.default_format());
    let destination = args
        .out
        .clone()
        .or_else(|| scene_output.and_then(|o| o.destination.clone()).map(PathBuf::from));
    deliver(&payload.render(format), destination.as_deref())?;
    Ok(failing)
}

/// Seed for randomized checks, from `PATHLIFT_SEED`; 42 when unset.
fn seed_from_env() -> Result<u64> {
    match std::env::var("PATHLIFT_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            Error::InvalidInput(format!(
                "PATHLIFT_SEED must be an unsigned integer, got '{text}'"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(42),
        Err(e) => Err(Error::InvalidInput(format!("PATHLIFT_SEED: {e}"))),
    }
}

fn transport_payload(scene: &Scene, objects: &SceneObjects) -> Result<Payload> {
    let (a, b) = objects.require_path()?.domain();
    let s0 = scene.task.s0.unwrap_or(a);
    let t = scene.task.t.unwrap_or(b);
    let family = objects.family()?;
    let mut doc = json!({
        "from": s0,
        "to": t,
        "provenance": family.provenance().label(),
    });
    match (&scene.task.tensor, &scene.task.vector) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "task gives both a vector and a tensor; transport takes one".into(),
            ))
        }
        (None, None) => {
            doc["matrix"] = json_matrix(&family.matrix(t, s0)?);
        }
        (None, Some(v)) => {
            if v.len() != objects.fiber_dim {
                return Err(Error::DimensionMismatch {
                    context: "task vector",
                    expected: objects.fiber_dim,
                    found: v.len(),
                });
            }
            doc["matrix"] = json_matrix(&family.matrix(t, s0)?);
            doc["input"] = Value::from(v.clone());
            doc["result"] = Value::from(transport_vector(&family, t, s0, v)?);
        }
        (Some(spec), None) => {
            let rule = TensorTransportRule::consistent(&family);
            let input = objects.tensor(spec, s0)?;
            let moved = transport_tensor(&rule, &input, t, s0)?;
            doc["p"] = Value::from(spec.p);
            doc["q"] = Value::from(spec.q);
            doc["input"] = json_tensor(&input);
            doc["result"] = json_tensor(&moved);
        }
    }
    Ok(Payload::Document(doc))
}

fn solve_section_payload(scene: &Scene, objects: &SceneObjects) -> Result<Payload> {
    if scene.task.tensor.is_some() {
        return Err(Error::InvalidInput(
            "solve-section integrates vector sections; tensor tasks belong to transport".into(),
        ));
    }
    let (a, b) = objects.require_path()?.domain();
    let coef = objects.coefficients()?;
    let s0 = scene.task.s0.unwrap_or(a);
    let start = scene.task.vector.as_ref().ok_or_else(|| {
        Error::InvalidInput("solve-section needs task.vector as initial data".into())
    })?;
    if start.len() != objects.fiber_dim {
        return Err(Error::DimensionMismatch {
            context: "task vector",
            expected: objects.fiber_dim,
            found: start.len(),
        });
    }
    let n = scene.task.grid.unwrap_or(101);
    if n < 2 {
        return Err(Error::InvalidInput("task.grid must be at least 2".into()));
    }
    let grid = uniform_grid(a, b, n);
    let solution = solve_transport_equation(&coef, s0, start, &grid, objects.step)?;

    let mut columns = vec!["s".to_string()];
    columns.extend((1..=objects.fiber_dim).map(|i| format!("sigma{i}")));
    let rows = solution
        .samples()
        .iter()
        .map(|(s, components)| {
            let mut row = Vec::with_capacity(1 + components.len());
            row.push(*s);
            row.extend_from_slice(components);
            row
        })
        .collect();
    Ok(Payload::Table { columns, rows })
}

fn lpath_payload(scene: &Scene, objects: &SceneObjects) -> Result<Payload> {
    let spec = scene.lpath.as_ref().ok_or_else(|| {
        Error::InvalidInput("this task needs an [lpath] section in the scene".into())
    })?;
    let problem = objects.lpath_problem(spec)?;
    let solution = complete_lift(&problem, objects.step)?;

    let mut columns = vec!["s".to_string()];
    columns.extend(objects.axes.iter().cloned());
    columns.extend(objects.axes.iter().map(|axis| format!("d{axis}")));
    let rows = solution
        .samples()
        .iter()
        .map(|sample| {
            let mut row = Vec::with_capacity(1 + 2 * objects.chart.dim());
            row.push(sample.s);
            row.extend_from_slice(&sample.position);
            row.extend_from_slice(&sample.velocity);
            row
        })
        .collect();
    Ok(Payload::Table { columns, rows })
}

fn frame_payload(objects: &SceneObjects) -> Result<Payload> {
    let generator = objects.generator()?;
    let frame = special_frame(&generator);
    let family = objects.family()?;
    let straightened = change_transport_frame(&family, &frame)?;
    let (a, b) = objects.require_path()?.domain();
    let grid = uniform_grid(a, b, 9);
    let eye = Matrix::identity(objects.fiber_dim);

    let mut worst: f64 = 0.0;
    for &t in &grid {
        for &s in &grid {
            worst = worst.max(straightened.matrix(t, s)?.distance_max(&eye)?);
        }
    }
    let samples = grid
        .iter()
        .map(|&s| Ok(json!({ "s": s, "basis": json_matrix(&frame.basis(s)?) })))
        .collect::<Result<Vec<Value>>>()?;
    Ok(Payload::Document(json!({
        "samples": samples,
        "straightened_deviation": worst,
        "provenance": family.provenance().label(),
    })))
}

fn holonomy_payload(objects: &SceneObjects) -> Result<Payload> {
    let family = objects.family()?;
    let loop_transport = holonomy(&family)?;
    let gap = objects.require_path()?.closure_gap()?;
    let mut doc = json!({
        "matrix": json_matrix(&loop_transport),
        "closure_gap": gap,
        "provenance": family.provenance().label(),
    });
    if objects.fiber_dim == 2 {
        let trace = loop_transport[(0, 0)] + loop_transport[(1, 1)];
        let det = loop_transport[(0, 0)] * loop_transport[(1, 1)]
            - loop_transport[(0, 1)] * loop_transport[(1, 0)];
        doc["trace"] = Value::from(trace);
        doc["determinant"] = Value::from(det);
        // For a rotation this is the unsigned angle; meaningful only when
        // the determinant is close to one.
        doc["rotation_angle"] = Value::from((trace / 2.0).clamp(-1.0, 1.0).acos());
    }
    Ok(Payload::Document(doc))
}
