//! The law suite behind the `check` subcommand.
//!
//! Each law gets a measured worst deviation and a tolerance. Tolerances
//! resolve in order: the `--tolerance` flag (applies to every law), then
//! the scene's `[checks.tolerances]` table, then defaults. Defaults depend
//! on how the transport matrices are produced: integrated families carry
//! integration error, so their matrix-level laws get looser bounds than
//! closed-form ones.

use pathlift_core::derivation::solve_transport_equation;
use pathlift_core::linalg::Matrix;
use pathlift_core::lpath::{lpath_residual, solve_lpath};
use pathlift_core::tensor::{
    check_consistency, TensorTransportRule, LAW_CONTRACTION, LAW_MUTUAL_INVERSE, LAW_PRODUCT,
    LAW_SCALAR_COMPOSITION, LAW_SCALAR_FIXED, LAW_SCALAR_IDENTITY,
};
use pathlift_core::transport::{change_transport_frame, special_frame, transport_vector, Provenance};
use pathlift_core::{Error, LPathProblem64, LPathSolution64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::builder::{SceneObjects, TransportLaw};
use crate::scene::Scene;

pub const LAW_IDENTITY: &str = "round-trip identity";
pub const LAW_COMPOSITION: &str = "composition";
pub const LAW_SECTION: &str = "section transport agreement";
pub const LAW_FRAME: &str = "frame straightening";
pub const LAW_RESIDUAL: &str = "lift residual";

const DEFAULT_SAMPLES: usize = 40;

#[derive(Clone, Debug)]
pub struct LawOutcome {
    pub law: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub seed: u64,
    pub samples: usize,
    pub laws: Vec<LawOutcome>,
}

impl CheckReport {
    pub fn failing(&self) -> Option<&LawOutcome> {
        self.laws.iter().find(|l| !l.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "samples": self.samples,
            "pass": self.failing().is_none(),
            "laws": self
                .laws
                .iter()
                .map(|l| {
                    json!({
                        "law": l.law,
                        "deviation": l.deviation,
                        "tolerance": l.tolerance,
                        "pass": l.pass,
                    })
                })
                .collect::<Vec<Value>>(),
        })
    }
}

struct Tolerances<'a> {
    flag: Option<f64>,
    scene: Option<&'a std::collections::BTreeMap<String, f64>>,
    provenance: Provenance,
    step: f64,
}

impl Tolerances<'_> {
    fn for_law(&self, law: &str) -> f64 {
        if let Some(t) = self.flag {
            return t;
        }
        if let Some(t) = self.scene.and_then(|m| m.get(law)) {
            return *t;
        }
        default_tolerance(law, self.provenance, self.step)
    }
}

/// Documented defaults for every law the suite can run.
pub fn default_tolerance(law: &str, provenance: Provenance, step: f64) -> f64 {
    let integrated = provenance == Provenance::OdeIntegrated;
    match law {
        LAW_IDENTITY | LAW_COMPOSITION => {
            if integrated {
                1e-6
            } else {
                1e-10
            }
        }
        LAW_SCALAR_IDENTITY | LAW_SCALAR_COMPOSITION | LAW_SCALAR_FIXED => 1e-12,
        LAW_PRODUCT | LAW_CONTRACTION | LAW_MUTUAL_INVERSE => {
            if integrated {
                1e-6
            } else {
                1e-9
            }
        }
        LAW_SECTION => {
            if integrated {
                1e-6
            } else {
                1e-8
            }
        }
        LAW_FRAME => 1e-8,
        // The lift integrator is fourth order; this bound is deliberately
        // slack so it flags wrong equations, not integration noise.
        LAW_RESIDUAL => 10.0 * step * step,
        other => panic!("no default tolerance for law '{other}'"),
    }
}

/// Runs every law the scene supports. Scenes with a path get the transport
/// laws along it; scenes with an `[lpath]` section get the lift residual;
/// a scene with neither has nothing to verify, which is an input error.
pub fn run_checks(
    scene: &Scene,
    objects: &SceneObjects,
    seed: u64,
    flag_tolerance: Option<f64>,
) -> Result<CheckReport> {
    let checks = scene.checks.as_ref();
    let samples = checks.and_then(|c| c.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples < 2 {
        return Err(Error::InvalidInput(
            "checks.samples must be at least 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut laws: Vec<LawOutcome> = Vec::new();

    let provenance = match &objects.law {
        TransportLaw::Generator(_) => Provenance::FromGenerator,
        _ => Provenance::OdeIntegrated,
    };
    let tol = Tolerances {
        flag: flag_tolerance,
        scene: checks.and_then(|c| c.tolerances.as_ref()),
        provenance,
        step: objects.step,
    };
    let record = |laws: &mut Vec<LawOutcome>, law: &str, deviation: f64| {
        let tolerance = tol.for_law(law);
        laws.push(LawOutcome {
            law: law.to_string(),
            deviation,
            tolerance,
            pass: deviation <= tolerance,
        });
    };

    if objects.path.is_some() {
        let family = objects.family()?;
        let (a, b) = family.path().domain();
        let eye = Matrix::identity(objects.fiber_dim);

        let mut composition: f64 = 0.0;
        let mut identity: f64 = 0.0;
        for _ in 0..samples {
            let r = rng.gen_range(a..b);
            let s = rng.gen_range(a..b);
            let t = rng.gen_range(a..b);
            let joined = family.matrix(r, t)?.mul(&family.matrix(t, s)?)?;
            composition = composition.max(joined.distance_max(&family.matrix(r, s)?)?);
            let round_trip = family.matrix(s, t)?.mul(&family.matrix(t, s)?)?;
            identity = identity.max(round_trip.distance_max(&eye)?);
        }
        record(&mut laws, LAW_COMPOSITION, composition);
        record(&mut laws, LAW_IDENTITY, identity);

        let rule = TensorTransportRule::consistent(&family);
        let report = check_consistency(&rule, &mut rng, samples)?;
        for law in &report.laws {
            record(&mut laws, law.law, law.max_deviation);
        }

        let coef = objects.coefficients()?;
        let s0 = scene.task.s0.unwrap_or(a);
        let start = match &scene.task.vector {
            Some(v) => {
                if v.len() != objects.fiber_dim {
                    return Err(Error::DimensionMismatch {
                        context: "task vector",
                        expected: objects.fiber_dim,
                        found: v.len(),
                    });
                }
                v.clone()
            }
            None => vec![1.0; objects.fiber_dim],
        };
        let grid = uniform_grid(a, b, 81);
        let solution = solve_transport_equation(&coef, s0, &start, &grid, objects.step)?;
        let mut section: f64 = 0.0;
        for (si, got) in solution.samples() {
            let want = transport_vector(&family, *si, s0, &start)?;
            for (g, w) in got.iter().zip(&want) {
                section = section.max((g - w).abs());
            }
        }
        record(&mut laws, LAW_SECTION, section);

        if matches!(objects.law, TransportLaw::Generator(_)) {
            let frame = special_frame(&objects.generator()?);
            let straightened = change_transport_frame(&family, &frame)?;
            let mut deviation: f64 = 0.0;
            for _ in 0..samples {
                let t = rng.gen_range(a..b);
                let s = rng.gen_range(a..b);
                deviation = deviation.max(straightened.matrix(t, s)?.distance_max(&eye)?);
            }
            record(&mut laws, LAW_FRAME, deviation);
        }
    }

    if let Some(spec) = &scene.lpath {
        let problem = objects.lpath_problem(spec)?;
        let solution = complete_lift(&problem, objects.step)?;
        let domain = objects.lpath_domain(spec)?;
        let residual = lpath_residual(&solution, &objects.provider(domain)?)?;
        record(&mut laws, LAW_RESIDUAL, residual.max_residual);
    }

    if laws.is_empty() {
        return Err(Error::InvalidInput(
            "scene gives check nothing to verify: add a [path] or an [lpath] section".into(),
        ));
    }
    Ok(CheckReport {
        seed,
        samples,
        laws,
    })
}

pub(crate) fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

/// Solves a lift and insists it covered its whole domain. Leaving the
/// chart is a numerical failure, reported with the parameter reached.
pub(crate) fn complete_lift(problem: &LPathProblem64, step: f64) -> Result<LPathSolution64> {
    let solution = solve_lpath(problem, step)?;
    if solution.truncated() {
        let stop = solution.last().s;
        return Err(Error::Evaluation(format!(
            "path lift left the chart near s = {stop}"
        )));
    }
    Ok(solution)
}
