//! Scene files: one declarative schema, two encodings.
//!
//! A scene is a tree of sections (chart, path, transport, task, checks,
//! output) whose leaves are numbers, names, and expression strings. TOML is
//! the primary encoding; a `.json` file carries the identical tree. Parsing
//! then serializing then reparsing yields an equal [`Scene`], which is what
//! the round-trip tests pin down.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub chart: ChartSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSpec>,
    pub transport: TransportSpec,
    #[serde(default, skip_serializing_if = "TaskSpec::is_default")]
    pub task: TaskSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpath: Option<LPathSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

/// Coordinate chart the scene works in. `kind` is `"euclidean"` (any
/// dimension, coordinates `x1..xn`) or `"unit-sphere-polar"` (dimension 2,
/// coordinates `theta`, `phi`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// Base path, componentwise expressions in the parameter `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub domain: [f64; 2],
    pub position: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<String>>,
}

/// Transport law. `kind` selects which other fields apply:
///
/// * `"generator"`: `matrix` holds frame entries, expressions in `s`.
/// * `"coefficients"`: `matrix` holds coefficient entries, expressions in
///   `s`, `x1..xn` (or `theta`, `phi`), and `v1..vn`.
/// * `"connection"`: either a named preset in `connection` or per-index
///   symbols in `christoffel`, expressions in the chart coordinates only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub christoffel: Option<Vec<Vec<Vec<String>>>>,
}

/// What to compute. Unset fields fall back to subcommand defaults: `s0` to
/// the start of the path domain, `t` to its end, `step` to `1e-3`, `grid`
/// to 101 samples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<TensorSpec>,
}

impl TaskSpec {
    fn is_default(&self) -> bool {
        *self == TaskSpec::default()
    }
}

/// Tensor literal as nested arrays of reals: the outermost index is the
/// first upper slot, uppers precede lowers, each level has chart-dimension
/// entries. A rank-zero tensor is a bare number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub p: usize,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<f64>,
    pub components: NestedReal,
}

/// Arbitrary-depth nesting of real arrays; the leaves are the components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NestedReal {
    Leaf(f64),
    Node(Vec<NestedReal>),
}

impl NestedReal {
    /// Flattens row-major after checking the shape is a full `rank`-deep
    /// cube of side `dim`.
    pub fn flatten(&self, rank: usize, dim: usize) -> Result<Vec<f64>, String> {
        let mut out = Vec::new();
        self.collect(rank, dim, &mut out)?;
        Ok(out)
    }

    fn collect(&self, rank: usize, dim: usize, out: &mut Vec<f64>) -> Result<(), String> {
        match (self, rank) {
            (NestedReal::Leaf(v), 0) => {
                out.push(*v);
                Ok(())
            }
            (NestedReal::Node(items), r) if r > 0 => {
                if items.len() != dim {
                    return Err(format!(
                        "tensor literal level has {} entries, chart dimension is {dim}",
                        items.len()
                    ));
                }
                for item in items {
                    item.collect(r - 1, dim, out)?;
                }
                Ok(())
            }
            (NestedReal::Leaf(_), _) => {
                Err("tensor literal is shallower than its rank".to_string())
            }
            (NestedReal::Node(_), _) => {
                Err("tensor literal is deeper than its rank".to_string())
            }
        }
    }
}

/// Initial data for a path-lifting problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LPathSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    pub s0: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
}

/// Overrides for the law suite the `check` subcommand runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<BTreeMap<String, f64>>,
}

/// Where results go and how they are encoded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Format::Csv => write!(f, "csv"),
            Format::Json => write!(f, "json"),
        }
    }
}

/// Encoding of a scene file, decided by its extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Toml,
    Json,
}

pub fn encoding_for(path: &Path) -> Encoding {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Encoding::Json,
        _ => Encoding::Toml,
    }
}

pub fn parse_scene(text: &str, encoding: Encoding) -> Result<Scene, String> {
    match encoding {
        Encoding::Toml => toml::from_str(text).map_err(|e| e.to_string()),
        Encoding::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
    }
}

pub fn serialize_scene(scene: &Scene, encoding: Encoding) -> Result<String, String> {
    match encoding {
        Encoding::Toml => toml::to_string_pretty(scene).map_err(|e| e.to_string()),
        Encoding::Json => {
            serde_json::to_string_pretty(scene).map_err(|e| e.to_string())
        }
    }
}

pub fn load_scene(path: &Path) -> Result<(Scene, Encoding), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let encoding = encoding_for(path);
    let scene = parse_scene(&text, encoding)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((scene, encoding))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_scene_toml() -> &'static str {
        r#"
name = "equator-lift"

[chart]
kind = "unit-sphere-polar"

[transport]
kind = "connection"
connection = "unit-sphere"

[task]
step = 1e-3

[lpath]
domain = [0.0, 1.5707963267948966]
s0 = 0.0
x0 = [1.5707963267948966, 0.0]
v0 = [0.0, 1.0]
"#
    }

    #[test]
    fn toml_scene_round_trips_to_an_equal_tree() {
        let scene = parse_scene(sphere_scene_toml(), Encoding::Toml).unwrap();
        let text = serialize_scene(&scene, Encoding::Toml).unwrap();
        let again = parse_scene(&text, Encoding::Toml).unwrap();
        assert_eq!(scene, again);
    }

    #[test]
    fn json_is_an_alternate_encoding_of_the_same_tree() {
        let scene = parse_scene(sphere_scene_toml(), Encoding::Toml).unwrap();
        let json = serialize_scene(&scene, Encoding::Json).unwrap();
        let again = parse_scene(&json, Encoding::Json).unwrap();
        assert_eq!(scene, again);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"
[chart]
kind = "euclidean"
dim = 2
curvature = 1.0

[transport]
kind = "generator"
matrix = [["exp(s)", "0"], ["0", "exp(2*s)"]]
"#;
        let err = parse_scene(text, Encoding::Toml).unwrap_err();
        assert!(err.contains("curvature"), "{err}");
    }

    #[test]
    fn tensor_literals_flatten_row_major() {
        let spec: TensorSpec = serde_json::from_str(
            r#"{"p": 1, "q": 1, "components": [[1.0, 2.0], [3.0, 4.0]]}"#,
        )
        .unwrap();
        assert_eq!(
            spec.components.flatten(2, 2).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn rank_zero_tensor_is_a_bare_number() {
        let spec: TensorSpec =
            serde_json::from_str(r#"{"p": 0, "q": 0, "components": 2.5}"#).unwrap();
        assert_eq!(spec.components.flatten(0, 3).unwrap(), vec![2.5]);
    }

    #[test]
    fn ragged_or_misranked_literals_are_rejected() {
        let ragged = NestedReal::Node(vec![
            NestedReal::Node(vec![NestedReal::Leaf(1.0), NestedReal::Leaf(2.0)]),
            NestedReal::Node(vec![NestedReal::Leaf(3.0)]),
        ]);
        assert!(ragged.flatten(2, 2).is_err());
        let shallow = NestedReal::Leaf(1.0);
        assert!(shallow.flatten(1, 2).is_err());
        let deep = NestedReal::Node(vec![NestedReal::Leaf(1.0), NestedReal::Leaf(2.0)]);
        assert!(deep.flatten(0, 2).is_err());
    }

    #[test]
    fn encoding_follows_the_file_extension() {
        assert_eq!(encoding_for(Path::new("a/scene.json")), Encoding::Json);
        assert_eq!(encoding_for(Path::new("a/scene.toml")), Encoding::Toml);
        assert_eq!(encoding_for(Path::new("scene")), Encoding::Toml);
    }
}
