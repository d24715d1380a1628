//! Turns a parsed [`Scene`] into live objects from the core crate.
//!
//! Everything dimensional is validated here, before any numerics run:
//! expression syntax and variable scopes, matrix shapes, chart and fiber
//! dimensions, tensor literal shapes. Expression evaluation failures inside
//! closures surface later as evaluation errors, which the driver maps to
//! the numerical-failure exit code.

use std::sync::Arc;

use pathlift_core::geometry::{flat_chart, sphere_chart, Coeffs3, ConnectionField, PathCurve};
use pathlift_core::linalg::Matrix;
use pathlift_core::lpath::{geodesic_provider, CoefficientProvider, LPathProblem};
use pathlift_core::transport::{CoefficientField, TransportGenerator, TransportMatrixFamily};
use pathlift_core::{
    Chart64, Coefficients64, Error, Family64, Generator64, LPathProblem64, Matrix64, Path64,
    Result, Tensor64,
};

use crate::expr::{self, Expr};
use crate::scene::{ChartSpec, LPathSpec, PathSpec, Scene, TensorSpec, TransportSpec};

/// A scene resolved against the core crate, minus the task-specific parts.
pub struct SceneObjects {
    pub chart: Chart64,
    /// Column names for the chart coordinates, used in tabular output.
    pub axes: Vec<String>,
    pub fiber_dim: usize,
    pub path: Option<Path64>,
    pub law: TransportLaw,
    pub step: f64,
}

/// The transport law a scene declares, kept symbolic until a consumer fixes
/// the path or domain it acts along.
pub enum TransportLaw {
    /// Frame matrix `F(s)`, entries as expressions in `s`.
    Generator(Arc<Vec<Vec<Expr>>>),
    /// Coefficient matrix, entries as expressions in `s`, `x1..xn`, `v1..vn`.
    Coefficients(Arc<Vec<Vec<Expr>>>),
    /// Connection coefficients over the chart.
    Connection(ConnectionField<f64>),
}

impl TransportLaw {
    pub fn kind(&self) -> &'static str {
        match self {
            TransportLaw::Generator(_) => "generator",
            TransportLaw::Coefficients(_) => "coefficients",
            TransportLaw::Connection(_) => "connection",
        }
    }
}

pub fn build(scene: &Scene, step: f64) -> Result<SceneObjects> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidStep {
            step,
            reason: "must be positive and finite",
        });
    }
    let (chart, axes) = build_chart(&scene.chart)?;
    let dim = chart.dim();
    let path = match &scene.path {
        Some(spec) => Some(build_path(spec, dim)?),
        None => None,
    };
    let (law, fiber_dim) = build_transport(&scene.transport, &chart)?;
    Ok(SceneObjects {
        chart,
        axes,
        fiber_dim,
        path,
        law,
        step,
    })
}

impl SceneObjects {
    pub fn require_path(&self) -> Result<&Path64> {
        self.path.as_ref().ok_or_else(|| {
            Error::InvalidInput("this task needs a [path] section in the scene".into())
        })
    }

    /// The frame field `F(s)`, available only for generator scenes.
    pub fn generator(&self) -> Result<Generator64> {
        let TransportLaw::Generator(entries) = &self.law else {
            return Err(Error::InvalidInput(format!(
                "this task needs transport kind \"generator\", scene has \"{}\"",
                self.law.kind()
            )));
        };
        let path = self.require_path()?.clone();
        generator_over(entries.clone(), path, self.fiber_dim)
    }

    /// The coefficient field along the scene's path.
    pub fn coefficients(&self) -> Result<Coefficients64> {
        let path = self.require_path()?;
        match &self.law {
            TransportLaw::Generator(_) => {
                Ok(CoefficientField::from_generator(&self.generator()?))
            }
            TransportLaw::Coefficients(entries) => {
                let entries = entries.clone();
                let along = path.clone();
                Ok(CoefficientField::try_new(
                    path.clone(),
                    self.fiber_dim,
                    move |s: f64| {
                        let x = along.position(s)?;
                        let v = along.velocity(s)?;
                        let vars = bind_sxv(s, &x, &v);
                        eval_matrix(&entries, &vars)
                    },
                ))
            }
            TransportLaw::Connection(conn) => CoefficientField::from_connection(conn, path),
        }
    }

    /// The two-point family `H(t, s)` along the scene's path.
    pub fn family(&self) -> Result<Family64> {
        match &self.law {
            TransportLaw::Generator(_) => {
                Ok(TransportMatrixFamily::from_generator(self.generator()?))
            }
            _ => TransportMatrixFamily::from_coefficients(self.coefficients()?, self.step),
        }
    }

    /// Coefficient provider for path lifting, as a function of parameter,
    /// position, and velocity.
    pub fn provider(&self, domain: (f64, f64)) -> Result<CoefficientProvider<f64>> {
        match &self.law {
            TransportLaw::Coefficients(entries) => {
                let entries = entries.clone();
                Ok(Arc::new(move |s: f64, x: &[f64], v: &[f64]| {
                    eval_matrix(&entries, &bind_sxv(s, x, v))
                }))
            }
            TransportLaw::Connection(conn) => Ok(geodesic_provider(conn)),
            TransportLaw::Generator(entries) => {
                // Coefficients of a generator depend on the parameter alone,
                // so anchor them to a trivial path over the lift's domain.
                let anchor = PathCurve::from_fn(domain, 1, |s: f64| vec![s])?;
                let gen = generator_over(entries.clone(), anchor, self.fiber_dim)?;
                let coef = CoefficientField::from_generator(&gen);
                Ok(Arc::new(move |s: f64, _x: &[f64], _v: &[f64]| coef.gamma(s)))
            }
        }
    }

    /// Parameter interval for the scene's `[lpath]` section: its own
    /// domain, or the base path's when it declares none.
    pub fn lpath_domain(&self, spec: &LPathSpec) -> Result<(f64, f64)> {
        match (spec.domain, &self.path) {
            (Some([a, b]), _) => Ok((a, b)),
            (None, Some(path)) => Ok(path.domain()),
            (None, None) => Err(Error::InvalidInput(
                "lpath needs a domain, either its own or a [path] section's".into(),
            )),
        }
    }

    /// The initial-value problem for the scene's `[lpath]` section.
    pub fn lpath_problem(&self, spec: &LPathSpec) -> Result<LPathProblem64> {
        let dim = self.chart.dim();
        if self.fiber_dim != dim {
            return Err(Error::DimensionMismatch {
                context: "path lifting coefficient matrix",
                expected: dim,
                found: self.fiber_dim,
            });
        }
        let domain = self.lpath_domain(spec)?;
        let provider = self.provider(domain)?;
        LPathProblem::new(
            self.chart.clone(),
            domain,
            spec.s0,
            spec.x0.clone(),
            spec.v0.clone(),
            provider,
        )
    }

    /// Flattens and anchors a tensor literal from the task section.
    pub fn tensor(&self, spec: &TensorSpec, default_anchor: f64) -> Result<Tensor64> {
        let data = spec
            .components
            .flatten(spec.p + spec.q, self.fiber_dim)
            .map_err(Error::InvalidInput)?;
        let anchor = spec.anchor.unwrap_or(default_anchor);
        Tensor64::new(spec.p, spec.q, self.fiber_dim, anchor, data)
    }
}

fn build_chart(spec: &ChartSpec) -> Result<(Chart64, Vec<String>)> {
    match spec.kind.as_str() {
        "euclidean" => {
            let dim = spec.dim.ok_or_else(|| {
                Error::InvalidInput("euclidean chart needs an explicit dim".into())
            })?;
            if dim == 0 {
                return Err(Error::InvalidInput("chart dimension must be positive".into()));
            }
            let axes = (1..=dim).map(|i| format!("x{i}")).collect();
            Ok((flat_chart(dim), axes))
        }
        "unit-sphere-polar" => {
            if let Some(d) = spec.dim {
                if d != 2 {
                    return Err(Error::DimensionMismatch {
                        context: "unit sphere chart",
                        expected: 2,
                        found: d,
                    });
                }
            }
            let axes = vec!["theta".to_string(), "phi".to_string()];
            Ok((sphere_chart(), axes))
        }
        other => Err(Error::InvalidInput(format!(
            "unknown chart kind '{other}'; use \"euclidean\" or \"unit-sphere-polar\""
        ))),
    }
}

fn build_path(spec: &PathSpec, dim: usize) -> Result<Path64> {
    if spec.position.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "path position components",
            expected: dim,
            found: spec.position.len(),
        });
    }
    let position = parse_components(&spec.position, "path.position", &param_only)?;
    let path = PathCurve::try_from_fn(
        (spec.domain[0], spec.domain[1]),
        dim,
        move |s: f64| eval_components(&position, &bind_s(s)),
    )?;
    match &spec.velocity {
        None => Ok(path),
        Some(vel) => {
            if vel.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "path velocity components",
                    expected: dim,
                    found: vel.len(),
                });
            }
            let velocity = parse_components(vel, "path.velocity", &param_only)?;
            path.try_with_velocity(move |s: f64| eval_components(&velocity, &bind_s(s)))
        }
    }
}

fn build_transport(spec: &TransportSpec, chart: &Chart64) -> Result<(TransportLaw, usize)> {
    let dim = chart.dim();
    match spec.kind.as_str() {
        "generator" => {
            reject_field(spec.connection.is_some(), "generator", "connection")?;
            reject_field(spec.christoffel.is_some(), "generator", "christoffel")?;
            let entries = parse_square_matrix(spec, "transport.matrix", &param_only)?;
            Ok((TransportLaw::Generator(Arc::new(entries.0)), entries.1))
        }
        "coefficients" => {
            reject_field(spec.connection.is_some(), "coefficients", "connection")?;
            reject_field(spec.christoffel.is_some(), "coefficients", "christoffel")?;
            let scope = move |name: &str| {
                name == "s"
                    || indexed(name, 'x').is_some_and(|i| i < dim)
                    || indexed(name, 'v').is_some_and(|i| i < dim)
            };
            let entries = parse_square_matrix(spec, "transport.matrix", &scope)?;
            Ok((TransportLaw::Coefficients(Arc::new(entries.0)), entries.1))
        }
        "connection" => {
            reject_field(spec.matrix.is_some(), "connection", "matrix")?;
            if let Some(k) = spec.fiber_dim {
                if k != dim {
                    return Err(Error::DimensionMismatch {
                        context: "connection fiber",
                        expected: dim,
                        found: k,
                    });
                }
            }
            let field = match (&spec.connection, &spec.christoffel) {
                (Some(name), None) => build_preset(name, chart)?,
                (None, Some(symbols)) => build_christoffel(symbols, chart)?,
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInput(
                        "transport declares both a connection preset and christoffel symbols"
                            .into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::InvalidInput(
                        "connection transport needs a preset name or christoffel symbols".into(),
                    ))
                }
            };
            Ok((TransportLaw::Connection(field), dim))
        }
        other => Err(Error::InvalidInput(format!(
            "unknown transport kind '{other}'; use \"generator\", \"coefficients\", or \"connection\""
        ))),
    }
}

fn build_preset(name: &str, chart: &Chart64) -> Result<ConnectionField<f64>> {
    match name {
        "flat" => {
            if chart.name() != "euclidean" {
                return Err(Error::InvalidInput(format!(
                    "connection preset 'flat' needs the euclidean chart, scene has '{}'",
                    chart.name()
                )));
            }
            Ok(ConnectionField::flat(chart.dim()))
        }
        "unit-sphere" => {
            if chart.name() != "unit-sphere-polar" {
                return Err(Error::InvalidInput(format!(
                    "connection preset 'unit-sphere' needs the unit-sphere-polar chart, scene has '{}'",
                    chart.name()
                )));
            }
            Ok(ConnectionField::unit_sphere())
        }
        other => Err(Error::InvalidInput(format!(
            "unknown connection preset '{other}'; use \"flat\" or \"unit-sphere\""
        ))),
    }
}

fn build_christoffel(
    symbols: &[Vec<Vec<String>>],
    chart: &Chart64,
) -> Result<ConnectionField<f64>> {
    let dim = chart.dim();
    let scope = move |name: &str| indexed(name, 'x').is_some_and(|i| i < dim);
    let mut parsed = Vec::with_capacity(dim * dim * dim);
    if symbols.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "christoffel upper index",
            expected: dim,
            found: symbols.len(),
        });
    }
    for (i, plane) in symbols.iter().enumerate() {
        if plane.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "christoffel middle index",
                expected: dim,
                found: plane.len(),
            });
        }
        for (j, row) in plane.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "christoffel last index",
                    expected: dim,
                    found: row.len(),
                });
            }
            for (k, src) in row.iter().enumerate() {
                let context = format!("transport.christoffel[{i}][{j}][{k}]");
                parsed.push(parse_entry(src, &context, &scope)?);
            }
        }
    }
    let parsed = Arc::new(parsed);
    Ok(ConnectionField::try_new(chart.clone(), move |x: &[f64]| {
        let vars = bind_x(x);
        let mut coeffs = Coeffs3::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let e = &parsed[(i * dim + j) * dim + k];
                    coeffs.set(i, j, k, e.eval(&vars).map_err(Error::Evaluation)?);
                }
            }
        }
        Ok(coeffs)
    }))
}

fn generator_over(
    entries: Arc<Vec<Vec<Expr>>>,
    path: Path64,
    fiber_dim: usize,
) -> Result<Generator64> {
    Ok(TransportGenerator::try_new(path, fiber_dim, move |s: f64| {
        eval_matrix(&entries, &bind_s(s))
    }))
}

fn parse_square_matrix(
    spec: &TransportSpec,
    context: &str,
    scope: &dyn Fn(&str) -> bool,
) -> Result<(Vec<Vec<Expr>>, usize)> {
    let rows = spec.matrix.as_ref().ok_or_else(|| {
        Error::InvalidInput(format!(
            "transport kind \"{}\" needs a matrix of expressions",
            spec.kind
        ))
    })?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidInput(format!("{context} must not be empty")));
    }
    let mut parsed = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                context: "transport matrix row",
                expected: n,
                found: row.len(),
            });
        }
        let mut out = Vec::with_capacity(n);
        for (j, src) in row.iter().enumerate() {
            out.push(parse_entry(src, &format!("{context}[{i}][{j}]"), scope)?);
        }
        parsed.push(out);
    }
    if let Some(k) = spec.fiber_dim {
        if k != n {
            return Err(Error::DimensionMismatch {
                context: "transport fiber",
                expected: n,
                found: k,
            });
        }
    }
    Ok((parsed, n))
}

fn reject_field(present: bool, kind: &str, field: &str) -> Result<()> {
    if present {
        return Err(Error::InvalidInput(format!(
            "transport kind \"{kind}\" does not take a '{field}' field"
        )));
    }
    Ok(())
}

fn parse_entry(src: &str, context: &str, scope: &dyn Fn(&str) -> bool) -> Result<Expr> {
    let e = expr::parse(src)
        .map_err(|pe| Error::InvalidInput(format!("{context}: {pe}")))?;
    e.check_vars(scope)
        .map_err(|msg| Error::InvalidInput(format!("{context}: {msg}")))?;
    Ok(e)
}

fn parse_components(
    sources: &[String],
    context: &str,
    scope: &dyn Fn(&str) -> bool,
) -> Result<Arc<Vec<Expr>>> {
    let mut parsed = Vec::with_capacity(sources.len());
    for (i, src) in sources.iter().enumerate() {
        parsed.push(parse_entry(src, &format!("{context}[{i}]"), scope)?);
    }
    Ok(Arc::new(parsed))
}

fn eval_components(exprs: &[Expr], vars: &dyn Fn(&str) -> Option<f64>) -> Result<Vec<f64>> {
    exprs
        .iter()
        .map(|e| e.eval(vars).map_err(Error::Evaluation))
        .collect()
}

fn eval_matrix(entries: &[Vec<Expr>], vars: &dyn Fn(&str) -> Option<f64>) -> Result<Matrix64> {
    let n = entries.len();
    let mut data = Vec::with_capacity(n * n);
    for row in entries {
        for e in row {
            data.push(e.eval(vars).map_err(Error::Evaluation)?);
        }
    }
    Matrix::from_vec(n, n, data)
}

/// Index behind a one-letter prefix: `x3` is coordinate 2, zero based.
fn indexed(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let i: usize = rest.parse().ok()?;
    (i >= 1).then(|| i - 1)
}

fn param_only(name: &str) -> bool {
    name == "s"
}

fn bind_s(s: f64) -> impl Fn(&str) -> Option<f64> {
    move |name| (name == "s").then_some(s)
}

fn bind_x(x: &[f64]) -> impl Fn(&str) -> Option<f64> + '_ {
    move |name| indexed(name, 'x').and_then(|i| x.get(i).copied())
}

fn bind_sxv<'a>(s: f64, x: &'a [f64], v: &'a [f64]) -> impl Fn(&str) -> Option<f64> + 'a {
    move |name| {
        if name == "s" {
            return Some(s);
        }
        if let Some(i) = indexed(name, 'x') {
            return x.get(i).copied();
        }
        indexed(name, 'v').and_then(|i| v.get(i).copied())
    }
}
