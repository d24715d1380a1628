//! Transport-straightest paths: curves whose own velocity is transported
//! along them.
//!
//! Given a coefficient provider `(s, x, v) ↦ Γ(s, x, v)` the solver
//! integrates the second-order system
//!
//! ```text
//! dx/ds = v
//! dv/ds = -Γ(s, x, v) v
//! ```
//!
//! from an initial state. With the geodesic provider
//! `Γ(s, x, v)^i_j = Γ^i_{jk}(x) v^k` this is exactly the geodesic equation
//! of a connection; other providers give straightest paths of more general
//! transports.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Chart, ConnectionField, PathCurve};
use crate::linalg::Matrix;
use crate::ode::{self, Stepper};
use crate::scalar::Scalar;
use crate::spline::CubicSpline;
use crate::transport::TransportGenerator;

/// Coefficient provider: transport coefficients as a function of parameter,
/// position, and velocity. Linearity in the fiber argument is the caller's
/// responsibility; the residual check will expose a nonlinear provider.
pub type CoefficientProvider<T> = Arc<dyn Fn(T, &[T], &[T]) -> Result<Matrix<T>> + Send + Sync>;

/// Provider realizing parallel transport of a connection:
/// `Γ(s, x, v)^i_j = Γ^i_{jk}(x) v^k`. Straightest paths of this provider
/// are the connection's geodesics.
pub fn geodesic_provider<T: Scalar>(conn: &ConnectionField<T>) -> CoefficientProvider<T> {
    let conn = conn.clone();
    Arc::new(move |_s, x, v| conn.coefficients(x)?.contract_last(v))
}

/// Initial-value problem for a transport-straightest path.
pub struct LPathProblem<T> {
    chart: Chart<T>,
    provider: CoefficientProvider<T>,
    domain: (T, T),
    s0: T,
    x0: Vec<T>,
    v0: Vec<T>,
}

impl<T: Scalar> LPathProblem<T> {
    pub fn new(
        chart: Chart<T>,
        domain: (T, T),
        s0: T,
        x0: Vec<T>,
        v0: Vec<T>,
        provider: CoefficientProvider<T>,
    ) -> Result<Self> {
        let (a, b) = domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!(
                "parameter domain [{}, {}] must be a finite interval",
                a.to_f64_lossy(),
                b.to_f64_lossy()
            )));
        }
        if !(s0 >= a && s0 <= b) {
            return Err(Error::OutsideDomain {
                value: s0.to_f64_lossy(),
                lo: a.to_f64_lossy(),
                hi: b.to_f64_lossy(),
            });
        }
        chart.check_point(&x0)?;
        if v0.len() != chart.dim() {
            return Err(Error::DimensionMismatch {
                context: "initial velocity",
                expected: chart.dim(),
                found: v0.len(),
            });
        }
        if !v0.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "initial velocity",
            });
        }
        Ok(LPathProblem {
            chart,
            provider,
            domain,
            s0,
            x0,
            v0,
        })
    }

    pub fn chart(&self) -> &Chart<T> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    pub fn initial(&self) -> (T, &[T], &[T]) {
        (self.s0, &self.x0, &self.v0)
    }
}

/// One grid point of a solution: parameter, position, velocity.
#[derive(Clone, Debug)]
pub struct LPathSample<T> {
    pub s: T,
    pub position: Vec<T>,
    pub velocity: Vec<T>,
}

/// Sampled straightest path, in ascending parameter order.
///
/// `truncated` is set when the curve left the chart before covering the
/// requested domain on either side; the samples then cover the surviving
/// sub-interval and every stored point is strictly inside the chart.
#[derive(Clone, Debug)]
pub struct LPathSolution<T> {
    samples: Vec<LPathSample<T>>,
    dim: usize,
    step: T,
    truncated: bool,
}

impl<T: Scalar> LPathSolution<T> {
    pub fn samples(&self) -> &[LPathSample<T>] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn first(&self) -> &LPathSample<T> {
        self.samples.first().expect("solution holds the initial sample")
    }

    pub fn last(&self) -> &LPathSample<T> {
        self.samples.last().expect("solution holds the initial sample")
    }

    /// Smooth path through the position samples (spline per coordinate),
    /// over the parameter range the solution actually covers.
    pub fn to_path(&self) -> Result<PathCurve<T>> {
        if self.samples.len() < 2 {
            return Err(Error::GridTooCoarse {
                context: "solution path",
                needed: 2,
                found: self.samples.len(),
            });
        }
        let xs: Vec<T> = self.samples.iter().map(|p| p.s).collect();
        let dim = self.dim;
        let mut splines = Vec::with_capacity(dim);
        for c in 0..dim {
            let ys: Vec<T> = self.samples.iter().map(|p| p.position[c]).collect();
            splines.push(CubicSpline::natural(&xs, &ys)?);
        }
        let sp = splines.clone();
        let domain = (xs[0], *xs.last().expect("at least two samples"));
        PathCurve::try_from_fn(domain, dim, move |s| {
            Ok(sp.iter().map(|c| c.eval(s)).collect())
        })?
        .try_with_velocity(move |s| Ok(splines.iter().map(|c| c.deriv(s)).collect()))
    }
}

/// Marches from `from` to `to`, returning accepted samples after the initial
/// state and whether the march stopped early at the chart boundary.
fn march<T: Scalar>(
    problem: &LPathProblem<T>,
    from: T,
    to: T,
    step: T,
) -> Result<(Vec<LPathSample<T>>, bool)> {
    let dim = problem.dim();
    let mut samples = Vec::new();
    if to == from {
        return Ok((samples, false));
    }
    let span = (to - from).abs();
    let n_f64 = (span / step).ceil().to_f64_lossy();
    if !n_f64.is_finite() || n_f64 > 20_000_000.0 {
        return Err(Error::StepLimit {
            from: from.to_f64_lossy(),
            to: to.to_f64_lossy(),
            step: step.to_f64_lossy(),
        });
    }
    let n = n_f64 as usize;
    let h = (to - from) / T::from_usize(n).expect("step count fits the scalar");
    let provider = problem.provider.clone();
    let mut rhs = move |s: T, y: &[T], out: &mut [T]| -> Result<()> {
        let (x, v) = y.split_at(dim);
        let gamma = provider(s, x, v)?;
        if gamma.rows() != dim || gamma.cols() != dim {
            return Err(Error::DimensionMismatch {
                context: "coefficient provider",
                expected: dim,
                found: gamma.rows().max(gamma.cols()),
            });
        }
        out[..dim].copy_from_slice(v);
        for i in 0..dim {
            let mut acc = T::zero();
            for j in 0..dim {
                acc += gamma[(i, j)] * v[j];
            }
            out[dim + i] = -acc;
        }
        Ok(())
    };
    let mut stepper = Stepper::new(2 * dim);
    let mut y: Vec<T> = problem.x0.iter().chain(problem.v0.iter()).copied().collect();
    let mut out = vec![T::zero(); 2 * dim];
    for i in 0..n {
        let s = from + h * T::from_usize(i).expect("step index fits the scalar");
        match stepper.step(&mut rhs, s, &y, h, &mut out) {
            Ok(()) => {}
            // A Runge-Kutta stage probed beyond the chart: the curve is
            // leaving, so stop this direction with what was accepted so far.
            Err(Error::OutsideChart { .. }) => return Ok((samples, true)),
            Err(e) => return Err(e),
        }
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "straightest-path state",
            });
        }
        if !problem.chart.contains(&out[..dim]) {
            return Ok((samples, true));
        }
        y.copy_from_slice(&out);
        let s_next = if i + 1 == n {
            to
        } else {
            from + h * T::from_usize(i + 1).expect("step index fits the scalar")
        };
        samples.push(LPathSample {
            s: s_next,
            position: y[..dim].to_vec(),
            velocity: y[dim..].to_vec(),
        });
    }
    Ok((samples, false))
}

/// Integrates the straightest-path system over the problem's domain with a
/// fixed step, marching from the initial parameter toward both ends.
pub fn solve_lpath<T: Scalar>(problem: &LPathProblem<T>, step: T) -> Result<LPathSolution<T>> {
    ode::check_step(step)?;
    let (a, b) = problem.domain;
    let (s0, x0, v0) = problem.initial();
    let (down, trunc_down) = march(problem, s0, a, step)?;
    let (up, trunc_up) = march(problem, s0, b, step)?;
    let mut samples = Vec::with_capacity(down.len() + up.len() + 1);
    samples.extend(down.into_iter().rev());
    samples.push(LPathSample {
        s: s0,
        position: x0.to_vec(),
        velocity: v0.to_vec(),
    });
    samples.extend(up);
    Ok(LPathSolution {
        samples,
        dim: problem.dim(),
        step,
        truncated: trunc_down || trunc_up,
    })
}

/// Residual report of [`lpath_residual`].
#[derive(Clone, Copy, Debug)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub worst_at: f64,
    pub interior_points: usize,
}

/// Measures how well a sampled solution satisfies the first-order system:
/// at each interior grid point, centered differences of the stored samples
/// give `dx/ds` and `dv/ds`, and the residual is the larger of
/// `‖dx/ds - v‖` and `‖dv/ds + Γ v‖`. For an honest solution both parts
/// sit at the differencing floor, about `step²`.
pub fn lpath_residual<T: Scalar>(
    solution: &LPathSolution<T>,
    provider: &CoefficientProvider<T>,
) -> Result<ResidualReport> {
    let pts = solution.samples();
    if pts.len() < 3 {
        return Err(Error::GridTooCoarse {
            context: "residual check",
            needed: 3,
            found: pts.len(),
        });
    }
    let dim = solution.dim();
    let mut max_residual: f64 = 0.0;
    let mut worst_at = f64::NAN;
    for i in 1..pts.len() - 1 {
        let (prev, here, next) = (&pts[i - 1], &pts[i], &pts[i + 1]);
        let ds = next.s - prev.s;
        let gamma = provider(here.s, &here.position, &here.velocity)?;
        let mut dev = T::zero();
        for c in 0..dim {
            let dx = (next.position[c] - prev.position[c]) / ds;
            dev = dev.max((dx - here.velocity[c]).abs());
            let dv = (next.velocity[c] - prev.velocity[c]) / ds;
            let mut gv = T::zero();
            for j in 0..dim {
                gv += gamma[(c, j)] * here.velocity[j];
            }
            dev = dev.max((dv + gv).abs());
        }
        let dev = dev.to_f64_lossy();
        if worst_at.is_nan() || dev > max_residual {
            max_residual = dev;
            worst_at = here.s.to_f64_lossy();
        }
    }
    Ok(ResidualReport {
        max_residual,
        worst_at,
        interior_points: pts.len() - 2,
    })
}

/// Report of [`special_frame_linearity`].
#[derive(Clone, Debug)]
pub struct FrameLinearityReport {
    /// Special-frame velocity components at the first sample.
    pub reference: Vec<f64>,
    pub max_deviation: f64,
    pub worst_at: f64,
}

/// Checks the straightening property of a generator's special frame along a
/// solution: the frame components `u(s) = F(s) γ̇(s)` of the velocity must
/// stay constant over the whole solution.
pub fn special_frame_linearity<T: Scalar>(
    solution: &LPathSolution<T>,
    gen: &TransportGenerator<T>,
) -> Result<FrameLinearityReport> {
    if gen.fiber_dim() != solution.dim() {
        return Err(Error::DimensionMismatch {
            context: "special frame linearity",
            expected: solution.dim(),
            found: gen.fiber_dim(),
        });
    }
    let pts = solution.samples();
    if pts.is_empty() {
        return Err(Error::GridTooCoarse {
            context: "special frame linearity",
            needed: 1,
            found: 0,
        });
    }
    let reference = gen.matrix(pts[0].s)?.mul_vec(&pts[0].velocity)?;
    let mut max_deviation: f64 = 0.0;
    let mut worst_at = pts[0].s.to_f64_lossy();
    for p in pts.iter() {
        let u = gen.matrix(p.s)?.mul_vec(&p.velocity)?;
        let mut dev = T::zero();
        for (ui, ri) in u.iter().zip(&reference) {
            dev = dev.max((*ui - *ri).abs());
        }
        let dev = dev.to_f64_lossy();
        if dev > max_deviation {
            max_deviation = dev;
            worst_at = p.s.to_f64_lossy();
        }
    }
    Ok(FrameLinearityReport {
        reference: reference.iter().map(|v| v.to_f64_lossy()).collect(),
        max_deviation,
        worst_at,
    })
}
