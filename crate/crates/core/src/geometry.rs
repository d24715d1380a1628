//! Charts, parametrized paths, frame fields, and connection coefficients.
//!
//! These are the base-manifold ingredients the transport machinery consumes.
//! A [`PathCurve`] is a concrete parametrized curve in one chart; a
//! [`FrameField`] assigns an invertible basis matrix to each parameter value
//! along a path; a [`ConnectionField`] stores pointwise coefficients
//! `Γ^i_{jk}` over a chart.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{invert_capped, Lu, Matrix};
use crate::scalar::Scalar;
use crate::spline::CubicSpline;

/// Default finite-difference step for velocities and generator derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-6;
/// Default condition-number cap for frame basis inversions.
pub const FRAME_CONDITION_CAP: f64 = 1e8;

/// One axis of a chart's open box: either side may be unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBounds<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T: Scalar> AxisBounds<T> {
    pub fn unbounded() -> Self {
        AxisBounds {
            lower: None,
            upper: None,
        }
    }

    pub fn open(lower: T, upper: T) -> Self {
        AxisBounds {
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    fn admits(&self, v: T) -> bool {
        if !v.is_finite() {
            return false;
        }
        if let Some(lo) = self.lower {
            if !(v > lo) {
                return false;
            }
        }
        if let Some(hi) = self.upper {
            if !(v < hi) {
                return false;
            }
        }
        true
    }
}

/// Coordinate chart: a named open box in `R^dim`.
///
/// Bounds are strict. Leaving the box is a hard error everywhere in this
/// crate; nothing clamps a point back inside, because coefficients like
/// `cot θ` are meaningless on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart<T> {
    name: String,
    dim: usize,
    bounds: Option<Vec<AxisBounds<T>>>,
}

impl<T: Scalar> Chart<T> {
    /// Unbounded chart covering all of `R^dim`.
    pub fn unbounded(name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("chart dimension must be positive".into()));
        }
        Ok(Chart {
            name: name.to_string(),
            dim,
            bounds: None,
        })
    }

    /// Chart with per-axis open bounds.
    pub fn with_bounds(name: &str, bounds: Vec<AxisBounds<T>>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("chart dimension must be positive".into()));
        }
        for (axis, b) in bounds.iter().enumerate() {
            if let (Some(lo), Some(hi)) = (b.lower, b.upper) {
                if !(lo < hi) {
                    return Err(Error::InvalidInput(format!(
                        "chart axis {axis} has empty interval ({lo}, {hi})"
                    )));
                }
            }
        }
        Ok(Chart {
            name: name.to_string(),
            dim: bounds.len(),
            bounds: Some(bounds),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &[T]) -> bool {
        if x.len() != self.dim {
            return false;
        }
        match &self.bounds {
            None => x.iter().all(|v| v.is_finite()),
            Some(bounds) => bounds.iter().zip(x).all(|(b, &v)| b.admits(v)),
        }
    }

    /// Like [`Chart::contains`] but reports which axis failed.
    pub fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "chart point",
                expected: self.dim,
                found: x.len(),
            });
        }
        for (axis, &v) in x.iter().enumerate() {
            let ok = match &self.bounds {
                None => v.is_finite(),
                Some(bounds) => bounds[axis].admits(v),
            };
            if !ok {
                return Err(Error::OutsideChart {
                    chart: self.name.clone(),
                    axis,
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }
}

/// Chart preset: all of `R^dim` with Cartesian coordinates.
pub fn flat_chart<T: Scalar>(dim: usize) -> Chart<T> {
    Chart::unbounded("euclidean", dim).expect("positive dimension")
}

/// Chart preset: polar coordinates `(θ, φ)` on the unit sphere, with the
/// poles excluded so `cot θ` stays finite.
pub fn sphere_chart<T: Scalar>() -> Chart<T> {
    Chart::with_bounds(
        "unit-sphere-polar",
        vec![
            AxisBounds::open(T::zero(), T::lit(core::f64::consts::PI)),
            AxisBounds::unbounded(),
        ],
    )
    .expect("valid bounds")
}

type PosFn<T> = Arc<dyn Fn(T) -> Result<Vec<T>> + Send + Sync>;

enum PathRepr<T> {
    ClosedForm {
        position: PosFn<T>,
        velocity: Option<PosFn<T>>,
    },
    Sampled {
        coords: Vec<CubicSpline<T>>,
    },
}

struct PathInner<T> {
    start: T,
    end: T,
    dim: usize,
    repr: PathRepr<T>,
    fd_step: T,
}

/// Parametrized C¹ path `γ : [a, b] → R^dim` in chart coordinates.
///
/// Cloning is cheap (shared state). Parameters outside `[a, b]` are
/// rejected, up to a few ulps of slack for grid round-off. Self-intersecting
/// paths are fine: everything downstream is indexed by the parameter, never
/// by the point.
#[derive(Clone)]
pub struct PathCurve<T> {
    inner: Arc<PathInner<T>>,
}

impl<T: Scalar> PathCurve<T> {
    fn build(start: T, end: T, dim: usize, repr: PathRepr<T>) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::InvalidInput(format!(
                "path domain [{}, {}] must be a finite interval",
                start.to_f64_lossy(),
                end.to_f64_lossy()
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("path dimension must be positive".into()));
        }
        Ok(PathCurve {
            inner: Arc::new(PathInner {
                start,
                end,
                dim,
                repr,
                fd_step: T::lit(DEFAULT_FD_STEP),
            }),
        })
    }

    /// Path from a closed-form position map. Velocities fall back to central
    /// differences; attach the exact derivative with
    /// [`PathCurve::with_velocity`] when you have it.
    pub fn from_fn(
        domain: (T, T),
        dim: usize,
        position: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::try_from_fn(domain, dim, move |s| Ok(position(s)))
    }

    /// Like [`PathCurve::from_fn`] for evaluators that can fail.
    pub fn try_from_fn(
        domain: (T, T),
        dim: usize,
        position: impl Fn(T) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::build(
            domain.0,
            domain.1,
            dim,
            PathRepr::ClosedForm {
                position: Arc::new(position),
                velocity: None,
            },
        )
    }

    /// Attaches an exact velocity map to a closed-form path.
    pub fn with_velocity(
        self,
        velocity: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        self.try_with_velocity(move |s| Ok(velocity(s)))
    }

    pub fn try_with_velocity(
        self,
        velocity: impl Fn(T) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Result<Self> {
        let inner = &self.inner;
        match &inner.repr {
            PathRepr::ClosedForm { position, .. } => Self::build(
                inner.start,
                inner.end,
                inner.dim,
                PathRepr::ClosedForm {
                    position: position.clone(),
                    velocity: Some(Arc::new(velocity)),
                },
            ),
            PathRepr::Sampled { .. } => Err(Error::InvalidInput(
                "sampled paths take velocities from the spline".into(),
            )),
        }
    }

    /// Path through uniformly spaced samples, interpolated by a natural
    /// cubic spline per coordinate. Velocities come from the spline's exact
    /// derivative, so expect reduced accuracy near the ends where the
    /// natural boundary condition bites.
    pub fn from_samples(domain: (T, T), dim: usize, samples: &[Vec<T>]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::GridTooCoarse {
                context: "sampled path",
                needed: 2,
                found: samples.len(),
            });
        }
        for (i, p) in samples.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "path sample",
                    expected: dim,
                    found: samples[i].len(),
                });
            }
        }
        let n = samples.len();
        let span = domain.1 - domain.0;
        let knots: Vec<T> = (0..n)
            .map(|i| {
                domain.0
                    + span * T::from_usize(i).expect("sample index fits the scalar")
                        / T::from_usize(n - 1).expect("sample count fits the scalar")
            })
            .collect();
        let mut coords = Vec::with_capacity(dim);
        for c in 0..dim {
            let ys: Vec<T> = samples.iter().map(|p| p[c]).collect();
            coords.push(CubicSpline::natural(&knots, &ys)?);
        }
        Self::build(domain.0, domain.1, dim, PathRepr::Sampled { coords })
    }

    pub fn domain(&self) -> (T, T) {
        (self.inner.start, self.inner.end)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// True when velocities are exact rather than differenced.
    pub fn has_exact_velocity(&self) -> bool {
        match &self.inner.repr {
            PathRepr::ClosedForm { velocity, .. } => velocity.is_some(),
            PathRepr::Sampled { .. } => true,
        }
    }

    /// True when both curves share one underlying definition.
    pub fn same_curve(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// Rejects parameters outside the domain, allowing a few ulps of slack
    /// for round-off in caller-built grids.
    pub fn check_param(&self, s: T) -> Result<()> {
        let (a, b) = self.domain();
        let slack = T::epsilon()
            * T::lit(64.0)
            * (T::one() + a.abs().max(b.abs()));
        if !s.is_finite() || s < a - slack || s > b + slack {
            return Err(Error::OutsideDomain {
                value: s.to_f64_lossy(),
                lo: a.to_f64_lossy(),
                hi: b.to_f64_lossy(),
            });
        }
        Ok(())
    }

    fn clamp_param(&self, s: T) -> T {
        let (a, b) = self.domain();
        s.max(a).min(b)
    }

    pub fn position(&self, s: T) -> Result<Vec<T>> {
        self.check_param(s)?;
        let s = self.clamp_param(s);
        let p = match &self.inner.repr {
            PathRepr::ClosedForm { position, .. } => {
                let p = position(s)?;
                if p.len() != self.inner.dim {
                    return Err(Error::DimensionMismatch {
                        context: "path position",
                        expected: self.inner.dim,
                        found: p.len(),
                    });
                }
                p
            }
            PathRepr::Sampled { coords } => coords.iter().map(|sp| sp.eval(s)).collect(),
        };
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "path position",
            });
        }
        Ok(p)
    }

    /// Velocity `γ̇(s)`: exact map if attached, spline derivative for
    /// sampled paths, otherwise second-order finite differences that switch
    /// to one-sided stencils at the domain ends.
    pub fn velocity(&self, s: T) -> Result<Vec<T>> {
        self.check_param(s)?;
        let s = self.clamp_param(s);
        let v = match &self.inner.repr {
            PathRepr::ClosedForm {
                velocity: Some(v), ..
            } => {
                let v = v(s)?;
                if v.len() != self.inner.dim {
                    return Err(Error::DimensionMismatch {
                        context: "path velocity",
                        expected: self.inner.dim,
                        found: v.len(),
                    });
                }
                v
            }
            PathRepr::ClosedForm { velocity: None, .. } => self.fd_velocity(s)?,
            PathRepr::Sampled { coords } => coords.iter().map(|sp| sp.deriv(s)).collect(),
        };
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "path velocity",
            });
        }
        Ok(v)
    }

    fn fd_velocity(&self, s: T) -> Result<Vec<T>> {
        let (a, b) = self.domain();
        let h = self.inner.fd_step.min((b - a) * T::lit(0.25));
        let two_h = h + h;
        let scale = |p: Vec<T>, k: T| -> Vec<T> { p.into_iter().map(|x| x * k).collect() };
        let sum = |ps: Vec<Vec<T>>| -> Vec<T> {
            let mut acc = vec![T::zero(); self.inner.dim];
            for p in ps {
                for (a, b) in acc.iter_mut().zip(p) {
                    *a += b;
                }
            }
            acc
        };
        let v = if s - h >= a && s + h <= b {
            // Central difference, second order.
            sum(vec![
                scale(self.position(s + h)?, T::one() / two_h),
                scale(self.position(s - h)?, -T::one() / two_h),
            ])
        } else if s + two_h <= b {
            // One-sided forward stencil, second order.
            sum(vec![
                scale(self.position(s)?, T::lit(-3.0) / two_h),
                scale(self.position(s + h)?, T::lit(4.0) / two_h),
                scale(self.position(s + two_h)?, -T::one() / two_h),
            ])
        } else if s - two_h >= a {
            // One-sided backward stencil, second order.
            sum(vec![
                scale(self.position(s)?, T::lit(3.0) / two_h),
                scale(self.position(s - h)?, T::lit(-4.0) / two_h),
                scale(self.position(s - two_h)?, T::one() / two_h),
            ])
        } else {
            return Err(Error::InvalidStep {
                step: h.to_f64_lossy(),
                reason: "domain too short for the difference stencil",
            });
        };
        Ok(v)
    }

    /// Gap `max_i |γ(b)_i - γ(a)_i|` between the path's endpoints.
    pub fn closure_gap(&self) -> Result<T> {
        let (a, b) = self.domain();
        let pa = self.position(a)?;
        let pb = self.position(b)?;
        Ok(pa
            .iter()
            .zip(&pb)
            .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).abs())))
    }
}

type BasisFn<T> = Arc<dyn Fn(T) -> Result<Matrix<T>> + Send + Sync>;

/// Frame field along a path: an invertible `fiber_dim × fiber_dim` basis
/// matrix at each parameter value. Column `i` holds the components of the
/// `i`-th frame vector in the working frame.
#[derive(Clone)]
pub struct FrameField<T> {
    path: PathCurve<T>,
    fiber_dim: usize,
    basis: BasisFn<T>,
    condition_cap: f64,
}

impl<T: Scalar> FrameField<T> {
    pub fn new(
        path: PathCurve<T>,
        fiber_dim: usize,
        basis: impl Fn(T) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self::try_new(path, fiber_dim, move |s| Ok(basis(s)))
    }

    pub fn try_new(
        path: PathCurve<T>,
        fiber_dim: usize,
        basis: impl Fn(T) -> Result<Matrix<T>> + Send + Sync + 'static,
    ) -> Self {
        FrameField {
            path,
            fiber_dim,
            basis: Arc::new(basis),
            condition_cap: FRAME_CONDITION_CAP,
        }
    }

    /// Frame that coincides with the working coordinates everywhere.
    pub fn coordinate(path: PathCurve<T>, fiber_dim: usize) -> Self {
        Self::new(path, fiber_dim, move |_| Matrix::identity(fiber_dim))
    }

    pub fn with_condition_cap(mut self, cap: f64) -> Self {
        self.condition_cap = cap;
        self
    }

    pub fn path(&self) -> &PathCurve<T> {
        &self.path
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn condition_cap(&self) -> f64 {
        self.condition_cap
    }

    /// Basis matrix at `s`, after checking shape, finiteness, and the
    /// condition cap. A degenerate frame is an error, never a warning.
    pub fn basis(&self, s: T) -> Result<Matrix<T>> {
        self.path.check_param(s)?;
        let m = (self.basis)(s)?;
        if m.rows() != self.fiber_dim || m.cols() != self.fiber_dim {
            return Err(Error::DimensionMismatch {
                context: "frame basis",
                expected: self.fiber_dim,
                found: m.rows().max(m.cols()),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite {
                context: "frame basis",
            });
        }
        // The cap check inverts anyway; keep the inverse out of the result
        // so callers that only need the basis pay once.
        invert_capped(&m, self.condition_cap, "frame basis")?;
        Ok(m)
    }

    /// Capped inverse of the basis matrix at `s`.
    pub fn inverse_basis(&self, s: T) -> Result<Matrix<T>> {
        self.path.check_param(s)?;
        let m = (self.basis)(s)?;
        if !m.is_finite() {
            return Err(Error::NonFinite {
                context: "frame basis",
            });
        }
        invert_capped(&m, self.condition_cap, "frame basis")
    }
}

/// Matrix of frame `b`'s vectors expressed in frame `a` at parameter `s`:
/// `A(s) = basis_a(s)⁻¹ basis_b(s)`. Both frames must live over the same
/// path with the same fiber dimension.
pub fn frame_change_matrix<T: Scalar>(
    a: &FrameField<T>,
    b: &FrameField<T>,
    s: T,
) -> Result<Matrix<T>> {
    if a.fiber_dim != b.fiber_dim {
        return Err(Error::DimensionMismatch {
            context: "frame change",
            expected: a.fiber_dim,
            found: b.fiber_dim,
        });
    }
    if !a.path.same_curve(&b.path) && a.path.domain() != b.path.domain() {
        return Err(Error::InvalidInput(
            "frame change requires frames over the same path".into(),
        ));
    }
    let ma = a.basis(s)?;
    let mb = b.basis(s)?;
    // Solve a A = b column-wise instead of forming the inverse.
    let lu = Lu::factor(&ma, "frame change")?;
    let cond = ma.norm_inf().to_f64_lossy() * lu.inverse()?.norm_inf().to_f64_lossy();
    if !cond.is_finite() || cond > a.condition_cap {
        return Err(Error::IllConditioned {
            context: "frame change",
            condition: cond,
            cap: a.condition_cap,
        });
    }
    lu.solve_matrix(&mb)
}

/// Pointwise connection coefficients `Γ^i_{jk}`, stored row-major as
/// `data[(i·d + j)·d + k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs3<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Coeffs3<T> {
    pub fn zeros(dim: usize) -> Self {
        Coeffs3 {
            dim,
            data: vec![T::zero(); dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    data.push(f(i, j, k));
                }
            }
        }
        Coeffs3 { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Contracts the last slot with a vector: `M^i_j = Γ^i_{jk} v^k`.
    pub fn contract_last(&self, v: &[T]) -> Result<Matrix<T>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "coefficient contraction",
                expected: self.dim,
                found: v.len(),
            });
        }
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = T::zero();
                for k in 0..self.dim {
                    acc += self.get(i, j, k) * v[k];
                }
                m[(i, j)] = acc;
            }
        }
        Ok(m)
    }
}

type CoeffFn<T> = Arc<dyn Fn(&[T]) -> Result<Coeffs3<T>> + Send + Sync>;

/// Connection coefficients over a chart.
#[derive(Clone)]
pub struct ConnectionField<T> {
    chart: Chart<T>,
    coeffs: CoeffFn<T>,
}

impl<T: Scalar> ConnectionField<T> {
    pub fn new(
        chart: Chart<T>,
        coeffs: impl Fn(&[T]) -> Coeffs3<T> + Send + Sync + 'static,
    ) -> Self {
        Self::try_new(chart, move |x| Ok(coeffs(x)))
    }

    pub fn try_new(
        chart: Chart<T>,
        coeffs: impl Fn(&[T]) -> Result<Coeffs3<T>> + Send + Sync + 'static,
    ) -> Self {
        ConnectionField {
            chart,
            coeffs: Arc::new(coeffs),
        }
    }

    /// Connection preset: flat space, all coefficients zero.
    pub fn flat(dim: usize) -> Self {
        Self::new(flat_chart(dim), move |_| Coeffs3::zeros(dim))
    }

    /// Connection preset: the unit 2-sphere in polar coordinates `(θ, φ)`,
    /// with the standard round-metric coefficients.
    pub fn unit_sphere() -> Self {
        Self::new(sphere_chart(), |x: &[T]| {
            let theta = x[0];
            let (sin_t, cos_t) = (theta.sin(), theta.cos());
            let cot_t = cos_t / sin_t;
            let mut c = Coeffs3::zeros(2);
            c.set(0, 1, 1, -sin_t * cos_t);
            c.set(1, 0, 1, cot_t);
            c.set(1, 1, 0, cot_t);
            c
        })
    }

    pub fn chart(&self) -> &Chart<T> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Coefficients at a point, after chart-bounds and finiteness checks.
    pub fn coefficients(&self, x: &[T]) -> Result<Coeffs3<T>> {
        self.chart.check_point(x)?;
        let c = (self.coeffs)(x)?;
        if c.dim() != self.chart.dim() {
            return Err(Error::DimensionMismatch {
                context: "connection coefficients",
                expected: self.chart.dim(),
                found: c.dim(),
            });
        }
        if !c.is_finite() {
            return Err(Error::NonFinite {
                context: "connection coefficients",
            });
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn sphere_chart_excludes_the_poles() {
        let chart: Chart<f64> = sphere_chart();
        assert!(chart.contains(&[PI / 2.0, 123.0]));
        assert!(!chart.contains(&[0.0, 0.0]));
        assert!(!chart.contains(&[PI, 0.0]));
        assert!(!chart.contains(&[f64::NAN, 0.0]));
        let err = chart.check_point(&[-0.1, 0.0]).unwrap_err();
        assert!(matches!(err, Error::OutsideChart { axis: 0, .. }));
    }

    #[test]
    fn flat_chart_accepts_any_finite_point() {
        let chart: Chart<f64> = flat_chart(3);
        assert!(chart.contains(&[1e300, -5.0, 0.0]));
        assert!(!chart.contains(&[f64::INFINITY, 0.0, 0.0]));
    }

    #[test]
    fn closed_form_path_uses_exact_velocity_when_given() {
        let path = PathCurve::from_fn((0.0, 2.0 * PI), 2, |s: f64| vec![s.cos(), s.sin()])
            .unwrap()
            .with_velocity(|s: f64| vec![-s.sin(), s.cos()])
            .unwrap();
        let v = path.velocity(1.0).unwrap();
        assert_eq!(v, vec![-1.0_f64.sin(), 1.0_f64.cos()]);
    }

    #[test]
    fn differenced_velocity_matches_exact_to_stencil_accuracy() {
        let exact = PathCurve::from_fn((0.0, 2.0), 2, |s: f64| vec![s.cos(), (2.0 * s).exp()])
            .unwrap()
            .with_velocity(|s: f64| vec![-s.sin(), 2.0 * (2.0 * s).exp()])
            .unwrap();
        let fd = PathCurve::from_fn((0.0, 2.0), 2, |s: f64| vec![s.cos(), (2.0 * s).exp()])
            .unwrap();
        // Interior (central stencil) and both ends (one-sided stencils).
        for s in [0.0, 1e-7, 0.5, 1.3, 2.0 - 1e-7, 2.0] {
            let ve = exact.velocity(s).unwrap();
            let vf = fd.velocity(s).unwrap();
            for (a, b) in ve.iter().zip(&vf) {
                assert!((a - b).abs() < 1e-7, "s={s}: exact {a} vs fd {b}");
            }
        }
    }

    #[test]
    fn sampled_parabola_velocity_at_midpoint() {
        // Eleven samples of s^2 on [0, 1]; the spline derivative at 0.5 must
        // recover 1.0 within the sampled-path tolerance.
        let samples: Vec<Vec<f64>> = (0..11)
            .map(|i| {
                let s = i as f64 / 10.0;
                vec![s * s]
            })
            .collect();
        let path = PathCurve::from_samples((0.0, 1.0), 1, &samples).unwrap();
        let v = path.velocity(0.5).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-2, "velocity {v:?}");
        assert!(path.has_exact_velocity());
    }

    #[test]
    fn out_of_domain_parameter_is_rejected() {
        let path = PathCurve::from_fn((0.0, 1.0), 1, |s: f64| vec![s]).unwrap();
        assert!(matches!(
            path.position(1.5),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(path.position(1.0).is_ok());
        // A few ulps of slack are allowed for caller grid round-off.
        assert!(path.position(1.0 + 1e-14).is_ok());
    }

    #[test]
    fn closure_gap_detects_loops() {
        let loop_path =
            PathCurve::from_fn((0.0, 2.0 * PI), 2, |s: f64| vec![s.cos(), s.sin()]).unwrap();
        assert!(loop_path.closure_gap().unwrap() < 1e-12);
        let open_path = PathCurve::from_fn((0.0, 1.0), 2, |s: f64| vec![s, 0.0]).unwrap();
        assert!(open_path.closure_gap().unwrap() > 0.5);
    }

    #[test]
    fn frame_change_between_identity_and_rotation() {
        let path = PathCurve::from_fn((0.0, 1.0), 2, |s: f64| vec![s, 0.0]).unwrap();
        let a = FrameField::coordinate(path.clone(), 2);
        let b = FrameField::new(path.clone(), 2, |s: f64| {
            Matrix::from_rows(&[vec![s.cos(), -s.sin()], vec![s.sin(), s.cos()]]).unwrap()
        });
        let m = frame_change_matrix(&a, &b, 0.7).unwrap();
        assert!((m[(0, 0)] - 0.7_f64.cos()).abs() < 1e-15);
        assert!((m[(0, 1)] + 0.7_f64.sin()).abs() < 1e-15);
        // Change from a frame to itself is the identity.
        let id = frame_change_matrix(&b, &b, 0.7).unwrap();
        assert!(id.distance_max(&Matrix::identity(2)).unwrap() < 1e-14);
    }

    #[test]
    fn degenerate_frame_hits_the_condition_cap() {
        let path = PathCurve::from_fn((0.0, 1.0), 2, |s: f64| vec![s, 0.0]).unwrap();
        let bad = FrameField::new(path, 2, |_s: f64| {
            Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-12]]).unwrap()
        });
        assert!(matches!(
            bad.basis(0.5),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn sphere_coefficients_match_fixed_values() {
        let conn: ConnectionField<f64> = ConnectionField::unit_sphere();
        let c = conn.coefficients(&[PI / 4.0, 0.3]).unwrap();
        assert!((c.get(0, 1, 1) + 0.5).abs() < 1e-15);
        assert!((c.get(1, 0, 1) - 1.0).abs() < 1e-15);
        assert!((c.get(1, 1, 0) - 1.0).abs() < 1e-15);
        assert_eq!(c.get(0, 0, 0), 0.0);
        assert!(conn.coefficients(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn sphere_coefficients_match_metric_derived_values() {
        // Independent route: Christoffel symbols of the round metric
        // g = diag(1, sin²θ) from centered differences of g itself,
        //   Γ^i_{jk} = ½ g^{il} (∂_j g_{lk} + ∂_k g_{lj} - ∂_l g_{jk}).
        let g = |x: &[f64]| -> [[f64; 2]; 2] {
            [[1.0, 0.0], [0.0, x[0].sin().powi(2)]]
        };
        let h = 1e-6;
        let dg = |x: &[f64], axis: usize| -> [[f64; 2]; 2] {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[axis] += h;
            xm[axis] -= h;
            let (gp, gm) = (g(&xp), g(&xm));
            let mut out = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
                }
            }
            out
        };
        let conn: ConnectionField<f64> = ConnectionField::unit_sphere();
        for &theta in &[0.4, PI / 4.0, 1.2, 2.0, 2.9] {
            let x = [theta, 0.7];
            let gm = g(&x);
            let ginv = [[1.0 / gm[0][0], 0.0], [0.0, 1.0 / gm[1][1]]];
            let d = [dg(&x, 0), dg(&x, 1)];
            let c = conn.coefficients(&x).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let mut val = 0.0;
                        for l in 0..2 {
                            val += 0.5
                                * ginv[i][l]
                                * (d[j][l][k] + d[k][l][j] - d[l][j][k]);
                        }
                        assert!(
                            (c.get(i, j, k) - val).abs() < 1e-8,
                            "Γ^{i}_{{{j}{k}}} at θ={theta}: {} vs metric-derived {val}",
                            c.get(i, j, k)
                        );
                    }
                }
            }
        }
    }
}
