//! The derivation induced by a transport family along a path, and sections
//! it acts on.
//!
//! For a section `σ` along `γ` and a transport family `H`, the derivation is
//! the limit of pulled-back difference quotients
//!
//! ```text
//! (Dσ)(s) = lim_{ε→0} [ H(s, s+ε) σ(s+ε) - σ(s) ] / ε
//! ```
//!
//! which in components is `(Dσ)(s) = σ'(s) + Γ(s) σ(s)` with `Γ` the
//! family's coefficient matrix. A section is transported by the family
//! exactly when this derivative vanishes, equivalently when it solves
//! `σ' + Γ σ = 0`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{ConnectionField, PathCurve};
use crate::linalg::Matrix;
use crate::ode;
use crate::scalar::Scalar;
use crate::spline::CubicSpline;
use crate::transport::{CoefficientField, TransportMatrixFamily};

type VecFn<T> = Arc<dyn Fn(T) -> Result<Vec<T>> + Send + Sync>;

/// Second-order difference stencil for a vector-valued map on `[a, b]`.
fn fd_vec<T: Scalar>(
    f: &dyn Fn(T) -> Result<Vec<T>>,
    s: T,
    h: T,
    (a, b): (T, T),
) -> Result<Vec<T>> {
    let two_h = h + h;
    let combine = |terms: Vec<(Vec<T>, T)>| -> Vec<T> {
        let dim = terms[0].0.len();
        let mut out = vec![T::zero(); dim];
        for (v, w) in terms {
            for i in 0..dim {
                out[i] += v[i] * w;
            }
        }
        out
    };
    if s - h >= a && s + h <= b {
        Ok(combine(vec![
            (f(s + h)?, T::one() / two_h),
            (f(s - h)?, -T::one() / two_h),
        ]))
    } else if s + two_h <= b {
        Ok(combine(vec![
            (f(s)?, T::lit(-3.0) / two_h),
            (f(s + h)?, T::lit(4.0) / two_h),
            (f(s + two_h)?, -T::one() / two_h),
        ]))
    } else if s - two_h >= a {
        Ok(combine(vec![
            (f(s)?, T::lit(3.0) / two_h),
            (f(s - h)?, T::lit(-4.0) / two_h),
            (f(s - two_h)?, T::one() / two_h),
        ]))
    } else {
        Err(Error::InvalidStep {
            step: h.to_f64_lossy(),
            reason: "domain too short for the difference stencil",
        })
    }
}

/// Fiber components of a section `s ↦ σ(γ(s))` along one path.
///
/// Sections are assumed continuously differentiable unless marked otherwise
/// with [`SectionAlongPath::continuous_only`]; differentiating a section
/// that was marked non-smooth is an error rather than a silent finite
/// difference of a kink.
#[derive(Clone)]
pub struct SectionAlongPath<T> {
    path: PathCurve<T>,
    fiber_dim: usize,
    comp: VecFn<T>,
    deriv: Option<VecFn<T>>,
    smooth: bool,
    fd_step: T,
}

impl<T: Scalar> SectionAlongPath<T> {
    pub fn from_fn(
        path: PathCurve<T>,
        fiber_dim: usize,
        comp: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self::try_from_fn(path, fiber_dim, move |s| Ok(comp(s)))
    }

    pub fn try_from_fn(
        path: PathCurve<T>,
        fiber_dim: usize,
        comp: impl Fn(T) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        SectionAlongPath {
            path,
            fiber_dim,
            comp: Arc::new(comp),
            deriv: None,
            smooth: true,
            fd_step: T::lit(crate::geometry::DEFAULT_FD_STEP),
        }
    }

    /// Constant section: the same components at every parameter.
    pub fn constant(path: PathCurve<T>, components: Vec<T>) -> Self {
        let dim = components.len();
        let c2 = components.clone();
        let zeros = vec![T::zero(); dim];
        Self::from_fn(path, dim, move |_s| c2.clone())
            .with_derivative(move |_s| zeros.clone())
    }

    /// Marks the section as merely continuous. Derivation then refuses it.
    pub fn continuous_only(mut self) -> Self {
        self.smooth = false;
        self.deriv = None;
        self
    }

    pub fn with_derivative(
        mut self,
        deriv: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        self.deriv = Some(Arc::new(move |s| Ok(deriv(s))));
        self
    }

    pub fn try_with_derivative(
        mut self,
        deriv: impl Fn(T) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_fd_step(mut self, h: T) -> Self {
        self.fd_step = h;
        self
    }

    pub fn path(&self) -> &PathCurve<T> {
        &self.path
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn components(&self, s: T) -> Result<Vec<T>> {
        self.path.check_param(s)?;
        let v = (self.comp)(s)?;
        if v.len() != self.fiber_dim {
            return Err(Error::DimensionMismatch {
                context: "section components",
                expected: self.fiber_dim,
                found: v.len(),
            });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "section components",
            });
        }
        Ok(v)
    }

    /// Parameter derivative `dσ/ds`, exact if attached, otherwise a
    /// second-order stencil. Errors on sections marked non-smooth.
    pub fn derivative(&self, s: T) -> Result<Vec<T>> {
        if !self.smooth {
            return Err(Error::NotDifferentiable);
        }
        self.path.check_param(s)?;
        let v = match &self.deriv {
            Some(d) => {
                let v = d(s)?;
                if v.len() != self.fiber_dim {
                    return Err(Error::DimensionMismatch {
                        context: "section derivative",
                        expected: self.fiber_dim,
                        found: v.len(),
                    });
                }
                v
            }
            None => {
                let comp = self.comp.clone();
                fd_vec(&move |u| comp(u), s, self.fd_step, self.path.domain())?
            }
        };
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "section derivative",
            });
        }
        Ok(v)
    }
}

/// Section obtained by transporting fixed components from one base point:
/// `σ(t) = H(t, s0) v`. By construction its derivation vanishes up to the
/// family's numeric accuracy.
pub fn transported_section<T: Scalar>(
    family: &TransportMatrixFamily<T>,
    s0: T,
    v: Vec<T>,
) -> Result<SectionAlongPath<T>> {
    family.path().check_param(s0)?;
    if v.len() != family.fiber_dim() {
        return Err(Error::DimensionMismatch {
            context: "transported section",
            expected: family.fiber_dim(),
            found: v.len(),
        });
    }
    let fam = family.clone();
    Ok(SectionAlongPath::try_from_fn(
        family.path().clone(),
        family.fiber_dim(),
        move |t| fam.matrix(t, s0)?.mul_vec(&v),
    ))
}

/// Scalar function of the path parameter, with optional exact derivative.
#[derive(Clone)]
pub struct ScalarFunction<T> {
    f: Arc<dyn Fn(T) -> Result<T> + Send + Sync>,
    df: Option<Arc<dyn Fn(T) -> Result<T> + Send + Sync>>,
    fd_step: T,
}

impl<T: Scalar> ScalarFunction<T> {
    pub fn new(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        ScalarFunction {
            f: Arc::new(move |s| Ok(f(s))),
            df: None,
            fd_step: T::lit(crate::geometry::DEFAULT_FD_STEP),
        }
    }

    pub fn with_derivative(mut self, df: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.df = Some(Arc::new(move |s| Ok(df(s))));
        self
    }

    pub fn value(&self, s: T) -> Result<T> {
        (self.f)(s)
    }

    pub fn derivative(&self, s: T, domain: (T, T)) -> Result<T> {
        match &self.df {
            Some(d) => d(s),
            None => {
                let f = self.f.clone();
                let v = fd_vec(&move |u| Ok(vec![f(u)?]), s, self.fd_step, domain)?;
                Ok(v[0])
            }
        }
    }
}

/// Result of applying the derivation: components of `Dσ` along the path.
///
/// The result is only as smooth as `σ'` is, so it does not claim a
/// derivative of its own; read it through [`DerivationResult::components`].
#[derive(Clone)]
pub struct DerivationResult<T> {
    path: PathCurve<T>,
    fiber_dim: usize,
    comp: VecFn<T>,
}

impl<T: Scalar> DerivationResult<T> {
    pub fn path(&self) -> &PathCurve<T> {
        &self.path
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn components(&self, s: T) -> Result<Vec<T>> {
        self.path.check_param(s)?;
        let v = (self.comp)(s)?;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "derivation components",
            });
        }
        Ok(v)
    }
}

fn require_same_path<T: Scalar>(
    a: &PathCurve<T>,
    b: &PathCurve<T>,
    what: &'static str,
) -> Result<()> {
    if !a.same_curve(b) && a.domain() != b.domain() {
        return Err(Error::InvalidInput(format!(
            "{what} requires objects over the same path"
        )));
    }
    Ok(())
}

/// Applies the derivation of a coefficient field to a section:
/// `(Dσ)(s) = σ'(s) + Γ(s) σ(s)`.
pub fn derivation_apply<T: Scalar>(
    coef: &CoefficientField<T>,
    sigma: &SectionAlongPath<T>,
) -> Result<DerivationResult<T>> {
    if coef.fiber_dim() != sigma.fiber_dim() {
        return Err(Error::DimensionMismatch {
            context: "derivation",
            expected: coef.fiber_dim(),
            found: sigma.fiber_dim(),
        });
    }
    require_same_path(coef.path(), sigma.path(), "derivation")?;
    if !sigma.is_smooth() {
        return Err(Error::NotDifferentiable);
    }
    let c = coef.clone();
    let sg = sigma.clone();
    Ok(DerivationResult {
        path: sigma.path().clone(),
        fiber_dim: sigma.fiber_dim(),
        comp: Arc::new(move |s| {
            let mut out = sg.derivative(s)?;
            let gv = c.gamma(s)?.mul_vec(&sg.components(s)?)?;
            for (o, g) in out.iter_mut().zip(gv) {
                *o += g;
            }
            Ok(out)
        }),
    })
}

/// One row of a limit-check report: a quotient width and its deviation.
#[derive(Clone, Copy, Debug)]
pub struct LimitEntry {
    pub epsilon: f64,
    pub deviation: f64,
}

/// Convergence record of the pulled-back difference quotient toward the
/// derivation's value at one parameter.
#[derive(Clone, Debug)]
pub struct LimitCheckReport {
    pub at: f64,
    pub reference: Vec<f64>,
    pub entries: Vec<LimitEntry>,
    /// Least-squares slope of `log deviation` against `log ε`; `None` when
    /// fewer than two usable entries exist or a deviation is exactly zero.
    pub estimated_order: Option<f64>,
}

/// Evaluates the difference quotient `[H(s, s+ε) σ(s+ε) - σ(s)] / ε` at each
/// `ε` and reports its deviation from the derivation value computed through
/// the coefficient route. For a transport-induced derivation the deviation
/// shrinks first order in `ε`.
pub fn derivation_limit_check<T: Scalar>(
    family: &TransportMatrixFamily<T>,
    sigma: &SectionAlongPath<T>,
    s: T,
    epsilons: &[T],
) -> Result<LimitCheckReport> {
    if family.fiber_dim() != sigma.fiber_dim() {
        return Err(Error::DimensionMismatch {
            context: "limit check",
            expected: family.fiber_dim(),
            found: sigma.fiber_dim(),
        });
    }
    require_same_path(family.path(), sigma.path(), "limit check")?;
    if epsilons.is_empty() {
        return Err(Error::InvalidInput("limit check needs at least one ε".into()));
    }
    let coef = CoefficientField::from_family(family, T::lit(crate::geometry::DEFAULT_FD_STEP));
    let reference = derivation_apply(&coef, sigma)?.components(s)?;
    let sigma_s = sigma.components(s)?;
    let mut entries = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps.is_finite() && eps > T::zero()) {
            return Err(Error::InvalidStep {
                step: eps.to_f64_lossy(),
                reason: "quotient width must be finite and positive",
            });
        }
        sigma.path().check_param(s + eps)?;
        let pulled = family.matrix(s, s + eps)?.mul_vec(&sigma.components(s + eps)?)?;
        let mut dev = T::zero();
        for i in 0..sigma.fiber_dim() {
            let quotient = (pulled[i] - sigma_s[i]) / eps;
            dev = dev.max((quotient - reference[i]).abs());
        }
        entries.push(LimitEntry {
            epsilon: eps.to_f64_lossy(),
            deviation: dev.to_f64_lossy(),
        });
    }
    // Least-squares slope of log(dev) vs log(ε).
    let usable: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.deviation > 0.0)
        .map(|e| (e.epsilon.ln(), e.deviation.ln()))
        .collect();
    let estimated_order = if usable.len() >= 2 {
        let n = usable.len() as f64;
        let sx: f64 = usable.iter().map(|(x, _)| x).sum();
        let sy: f64 = usable.iter().map(|(_, y)| y).sum();
        let sxx: f64 = usable.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = usable.iter().map(|(x, y)| x * y).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 0.0 {
            Some((n * sxy - sx * sy) / denom)
        } else {
            None
        }
    } else {
        None
    };
    Ok(LimitCheckReport {
        at: s.to_f64_lossy(),
        reference: reference.iter().map(|v| v.to_f64_lossy()).collect(),
        entries,
        estimated_order,
    })
}

/// Worst deviation of a sampled law, with the parameter that produced it.
#[derive(Clone, Copy, Debug)]
pub struct DeviationReport {
    pub max_deviation: f64,
    pub worst_at: f64,
}

impl DeviationReport {
    fn from_samples(samples: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut report = DeviationReport {
            max_deviation: 0.0,
            worst_at: f64::NAN,
        };
        for (at, dev) in samples {
            if report.worst_at.is_nan() || dev > report.max_deviation {
                report.max_deviation = dev;
                report.worst_at = at;
            }
        }
        report
    }
}

/// Measures the Leibniz law `D(fσ) = f' σ + f Dσ` for a scalar function `f`
/// at the given parameters.
pub fn leibniz_check<T: Scalar>(
    coef: &CoefficientField<T>,
    f: &ScalarFunction<T>,
    sigma: &SectionAlongPath<T>,
    samples: &[T],
) -> Result<DeviationReport> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("Leibniz check needs sample points".into()));
    }
    let domain = sigma.path().domain();
    // Product section f·σ with the product-rule derivative wired in, so the
    // left side differentiates the actual product.
    let fc = f.clone();
    let sg = sigma.clone();
    let fd = f.clone();
    let sgd = sigma.clone();
    let product = SectionAlongPath::try_from_fn(
        sigma.path().clone(),
        sigma.fiber_dim(),
        move |s| {
            let fv = fc.value(s)?;
            Ok(sg.components(s)?.into_iter().map(|x| x * fv).collect())
        },
    )
    .try_with_derivative(move |s| {
        let fv = fd.value(s)?;
        let dfv = fd.derivative(s, domain)?;
        let c = sgd.components(s)?;
        let dc = sgd.derivative(s)?;
        Ok(c.iter()
            .zip(&dc)
            .map(|(x, dx)| *x * dfv + *dx * fv)
            .collect())
    });
    let lhs = derivation_apply(coef, &product)?;
    let rhs_d = derivation_apply(coef, sigma)?;
    let mut rows = Vec::with_capacity(samples.len());
    for &s in samples {
        let l = lhs.components(s)?;
        let fv = f.value(s)?;
        let dfv = f.derivative(s, domain)?;
        let sig = sigma.components(s)?;
        let dsig = rhs_d.components(s)?;
        let mut dev = T::zero();
        for i in 0..sigma.fiber_dim() {
            let r = dfv * sig[i] + fv * dsig[i];
            dev = dev.max((l[i] - r).abs());
        }
        rows.push((s.to_f64_lossy(), dev.to_f64_lossy()));
    }
    Ok(DeviationReport::from_samples(rows))
}

/// Measures linearity `D(aσ + bτ) = a Dσ + b Dτ` at the given parameters.
pub fn linearity_check<T: Scalar>(
    coef: &CoefficientField<T>,
    sigma: &SectionAlongPath<T>,
    tau: &SectionAlongPath<T>,
    a: T,
    b: T,
    samples: &[T],
) -> Result<DeviationReport> {
    if sigma.fiber_dim() != tau.fiber_dim() {
        return Err(Error::DimensionMismatch {
            context: "linearity check",
            expected: sigma.fiber_dim(),
            found: tau.fiber_dim(),
        });
    }
    let sg = sigma.clone();
    let tu = tau.clone();
    let sgd = sigma.clone();
    let tud = tau.clone();
    let combo = SectionAlongPath::try_from_fn(
        sigma.path().clone(),
        sigma.fiber_dim(),
        move |s| {
            let x = sg.components(s)?;
            let y = tu.components(s)?;
            Ok(x.iter().zip(&y).map(|(xi, yi)| a * *xi + b * *yi).collect())
        },
    )
    .try_with_derivative(move |s| {
        let x = sgd.derivative(s)?;
        let y = tud.derivative(s)?;
        Ok(x.iter().zip(&y).map(|(xi, yi)| a * *xi + b * *yi).collect())
    });
    let lhs = derivation_apply(coef, &combo)?;
    let ds = derivation_apply(coef, sigma)?;
    let dt = derivation_apply(coef, tau)?;
    let mut rows = Vec::with_capacity(samples.len());
    for &s in samples {
        let l = lhs.components(s)?;
        let x = ds.components(s)?;
        let y = dt.components(s)?;
        let mut dev = T::zero();
        for i in 0..sigma.fiber_dim() {
            dev = dev.max((l[i] - (a * x[i] + b * y[i])).abs());
        }
        rows.push((s.to_f64_lossy(), dev.to_f64_lossy()));
    }
    Ok(DeviationReport::from_samples(rows))
}

/// Sampled solution of the transport equation `σ' + Γ σ = 0`.
#[derive(Clone, Debug)]
pub struct SectionSolution<T> {
    samples: Vec<(T, Vec<T>)>,
    fiber_dim: usize,
}

impl<T: Scalar> SectionSolution<T> {
    /// Grid samples in ascending parameter order.
    pub fn samples(&self) -> &[(T, Vec<T>)] {
        &self.samples
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    /// Components at the grid point nearest to `s` (exact match expected).
    pub fn at(&self, s: T) -> Option<&[T]> {
        self.samples
            .iter()
            .find(|(x, _)| (*x - s).abs() <= T::epsilon() * T::lit(64.0) * (T::one() + s.abs()))
            .map(|(_, v)| v.as_slice())
    }

    /// Spline interpolant of the solution, for use as a section.
    pub fn to_section(&self, path: &PathCurve<T>) -> Result<SectionAlongPath<T>> {
        let xs: Vec<T> = self.samples.iter().map(|(s, _)| *s).collect();
        let mut splines = Vec::with_capacity(self.fiber_dim);
        for i in 0..self.fiber_dim {
            let ys: Vec<T> = self.samples.iter().map(|(_, v)| v[i]).collect();
            splines.push(CubicSpline::natural(&xs, &ys)?);
        }
        let dim = self.fiber_dim;
        let sp = splines.clone();
        Ok(SectionAlongPath::try_from_fn(path.clone(), dim, move |s| {
            Ok(sp.iter().map(|c| c.eval(s)).collect())
        })
        .try_with_derivative(move |s| Ok(splines.iter().map(|c| c.deriv(s)).collect())))
    }
}

/// Solves the transport equation `σ' = -Γ σ` from `σ(s0) = sigma0`,
/// reporting components at every requested grid point. The grid must be
/// strictly increasing inside the path domain; `s0` itself need not be on
/// the grid. Integration runs outward from `s0` in both directions.
pub fn solve_transport_equation<T: Scalar>(
    coef: &CoefficientField<T>,
    s0: T,
    sigma0: &[T],
    grid: &[T],
    step: T,
) -> Result<SectionSolution<T>> {
    if sigma0.len() != coef.fiber_dim() {
        return Err(Error::DimensionMismatch {
            context: "transport equation",
            expected: coef.fiber_dim(),
            found: sigma0.len(),
        });
    }
    coef.path().check_param(s0)?;
    ode::check_step(step)?;
    if grid.is_empty() {
        return Err(Error::GridTooCoarse {
            context: "transport equation",
            needed: 1,
            found: 0,
        });
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput(
                "sample grid must be strictly increasing".into(),
            ));
        }
    }
    for &g in grid {
        coef.path().check_param(g)?;
    }

    let n = coef.fiber_dim();
    let mut rhs = |u: T, y: &[T], out: &mut [T]| -> Result<()> {
        let g = coef.gamma(u)?;
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc += g[(i, j)] * y[j];
            }
            out[i] = -acc;
        }
        Ok(())
    };

    let split = grid.partition_point(|&g| g < s0);
    let mut samples: Vec<(T, Vec<T>)> = Vec::with_capacity(grid.len());
    // Downward sweep from s0 through grid points below it.
    let mut y = sigma0.to_vec();
    let mut from = s0;
    for &g in grid[..split].iter().rev() {
        y = ode::integrate(&mut rhs, from, &y, g, step)?;
        from = g;
        samples.push((g, y.clone()));
    }
    samples.reverse();
    // Upward sweep from s0 through the rest.
    let mut y = sigma0.to_vec();
    let mut from = s0;
    for &g in &grid[split..] {
        y = ode::integrate(&mut rhs, from, &y, g, step)?;
        from = g;
        samples.push((g, y.clone()));
    }
    Ok(SectionSolution {
        samples,
        fiber_dim: n,
    })
}

/// Verdict of sampling the transport law `σ(t) = H(t, base) σ(base)`.
#[derive(Clone, Copy, Debug)]
pub struct TransportLawCheck {
    pub base: f64,
    pub max_deviation: f64,
    pub worst_at: f64,
}

impl TransportLawCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Samples whether a section is transported by the family: compares
/// `σ(t_i)` with `H(t_i, base) σ(base)` on a uniform parameter grid. By the
/// composition law the verdict does not depend on the base point, and
/// callers may pass different bases to confirm exactly that.
pub fn is_l_transported<T: Scalar>(
    family: &TransportMatrixFamily<T>,
    sigma: &SectionAlongPath<T>,
    n_samples: usize,
    base: Option<T>,
) -> Result<TransportLawCheck> {
    if family.fiber_dim() != sigma.fiber_dim() {
        return Err(Error::DimensionMismatch {
            context: "transport law check",
            expected: family.fiber_dim(),
            found: sigma.fiber_dim(),
        });
    }
    require_same_path(family.path(), sigma.path(), "transport law check")?;
    if n_samples < 2 {
        return Err(Error::InvalidInput(
            "transport law check needs at least two samples".into(),
        ));
    }
    let (a, b) = family.path().domain();
    let base = base.unwrap_or(a);
    family.path().check_param(base)?;
    let ref_val = sigma.components(base)?;
    let mut rows = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = a
            + (b - a) * T::from_usize(i).expect("sample index fits the scalar")
                / T::from_usize(n_samples - 1).expect("sample count fits the scalar");
        let expected = family.matrix(t, base)?.mul_vec(&ref_val)?;
        let got = sigma.components(t)?;
        let mut dev = T::zero();
        for i in 0..sigma.fiber_dim() {
            dev = dev.max((expected[i] - got[i]).abs());
        }
        rows.push((t.to_f64_lossy(), dev.to_f64_lossy()));
    }
    let report = DeviationReport::from_samples(rows);
    Ok(TransportLawCheck {
        base: base.to_f64_lossy(),
        max_deviation: report.max_deviation,
        worst_at: report.worst_at,
    })
}

/// Splitting of a transport derivation against a connection on the base:
/// `D = ∇ + H_V`, where `∇` is the covariant derivative along the path and
/// the deformation field `H_V(s) = Γ(s) - Γ_conn(γ(s)) γ̇(s)` is a plain
/// matrix acting on fiber components. The deformation is assembled at the
/// coefficient level: differencing `H` numerically here would stack two
/// truncation errors for no benefit.
#[derive(Clone)]
pub struct CovariantDecomposition<T> {
    coef: CoefficientField<T>,
    connection_part: CoefficientField<T>,
}

impl<T: Scalar> CovariantDecomposition<T> {
    /// The connection-induced part `Γ_conn(γ(s)) γ̇(s)`.
    pub fn connection_part(&self, s: T) -> Result<Matrix<T>> {
        self.connection_part.gamma(s)
    }

    /// The deformation matrix `H_V(s)`.
    pub fn deformation(&self, s: T) -> Result<Matrix<T>> {
        self.coef.gamma(s)?.sub(&self.connection_part.gamma(s)?)
    }

    /// Largest deformation entry over a uniform parameter grid.
    pub fn max_deformation(&self, n_samples: usize) -> Result<f64> {
        let (a, b) = self.coef.path().domain();
        let mut worst: f64 = 0.0;
        for i in 0..n_samples.max(2) {
            let s = a
                + (b - a) * T::from_usize(i).expect("sample index fits the scalar")
                    / T::from_usize(n_samples.max(2) - 1).expect("sample count fits the scalar");
            worst = worst.max(self.deformation(s)?.max_abs().to_f64_lossy());
        }
        Ok(worst)
    }
}

/// Splits a transport derivation into covariant derivative plus deformation
/// with respect to a connection on the base. The fiber must be the tangent
/// space of the chart.
pub fn covariant_decomposition<T: Scalar>(
    coef: &CoefficientField<T>,
    conn: &ConnectionField<T>,
) -> Result<CovariantDecomposition<T>> {
    if coef.fiber_dim() != conn.dim() || coef.path().dim() != conn.dim() {
        return Err(Error::DimensionMismatch {
            context: "covariant decomposition",
            expected: conn.dim(),
            found: coef.fiber_dim(),
        });
    }
    let connection_part = CoefficientField::from_connection(conn, coef.path())?;
    Ok(CovariantDecomposition {
        coef: coef.clone(),
        connection_part,
    })
}

/// Covariant derivative of a section along the path:
/// `(∇σ)^i = dσ^i/ds + Γ^i_{jk}(γ(s)) γ̇^k(s) σ^j(s)`.
pub fn covariant_derivative_along<T: Scalar>(
    conn: &ConnectionField<T>,
    sigma: &SectionAlongPath<T>,
) -> Result<DerivationResult<T>> {
    let coef = CoefficientField::from_connection(conn, sigma.path())?;
    derivation_apply(&coef, sigma)
}
