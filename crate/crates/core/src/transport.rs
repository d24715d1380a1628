//! Linear transports along a path: two-point matrix families, their
//! generators, and their coefficient fields.
//!
//! A transport assigns to each parameter pair `(t, s)` an invertible matrix
//! `H(t, s)` mapping fiber components at `γ(s)` to fiber components at
//! `γ(t)`, subject to the two defining laws
//!
//! ```text
//! H(r, t) · H(t, s) = H(r, s)        (composition)
//! H(s, s) = I                        (identity)
//! ```
//!
//! Every such family can be written `H(t, s) = F(t)⁻¹ F(s)` for some
//! invertible matrix function `F`, the transport's generator. `F` is far
//! from unique: `D · F` generates the same family for any constant
//! invertible `D`. The derivative data of the family is its coefficient
//! matrix `Γ(s) = F(s)⁻¹ F'(s)`, and conversely the family is recovered
//! from coefficients by integrating `∂H(t, s)/∂t = -Γ(t) H(t, s)` from the
//! identity at `t = s`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{ConnectionField, FrameField, PathCurve};
use crate::linalg::{invert_capped, Lu, Matrix};
use crate::ode;
use crate::scalar::Scalar;

/// Default condition-number cap for generator inversions.
pub const TRANSPORT_CONDITION_CAP: f64 = 1e12;
/// Default integration step for coefficient-backed families.
pub const DEFAULT_ODE_STEP: f64 = 1e-3;
/// A path counts as closed when its endpoint gap stays below this.
pub const CLOSURE_TOLERANCE: f64 = 1e-9;

/// How a family's matrices are produced. Recorded so callers can pick
/// tolerances that match the numeric route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Matrices come from a user-supplied closed form.
    ClosedForm,
    /// Matrices are `F(t)⁻¹ F(s)` for an explicit generator.
    FromGenerator,
    /// Matrices are integrated from a coefficient field.
    OdeIntegrated,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::FromGenerator => "from-generator",
            Provenance::OdeIntegrated => "ode-integrated",
        }
    }
}

type MatrixFn<T> = Arc<dyn Fn(T) -> Result<Matrix<T>> + Send + Sync>;
type TwoPointFn<T> = Arc<dyn Fn(T, T) -> Result<Matrix<T>> + Send + Sync>;

/// Centered difference of a matrix-valued map, switching to one-sided
/// second-order stencils near the ends of `[a, b]`.
fn fd_matrix<T: Scalar>(
    f: &dyn Fn(T) -> Result<Matrix<T>>,
    s: T,
    h: T,
    (a, b): (T, T),
) -> Result<Matrix<T>> {
    let two_h = h + h;
    if s - h >= a && s + h <= b {
        let plus = f(s + h)?;
        let minus = f(s - h)?;
        Ok(plus.sub(&minus)?.scale(T::one() / two_h))
    } else if s + two_h <= b {
        let f0 = f(s)?.scale(T::lit(-3.0));
        let f1 = f(s + h)?.scale(T::lit(4.0));
        let f2 = f(s + two_h)?;
        Ok(f0.add(&f1)?.sub(&f2)?.scale(T::one() / two_h))
    } else if s - two_h >= a {
        let f0 = f(s)?.scale(T::lit(3.0));
        let f1 = f(s - h)?.scale(T::lit(-4.0));
        let f2 = f(s - two_h)?;
        Ok(f0.add(&f1)?.add(&f2)?.scale(T::one() / two_h))
    } else {
        Err(Error::InvalidStep {
            step: h.to_f64_lossy(),
            reason: "domain too short for the difference stencil",
        })
    }
}

/// Generator of a transport family: an invertible matrix function `F` along
/// a path, defining `H(t, s) = F(t)⁻¹ F(s)`.
#[derive(Clone)]
pub struct TransportGenerator<T> {
    path: PathCurve<T>,
    fiber_dim: usize,
    f: MatrixFn<T>,
    df: Option<MatrixFn<T>>,
    condition_cap: f64,
    fd_step: T,
}

impl<T: Scalar> TransportGenerator<T> {
    pub fn new(
        path: PathCurve<T>,
        fiber_dim: usize,
        f: impl Fn(T) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self::try_new(path, fiber_dim, move |s| Ok(f(s)))
    }

    pub fn try_new(
        path: PathCurve<T>,
        fiber_dim: usize,
        f: impl Fn(T) -> Result<Matrix<T>> + Send + Sync + 'static,
    ) -> Self {
        TransportGenerator {
            path,
            fiber_dim,
            f: Arc::new(f),
            df: None,
            condition_cap: TRANSPORT_CONDITION_CAP,
            fd_step: T::lit(crate::geometry::DEFAULT_FD_STEP),
        }
    }

    /// Attaches the exact derivative `F'`; otherwise finite differences of
    /// `F` are used with the configured step.
    pub fn with_derivative(
        mut self,
        df: impl Fn(T) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        self.df = Some(Arc::new(move |s| Ok(df(s))));
        self
    }

    pub fn try_with_derivative(
        mut self,
        df: impl Fn(T) -> Result<Matrix<T>> + Send + Sync + 'static,
    ) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_condition_cap(mut self, cap: f64) -> Self {
        self.condition_cap = cap;
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

    pub fn condition_cap(&self) -> f64 {
        self.condition_cap
    }

    fn checked(&self, s: T, m: Matrix<T>, context: &'static str) -> Result<Matrix<T>> {
        let _ = s;
        if m.rows() != self.fiber_dim || m.cols() != self.fiber_dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.fiber_dim,
                found: m.rows().max(m.cols()),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite { context });
        }
        Ok(m)
    }

    /// `F(s)` after shape and finiteness checks.
    pub fn matrix(&self, s: T) -> Result<Matrix<T>> {
        self.path.check_param(s)?;
        let m = (self.f)(s)?;
        self.checked(s, m, "transport generator")
    }

    /// `F'(s)`, exact if attached, otherwise differenced.
    pub fn derivative(&self, s: T) -> Result<Matrix<T>> {
        self.path.check_param(s)?;
        let m = match &self.df {
            Some(df) => df(s)?,
            None => {
                let f = self.f.clone();
                fd_matrix(&move |u| f(u), s, self.fd_step, self.path.domain())?
            }
        };
        self.checked(s, m, "transport generator derivative")
    }

    /// Capped inverse `F(s)⁻¹`.
    pub fn inverse_matrix(&self, s: T) -> Result<Matrix<T>> {
        let m = self.matrix(s)?;
        invert_capped(&m, self.condition_cap, "transport generator")
    }
}

/// Two-point matrix `H(t, s) = F(t)⁻¹ F(s)` straight from a generator.
pub fn matrix_from_generator<T: Scalar>(
    gen: &TransportGenerator<T>,
    t: T,
    s: T,
) -> Result<Matrix<T>> {
    gen.path.check_param(t)?;
    gen.path.check_param(s)?;
    if t == s {
        return Ok(Matrix::identity(gen.fiber_dim));
    }
    let ft = gen.matrix(t)?;
    let fs = gen.matrix(s)?;
    let lu = Lu::factor(&ft, "transport generator")?;
    let inv = lu.inverse()?;
    let cond = ft.norm_inf().to_f64_lossy() * inv.norm_inf().to_f64_lossy();
    if !cond.is_finite() || cond > gen.condition_cap {
        return Err(Error::IllConditioned {
            context: "transport generator",
            condition: cond,
            cap: gen.condition_cap,
        });
    }
    lu.solve_matrix(&fs)
}

/// Coefficient matrix `Γ(s) = F(s)⁻¹ F'(s)` of a generator's family.
pub fn coefficients_from_generator<T: Scalar>(
    gen: &TransportGenerator<T>,
    s: T,
) -> Result<Matrix<T>> {
    let fs = gen.matrix(s)?;
    let dfs = gen.derivative(s)?;
    let lu = Lu::factor(&fs, "transport generator")?;
    let inv = lu.inverse()?;
    let cond = fs.norm_inf().to_f64_lossy() * inv.norm_inf().to_f64_lossy();
    if !cond.is_finite() || cond > gen.condition_cap {
        return Err(Error::IllConditioned {
            context: "transport generator",
            condition: cond,
            cap: gen.condition_cap,
        });
    }
    lu.solve_matrix(&dfs)
}

/// Coefficient matrix field `s ↦ Γ(s)` of a transport along one path.
#[derive(Clone)]
pub struct CoefficientField<T> {
    path: PathCurve<T>,
    fiber_dim: usize,
    gamma: MatrixFn<T>,
}

impl<T: Scalar> CoefficientField<T> {
    pub fn new(
        path: PathCurve<T>,
        fiber_dim: usize,
        gamma: impl Fn(T) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self::try_new(path, fiber_dim, move |s| Ok(gamma(s)))
    }

    pub fn try_new(
        path: PathCurve<T>,
        fiber_dim: usize,
        gamma: impl Fn(T) -> Result<Matrix<T>> + Send + Sync + 'static,
    ) -> Self {
        CoefficientField {
            path,
            fiber_dim,
            gamma: Arc::new(gamma),
        }
    }

    /// Coefficients induced by a generator.
    pub fn from_generator(gen: &TransportGenerator<T>) -> Self {
        let g = gen.clone();
        Self::try_new(gen.path.clone(), gen.fiber_dim, move |s| {
            coefficients_from_generator(&g, s)
        })
    }

    /// Coefficients recovered from an arbitrary family by differencing
    /// `Γ(s) = ∂H(s, u)/∂u` at `u = s`. Accuracy is limited by the stencil;
    /// prefer the generator or connection routes when available.
    pub fn from_family(family: &TransportMatrixFamily<T>, fd_step: T) -> Self {
        let fam = family.clone();
        let domain = family.path.domain();
        Self::try_new(family.path.clone(), family.fiber_dim, move |s| {
            let f = |u: T| fam.matrix(s, u);
            fd_matrix(&f, s, fd_step, domain)
        })
    }

    /// Parallel-transport coefficients of a connection along a path:
    /// `Γ(s)^i_j = Γ^i_{jk}(γ(s)) γ̇^k(s)`. The fiber is the tangent space,
    /// so the connection's chart dimension must match the path's.
    pub fn from_connection(
        conn: &ConnectionField<T>,
        path: &PathCurve<T>,
    ) -> Result<Self> {
        if conn.dim() != path.dim() {
            return Err(Error::DimensionMismatch {
                context: "connection along path",
                expected: path.dim(),
                found: conn.dim(),
            });
        }
        let conn = conn.clone();
        let p = path.clone();
        Ok(Self::try_new(path.clone(), path.dim(), move |s| {
            let x = p.position(s)?;
            let v = p.velocity(s)?;
            conn.coefficients(&x)?.contract_last(&v)
        }))
    }

    pub fn path(&self) -> &PathCurve<T> {
        &self.path
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    /// `Γ(s)` after shape and finiteness checks.
    pub fn gamma(&self, s: T) -> Result<Matrix<T>> {
        self.path.check_param(s)?;
        let m = (self.gamma)(s)?;
        if m.rows() != self.fiber_dim || m.cols() != self.fiber_dim {
            return Err(Error::DimensionMismatch {
                context: "transport coefficients",
                expected: self.fiber_dim,
                found: m.rows().max(m.cols()),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite {
                context: "transport coefficients",
            });
        }
        Ok(m)
    }
}

/// Two-point matrix by integrating `∂H(t, s)/∂t = -Γ(t) H(t, s)` from the
/// identity at `t = s` with fixed-step fourth-order Runge-Kutta.
pub fn matrix_from_coefficients<T: Scalar>(
    coef: &CoefficientField<T>,
    t: T,
    s: T,
    step: T,
) -> Result<Matrix<T>> {
    coef.path.check_param(t)?;
    coef.path.check_param(s)?;
    ode::check_step(step)?;
    let n = coef.fiber_dim;
    if t == s {
        return Ok(Matrix::identity(n));
    }
    let y0 = Matrix::identity(n).into_vec();
    let mut rhs = |u: T, y: &[T], out: &mut [T]| -> Result<()> {
        let g = coef.gamma(u)?;
        for i in 0..n {
            for j in 0..n {
                let mut acc = T::zero();
                for k in 0..n {
                    acc += g[(i, k)] * y[k * n + j];
                }
                out[i * n + j] = -acc;
            }
        }
        Ok(())
    };
    let y = ode::integrate(&mut rhs, s, &y0, t, step)?;
    Matrix::from_vec(n, n, y)
}

enum Backend<T> {
    ClosedForm(TwoPointFn<T>),
    Generator(TransportGenerator<T>),
    Integrated { coef: CoefficientField<T>, step: T },
}

impl<T: Clone> Clone for Backend<T> {
    fn clone(&self) -> Self {
        match self {
            Backend::ClosedForm(f) => Backend::ClosedForm(f.clone()),
            Backend::Generator(g) => Backend::Generator(g.clone()),
            Backend::Integrated { coef, step } => Backend::Integrated {
                coef: coef.clone(),
                step: step.clone(),
            },
        }
    }
}

/// Family of transport matrices `(t, s) ↦ H(t, s)` along one path.
///
/// Equal parameters short-circuit to the exact identity; the identity law
/// holds by construction, and tests exercise it through near-equal pairs as
/// well. The composition law is a property of the data, not of this type:
/// the check suites measure it.
#[derive(Clone)]
pub struct TransportMatrixFamily<T> {
    path: PathCurve<T>,
    fiber_dim: usize,
    backend: Backend<T>,
    provenance: Provenance,
}

impl<T: Scalar> TransportMatrixFamily<T> {
    /// Family from a user-supplied closed form for `H(t, s)`.
    pub fn from_closed_form(
        path: PathCurve<T>,
        fiber_dim: usize,
        h: impl Fn(T, T) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self::try_from_closed_form(path, fiber_dim, move |t, s| Ok(h(t, s)))
    }

    pub fn try_from_closed_form(
        path: PathCurve<T>,
        fiber_dim: usize,
        h: impl Fn(T, T) -> Result<Matrix<T>> + Send + Sync + 'static,
    ) -> Self {
        TransportMatrixFamily {
            path,
            fiber_dim,
            backend: Backend::ClosedForm(Arc::new(h)),
            provenance: Provenance::ClosedForm,
        }
    }

    /// Family `H(t, s) = F(t)⁻¹ F(s)` of a generator.
    pub fn from_generator(gen: TransportGenerator<T>) -> Self {
        TransportMatrixFamily {
            path: gen.path.clone(),
            fiber_dim: gen.fiber_dim,
            backend: Backend::Generator(gen),
            provenance: Provenance::FromGenerator,
        }
    }

    /// Family integrated from a coefficient field at a fixed step.
    pub fn from_coefficients(coef: CoefficientField<T>, step: T) -> Result<Self> {
        ode::check_step(step)?;
        Ok(TransportMatrixFamily {
            path: coef.path.clone(),
            fiber_dim: coef.fiber_dim,
            backend: Backend::Integrated { coef, step },
            provenance: Provenance::OdeIntegrated,
        })
    }

    pub fn path(&self) -> &PathCurve<T> {
        &self.path
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Integration step, for coefficient-backed families.
    pub fn step(&self) -> Option<T> {
        match &self.backend {
            Backend::Integrated { step, .. } => Some(*step),
            _ => None,
        }
    }

    /// The transport matrix `H(t, s)`.
    pub fn matrix(&self, t: T, s: T) -> Result<Matrix<T>> {
        self.path.check_param(t)?;
        self.path.check_param(s)?;
        if t == s {
            return Ok(Matrix::identity(self.fiber_dim));
        }
        let m = match &self.backend {
            Backend::ClosedForm(h) => h(t, s)?,
            Backend::Generator(gen) => matrix_from_generator(gen, t, s)?,
            Backend::Integrated { coef, step } => matrix_from_coefficients(coef, t, s, *step)?,
        };
        if m.rows() != self.fiber_dim || m.cols() != self.fiber_dim {
            return Err(Error::DimensionMismatch {
                context: "transport matrix",
                expected: self.fiber_dim,
                found: m.rows().max(m.cols()),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite {
                context: "transport matrix",
            });
        }
        Ok(m)
    }
}

/// Transports fiber components from `γ(s)` to `γ(t)`.
pub fn transport_vector<T: Scalar>(
    family: &TransportMatrixFamily<T>,
    t: T,
    s: T,
    v: &[T],
) -> Result<Vec<T>> {
    family.matrix(t, s)?.mul_vec(v)
}

/// Frame in which a generator's transport becomes the identity: the basis
/// `E(s) = F(s)⁻¹`, so that `E(t)⁻¹ H(t, s) E(s) = I` for all pairs. In this
/// frame transported components are constant.
pub fn special_frame<T: Scalar>(gen: &TransportGenerator<T>) -> FrameField<T> {
    let g = gen.clone();
    FrameField::try_new(gen.path.clone(), gen.fiber_dim, move |s| {
        let f = g.matrix(s)?;
        crate::linalg::invert(&f, "special frame basis")
    })
}

/// Rewrites a family in another frame: `H'(t, s) = A(t)⁻¹ H(t, s) A(s)`
/// where `A(s)` is the frame's basis. Provenance is preserved, since the
/// numeric route producing the matrices has not changed.
pub fn change_transport_frame<T: Scalar>(
    family: &TransportMatrixFamily<T>,
    frame: &FrameField<T>,
) -> Result<TransportMatrixFamily<T>> {
    if frame.fiber_dim() != family.fiber_dim {
        return Err(Error::DimensionMismatch {
            context: "frame change",
            expected: family.fiber_dim,
            found: frame.fiber_dim(),
        });
    }
    if !frame.path().same_curve(&family.path) && frame.path().domain() != family.path.domain() {
        return Err(Error::InvalidInput(
            "frame change requires a frame over the family's path".into(),
        ));
    }
    let fam = family.clone();
    let fr = frame.clone();
    Ok(TransportMatrixFamily {
        path: family.path.clone(),
        fiber_dim: family.fiber_dim,
        backend: Backend::ClosedForm(Arc::new(move |t, s| {
            let h = fam.matrix(t, s)?;
            let at_inv = fr.inverse_basis(t)?;
            let as_ = fr.basis(s)?;
            at_inv.mul(&h)?.mul(&as_)
        })),
        provenance: family.provenance,
    })
}

/// Transport around a closed path: `H(b, a)` for domain `[a, b]`. The path
/// endpoints must coincide within [`CLOSURE_TOLERANCE`].
pub fn holonomy<T: Scalar>(family: &TransportMatrixFamily<T>) -> Result<Matrix<T>> {
    let gap = family.path.closure_gap()?.to_f64_lossy();
    if gap > CLOSURE_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "holonomy needs a closed path; endpoint gap is {gap:.3e}"
        )));
    }
    let (a, b) = family.path.domain();
    family.matrix(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn line(domain: (f64, f64)) -> PathCurve<f64> {
        PathCurve::from_fn(domain, 1, |s| vec![s]).unwrap()
    }

    fn diag_exp_generator(domain: (f64, f64)) -> TransportGenerator<f64> {
        TransportGenerator::new(line(domain), 2, |s: f64| {
            Matrix::from_rows(&[vec![s.exp(), 0.0], vec![0.0, (2.0 * s).exp()]]).unwrap()
        })
    }

    fn rotation(s: f64) -> Matrix<f64> {
        Matrix::from_rows(&[vec![s.cos(), -s.sin()], vec![s.sin(), s.cos()]]).unwrap()
    }

    #[test]
    fn generator_family_matches_closed_form() {
        // F = diag(e^s, e^{2s}) gives H(t, s) = diag(e^{s-t}, e^{2(s-t)}).
        let gen = diag_exp_generator((0.0, 1.0));
        let h = matrix_from_generator(&gen, 1.0, 0.0).unwrap();
        assert!((h[(0, 0)] - (-1.0_f64).exp()).abs() < 1e-14);
        assert!((h[(1, 1)] - (-2.0_f64).exp()).abs() < 1e-14);
        assert_eq!(h[(0, 1)], 0.0);
        assert_eq!(h[(1, 0)], 0.0);
    }

    #[test]
    fn coefficients_of_rotation_generator() {
        // F(s) = R(s) has Γ(s) = R(-s) R'(s), constant [[0, -1], [1, 0]].
        let gen = TransportGenerator::new(line((0.0, PI)), 2, rotation)
            .with_derivative(|s: f64| {
                Matrix::from_rows(&[vec![-s.sin(), -s.cos()], vec![s.cos(), -s.sin()]]).unwrap()
            });
        let g = coefficients_from_generator(&gen, 0.9).unwrap();
        let expected = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!(g.distance_max(&expected).unwrap() < 1e-12);

        // Same generator without the exact derivative: differenced result
        // agrees to stencil accuracy.
        let gen_fd = TransportGenerator::new(line((0.0, PI)), 2, rotation);
        let g_fd = coefficients_from_generator(&gen_fd, 0.9).unwrap();
        assert!(g_fd.distance_max(&expected).unwrap() < 1e-8);
    }

    #[test]
    fn composition_and_identity_spot_check() {
        let gen = TransportGenerator::new(line((0.0, 2.0)), 2, |s: f64| {
            rotation(s)
                .mul(&Matrix::from_rows(&[vec![1.0 + s, 0.0], vec![0.0, 1.0]]).unwrap())
                .unwrap()
        });
        let family = TransportMatrixFamily::from_generator(gen);
        let (r, t, s) = (1.7, 0.4, 1.1);
        let lhs = family
            .matrix(r, t)
            .unwrap()
            .mul(&family.matrix(t, s).unwrap())
            .unwrap();
        let rhs = family.matrix(r, s).unwrap();
        assert!(lhs.distance_max(&rhs).unwrap() < 1e-13);
        let id = family.matrix(0.8, 0.8).unwrap();
        assert_eq!(id.distance_max(&Matrix::identity(2)).unwrap(), 0.0);
    }

    #[test]
    fn constant_rotation_coefficients_integrate_to_rotation_matrix() {
        // Γ = [[0, -1], [1, 0]] constant: H(t, s) = exp(-Γ (t - s)), which at
        // t - s = π/2 is [[0, 1], [-1, 0]].
        let coef = CoefficientField::new(line((0.0, PI)), 2, |_s: f64| {
            Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
        });
        let h = matrix_from_coefficients(&coef, PI / 2.0, 0.0, 1e-3).unwrap();
        let expected = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(h.distance_max(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn generator_coefficients_round_trip_through_integration() {
        let gen = diag_exp_generator((0.0, 1.0));
        let coef = CoefficientField::from_generator(&gen);
        let integrated = TransportMatrixFamily::from_coefficients(coef, 1e-3).unwrap();
        assert_eq!(integrated.provenance(), Provenance::OdeIntegrated);
        let direct = matrix_from_generator(&gen, 0.9, 0.2).unwrap();
        let via_ode = integrated.matrix(0.9, 0.2).unwrap();
        assert!(direct.distance_max(&via_ode).unwrap() < 1e-7);
    }

    #[test]
    fn coefficients_recovered_from_family_by_differencing() {
        let gen = diag_exp_generator((0.0, 1.0));
        let family = TransportMatrixFamily::from_generator(gen.clone());
        let rec = CoefficientField::from_family(&family, 1e-6);
        let exact = coefficients_from_generator(&gen, 0.5).unwrap();
        let diffed = rec.gamma(0.5).unwrap();
        assert!(exact.distance_max(&diffed).unwrap() < 1e-8);
        // Endpoints use the one-sided stencil and must still work.
        let at_end = rec.gamma(1.0).unwrap();
        let exact_end = coefficients_from_generator(&gen, 1.0).unwrap();
        assert!(exact_end.distance_max(&at_end).unwrap() < 1e-7);
    }

    #[test]
    fn transported_vector_matches_hand_computation() {
        let gen = diag_exp_generator((0.0, 1.0));
        let family = TransportMatrixFamily::from_generator(gen);
        let w = transport_vector(&family, 1.0, 0.0, &[1.0, 1.0]).unwrap();
        assert!((w[0] - (-1.0_f64).exp()).abs() < 1e-14);
        assert!((w[1] - (-2.0_f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn special_frame_trivializes_the_family() {
        let gen = TransportGenerator::new(line((0.0, 2.0)), 2, |s: f64| {
            rotation(s)
                .mul(&Matrix::from_rows(&[vec![(0.3 * s).exp(), 0.0], vec![0.0, 1.0]]).unwrap())
                .unwrap()
        });
        let family = TransportMatrixFamily::from_generator(gen.clone());
        let frame = special_frame(&gen);
        let trivial = change_transport_frame(&family, &frame).unwrap();
        assert_eq!(trivial.provenance(), Provenance::FromGenerator);
        for (t, s) in [(0.0, 2.0), (1.3, 0.2), (0.5, 0.5)] {
            let h = trivial.matrix(t, s).unwrap();
            assert!(
                h.distance_max(&Matrix::identity(2)).unwrap() < 1e-12,
                "H'({t},{s}) not identity: {h:?}"
            );
        }
    }

    #[test]
    fn holonomy_requires_a_closed_path() {
        let open = PathCurve::from_fn((0.0, 1.0), 2, |s: f64| vec![s, 0.0]).unwrap();
        let family = TransportMatrixFamily::from_closed_form(open, 2, |_t, _s| {
            Matrix::identity(2)
        });
        assert!(holonomy(&family).is_err());

        let loop_path =
            PathCurve::from_fn((0.0, 2.0 * PI), 2, |s: f64| vec![s.cos(), s.sin()]).unwrap();
        let gen = TransportGenerator::new(loop_path, 2, rotation);
        let family = TransportMatrixFamily::from_generator(gen);
        // F = R(s): holonomy is R(2π)⁻¹ R(0) = I.
        let h = holonomy(&family).unwrap();
        assert!(h.distance_max(&Matrix::identity(2)).unwrap() < 1e-12);
    }

    #[test]
    fn ill_conditioned_generator_is_reported() {
        let gen = TransportGenerator::new(line((0.0, 1.0)), 2, |s: f64| {
            Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-15 + 0.0 * s]]).unwrap()
        });
        assert!(matches!(
            matrix_from_generator(&gen, 1.0, 0.0),
            Err(Error::IllConditioned { .. } | Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn connection_coefficients_along_a_latitude_circle() {
        // Latitude θ = θ₀ at unit speed in φ: Γ(s) is constant with the
        // characteristic off-diagonal pair.
        let theta0 = PI / 3.0;
        let path = PathCurve::from_fn((0.0, 2.0 * PI), 2, move |s| vec![theta0, s])
            .unwrap()
            .with_velocity(|_s| vec![0.0, 1.0])
            .unwrap();
        let conn = ConnectionField::unit_sphere();
        let coef = CoefficientField::from_connection(&conn, &path).unwrap();
        let g = coef.gamma(1.0).unwrap();
        assert!((g[(0, 1)] + theta0.sin() * theta0.cos()).abs() < 1e-14);
        assert!((g[(1, 0)] - theta0.cos() / theta0.sin()).abs() < 1e-14);
        assert_eq!(g[(0, 0)], 0.0);
        assert_eq!(g[(1, 1)], 0.0);
    }
}
