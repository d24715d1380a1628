//! Transport of tensor components and the consistency laws that tie the
//! vector, covector, and scalar transports together.
//!
//! A rank-`(p, q)` tensor transports slot by slot: each contravariant slot
//! through the vector matrix `H(t, s)`, each covariant slot through the
//! covector matrix `K(t, s)`, and rank-`(0, 0)` scalars through a two-point
//! factor `h(t, s)`. The rule's mode records which compatibility laws the
//! parts are claimed to satisfy:
//!
//! * consistency with the tensor product holds for any per-slot rule;
//! * consistency with contraction additionally forces `Hᵀ K = I` (so
//!   `K = (Hᵀ)⁻¹`) and pins the scalar factor to `h ≡ 1`.
//!
//! [`check_consistency`] measures the claimed laws on random samples instead
//! of trusting the claim.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::transport::TransportMatrixFamily;

/// Compatibility laws a [`TensorTransportRule`] claims to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsistencyMode {
    /// The rank families are only claimed consistent with tensor products.
    TensorProduct,
    /// Additionally consistent with contractions: `Hᵀ K = I` and `h ≡ 1`.
    TensorProductAndContraction,
}

impl ConsistencyMode {
    pub fn label(self) -> &'static str {
        match self {
            ConsistencyMode::TensorProduct => "tensor-product",
            ConsistencyMode::TensorProductAndContraction => "tensor-product-and-contraction",
        }
    }
}

/// Dense components of a rank-`(p, q)` tensor at one point `γ(anchor)` of a
/// path, stored row-major with all contravariant indices before the
/// covariant ones and the last index varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorComponents<T> {
    p: usize,
    q: usize,
    dim: usize,
    anchor: T,
    data: Vec<T>,
}

fn checked_len(dim: usize, slots: usize) -> Result<usize> {
    if dim == 0 {
        return Err(Error::InvalidInput("tensor dimension must be positive".into()));
    }
    let mut len: usize = 1;
    for _ in 0..slots {
        len = len.checked_mul(dim).ok_or_else(|| {
            Error::InvalidInput("tensor rank too large for dense storage".into())
        })?;
    }
    Ok(len)
}

impl<T: Scalar> TensorComponents<T> {
    pub fn new(p: usize, q: usize, dim: usize, anchor: T, data: Vec<T>) -> Result<Self> {
        let len = checked_len(dim, p + q)?;
        if data.len() != len {
            return Err(Error::DimensionMismatch {
                context: "tensor components",
                expected: len,
                found: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "tensor components",
            });
        }
        Ok(TensorComponents {
            p,
            q,
            dim,
            anchor,
            data,
        })
    }

    pub fn zeros(p: usize, q: usize, dim: usize, anchor: T) -> Result<Self> {
        let len = checked_len(dim, p + q)?;
        Self::new(p, q, dim, anchor, vec![T::zero(); len])
    }

    /// Rank-`(0, 0)` tensor: a single scalar value.
    pub fn scalar(value: T, anchor: T) -> Result<Self> {
        Self::new(0, 0, 1, anchor, vec![value])
    }

    /// Basis tensor with a single unit entry at the given multi-index.
    pub fn basis(
        p: usize,
        q: usize,
        dim: usize,
        anchor: T,
        upper: &[usize],
        lower: &[usize],
    ) -> Result<Self> {
        let mut t = Self::zeros(p, q, dim, anchor)?;
        t.set(upper, lower, T::one())?;
        Ok(t)
    }

    /// The rank-`(1, 1)` identity (Kronecker delta).
    pub fn kronecker(dim: usize, anchor: T) -> Result<Self> {
        let mut t = Self::zeros(1, 1, dim, anchor)?;
        for i in 0..dim {
            t.set(&[i], &[i], T::one())?;
        }
        Ok(t)
    }

    pub fn rank(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchor(&self) -> T {
        self.anchor
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Value of a rank-`(0, 0)` tensor.
    pub fn as_scalar(&self) -> Option<T> {
        if self.p == 0 && self.q == 0 {
            Some(self.data[0])
        } else {
            None
        }
    }

    fn flat(&self, upper: &[usize], lower: &[usize]) -> Result<usize> {
        if upper.len() != self.p || lower.len() != self.q {
            return Err(Error::DimensionMismatch {
                context: "tensor multi-index",
                expected: self.p + self.q,
                found: upper.len() + lower.len(),
            });
        }
        let mut idx = 0;
        for &i in upper.iter().chain(lower.iter()) {
            if i >= self.dim {
                return Err(Error::InvalidInput(format!(
                    "tensor index {i} out of range for dimension {}",
                    self.dim
                )));
            }
            idx = idx * self.dim + i;
        }
        Ok(idx)
    }

    pub fn get(&self, upper: &[usize], lower: &[usize]) -> Result<T> {
        Ok(self.data[self.flat(upper, lower)?])
    }

    pub fn set(&mut self, upper: &[usize], lower: &[usize], value: T) -> Result<()> {
        let idx = self.flat(upper, lower)?;
        self.data[idx] = value;
        Ok(())
    }

    pub fn scale(&self, k: T) -> Self {
        TensorComponents {
            p: self.p,
            q: self.q,
            dim: self.dim,
            anchor: self.anchor,
            data: self.data.iter().map(|&v| v * k).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Entrywise distance; ranks, dimension, and anchor must all match.
    pub fn distance_max(&self, other: &Self) -> Result<T> {
        if self.p != other.p || self.q != other.q || self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context: "tensor comparison",
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs())))
    }
}

fn anchors_match<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::epsilon() * T::lit(64.0) * (T::one() + a.abs().max(b.abs()))
}

/// Tensor product; both factors must be anchored at the same point. Slot
/// order in the result is `a`'s uppers, `b`'s uppers, `a`'s lowers, `b`'s
/// lowers.
pub fn tensor_product<T: Scalar>(
    a: &TensorComponents<T>,
    b: &TensorComponents<T>,
) -> Result<TensorComponents<T>> {
    let dim = if a.p + a.q == 0 { b.dim } else { a.dim };
    if a.p + a.q > 0 && b.p + b.q > 0 && a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            context: "tensor product",
            expected: a.dim,
            found: b.dim,
        });
    }
    if !anchors_match(a.anchor, b.anchor) {
        return Err(Error::InvalidInput(format!(
            "tensor product needs a common anchor: {} vs {}",
            a.anchor.to_f64_lossy(),
            b.anchor.to_f64_lossy()
        )));
    }
    let (p, q) = (a.p + b.p, a.q + b.q);
    let mut out = TensorComponents::zeros(p, q, dim, a.anchor)?;
    let mut au = vec![0usize; a.p];
    let mut al = vec![0usize; a.q];
    let mut bu = vec![0usize; b.p];
    let mut bl = vec![0usize; b.q];
    let mut u = vec![0usize; p];
    let mut l = vec![0usize; q];
    // Odometer over every output multi-index, split back into factor indices.
    let total = out.data.len();
    for flat in 0..total {
        let mut rest = flat;
        for slot in (0..p + q).rev() {
            let digit = rest % dim;
            rest /= dim;
            if slot < p {
                u[slot] = digit;
            } else {
                l[slot - p] = digit;
            }
        }
        au.copy_from_slice(&u[..a.p]);
        bu.copy_from_slice(&u[a.p..]);
        al.copy_from_slice(&l[..a.q]);
        bl.copy_from_slice(&l[a.q..]);
        let v = a.get(&au, &al)? * b.get(&bu, &bl)?;
        out.data[flat] = v;
    }
    Ok(out)
}

/// Contraction of one contravariant slot against one covariant slot, both
/// zero-based within their own groups.
pub fn contract<T: Scalar>(
    t: &TensorComponents<T>,
    upper_slot: usize,
    lower_slot: usize,
) -> Result<TensorComponents<T>> {
    if upper_slot >= t.p || lower_slot >= t.q {
        return Err(Error::InvalidInput(format!(
            "contraction slots ({upper_slot}, {lower_slot}) out of range for rank ({}, {})",
            t.p, t.q
        )));
    }
    let dim = t.dim;
    let (p, q) = (t.p - 1, t.q - 1);
    let out_dim = if p + q == 0 { 1 } else { dim };
    let mut out = TensorComponents::zeros(p, q, out_dim, t.anchor)?;
    let out_total = out.data.len();
    let mut u = vec![0usize; t.p];
    let mut l = vec![0usize; t.q];
    for flat in 0..out_total {
        // Decode the output index, then re-insert the contracted pair.
        let mut rest = flat;
        let mut digits = vec![0usize; p + q];
        for slot in (0..p + q).rev() {
            digits[slot] = rest % dim.max(1);
            rest /= dim.max(1);
        }
        let mut acc = T::zero();
        for c in 0..dim {
            let mut ui = 0;
            for slot in 0..t.p {
                u[slot] = if slot == upper_slot {
                    c
                } else {
                    let d = digits[ui];
                    ui += 1;
                    d
                };
            }
            let mut li = ui;
            for slot in 0..t.q {
                l[slot] = if slot == lower_slot {
                    c
                } else {
                    let d = digits[li];
                    li += 1;
                    d
                };
            }
            acc += t.get(&u, &l)?;
        }
        out.data[flat] = acc;
    }
    Ok(out)
}

type TwoPointFn<T> = Arc<dyn Fn(T, T) -> Result<Matrix<T>> + Send + Sync>;

/// Two-point scalar transport `λ ↦ h(t, s) λ` with `h(t, s) = f(s) / f(t)`
/// for a nowhere-vanishing factor `f`. This form makes the composition and
/// identity laws automatic.
#[derive(Clone)]
pub struct ScalarTransport<T> {
    factor: Arc<dyn Fn(T) -> Result<T> + Send + Sync>,
}

impl<T: Scalar> ScalarTransport<T> {
    /// The trivial transport `h ≡ 1`.
    pub fn identity() -> Self {
        ScalarTransport {
            factor: Arc::new(|_s| Ok(T::one())),
        }
    }

    pub fn from_factor(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self::try_from_factor(move |s| Ok(f(s)))
    }

    pub fn try_from_factor(f: impl Fn(T) -> Result<T> + Send + Sync + 'static) -> Self {
        ScalarTransport {
            factor: Arc::new(f),
        }
    }

    fn factor_at(&self, s: T) -> Result<T> {
        let v = (self.factor)(s)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "scalar transport factor",
            });
        }
        if v == T::zero() {
            return Err(Error::ScalarFactorZero {
                at: s.to_f64_lossy(),
            });
        }
        Ok(v)
    }

    /// The two-point factor `h(t, s)`.
    pub fn h(&self, t: T, s: T) -> Result<T> {
        if t == s {
            return Ok(T::one());
        }
        let ft = self.factor_at(t)?;
        let fs = self.factor_at(s)?;
        let h = fs / ft;
        if !h.is_finite() {
            return Err(Error::NonFinite {
                context: "scalar transport factor",
            });
        }
        Ok(h)
    }
}

/// Per-slot transport rule for tensors of every rank over one path.
#[derive(Clone)]
pub struct TensorTransportRule<T> {
    fiber_dim: usize,
    domain: (T, T),
    vector: TwoPointFn<T>,
    covector: TwoPointFn<T>,
    scalar: ScalarTransport<T>,
    mode: ConsistencyMode,
}

impl<T: Scalar> TensorTransportRule<T> {
    /// The fully consistent rule induced by a vector transport family:
    /// covectors move by `K(t, s) = H(s, t)ᵀ`, which equals `(H(t, s)ᵀ)⁻¹`
    /// by the composition law without any explicit inversion, and scalars
    /// stay fixed.
    pub fn consistent(family: &TransportMatrixFamily<T>) -> Self {
        let fam_v = family.clone();
        let fam_k = family.clone();
        TensorTransportRule {
            fiber_dim: family.fiber_dim(),
            domain: family.path().domain(),
            vector: Arc::new(move |t, s| fam_v.matrix(t, s)),
            covector: Arc::new(move |t, s| Ok(fam_k.matrix(s, t)?.transpose())),
            scalar: ScalarTransport::identity(),
            mode: ConsistencyMode::TensorProductAndContraction,
        }
    }

    /// Rule assembled from independently supplied parts. The mode records
    /// the caller's claim; [`check_consistency`] measures whether the parts
    /// actually satisfy it.
    pub fn from_parts(
        fiber_dim: usize,
        domain: (T, T),
        vector: impl Fn(T, T) -> Result<Matrix<T>> + Send + Sync + 'static,
        covector: impl Fn(T, T) -> Result<Matrix<T>> + Send + Sync + 'static,
        scalar: ScalarTransport<T>,
        mode: ConsistencyMode,
    ) -> Self {
        TensorTransportRule {
            fiber_dim,
            domain,
            vector: Arc::new(vector),
            covector: Arc::new(covector),
            scalar,
            mode,
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn domain(&self) -> (T, T) {
        self.domain
    }

    pub fn mode(&self) -> ConsistencyMode {
        self.mode
    }

    fn checked(&self, m: Matrix<T>, context: &'static str) -> Result<Matrix<T>> {
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

    pub fn vector_matrix(&self, t: T, s: T) -> Result<Matrix<T>> {
        if t == s {
            return Ok(Matrix::identity(self.fiber_dim));
        }
        self.checked((self.vector)(t, s)?, "vector transport matrix")
    }

    pub fn covector_matrix(&self, t: T, s: T) -> Result<Matrix<T>> {
        if t == s {
            return Ok(Matrix::identity(self.fiber_dim));
        }
        self.checked((self.covector)(t, s)?, "covector transport matrix")
    }

    pub fn scalar_factor(&self, t: T, s: T) -> Result<T> {
        self.scalar.h(t, s)
    }
}

/// Applies a matrix to one slot of a dense multi-index array.
fn apply_to_slot<T: Scalar>(
    data: &[T],
    dim: usize,
    slots: usize,
    slot: usize,
    m: &Matrix<T>,
) -> Vec<T> {
    debug_assert!(slot < slots);
    let stride = dim.pow((slots - 1 - slot) as u32);
    let block = stride * dim;
    let mut out = vec![T::zero(); data.len()];
    for outer in 0..data.len() / block {
        let base = outer * block;
        for inner in 0..stride {
            for k in 0..dim {
                let mut acc = T::zero();
                for i in 0..dim {
                    acc += m[(k, i)] * data[base + i * stride + inner];
                }
                out[base + k * stride + inner] = acc;
            }
        }
    }
    out
}

/// Transports tensor components from `γ(s)` to `γ(t)`: contravariant slots
/// through the vector matrix, covariant slots through the covector matrix,
/// rank-`(0, 0)` through the scalar factor. The input must be anchored at
/// `s`; the result is anchored at `t`.
pub fn transport_tensor<T: Scalar>(
    rule: &TensorTransportRule<T>,
    tensor: &TensorComponents<T>,
    t: T,
    s: T,
) -> Result<TensorComponents<T>> {
    if !anchors_match(tensor.anchor, s) {
        return Err(Error::InvalidInput(format!(
            "tensor anchored at {} but transported from {}",
            tensor.anchor.to_f64_lossy(),
            s.to_f64_lossy()
        )));
    }
    let (p, q) = tensor.rank();
    if p + q == 0 {
        let v = rule.scalar_factor(t, s)? * tensor.data[0];
        return TensorComponents::scalar(v, t);
    }
    if tensor.dim != rule.fiber_dim {
        return Err(Error::DimensionMismatch {
            context: "tensor transport",
            expected: rule.fiber_dim,
            found: tensor.dim,
        });
    }
    let slots = p + q;
    let mut data = tensor.data.clone();
    if p > 0 {
        let h = rule.vector_matrix(t, s)?;
        for slot in 0..p {
            data = apply_to_slot(&data, tensor.dim, slots, slot, &h);
        }
    }
    if q > 0 {
        let k = rule.covector_matrix(t, s)?;
        for slot in p..slots {
            data = apply_to_slot(&data, tensor.dim, slots, slot, &k);
        }
    }
    TensorComponents::new(p, q, tensor.dim, t, data)
}

/// Transports a bare scalar value from `γ(s)` to `γ(t)`.
pub fn scalar_transport<T: Scalar>(rule: &TensorTransportRule<T>, t: T, s: T, value: T) -> Result<T> {
    Ok(rule.scalar_factor(t, s)? * value)
}

/// Measured deviation of one law.
#[derive(Clone, Debug)]
pub struct LawDeviation {
    pub law: &'static str,
    pub max_deviation: f64,
}

/// Outcome of [`check_consistency`]: the worst observed deviation for every
/// law the rule's mode claims. Tolerance decisions belong to the caller;
/// this type only reports numbers.
#[derive(Clone, Debug)]
pub struct ConsistencyReport {
    pub mode: ConsistencyMode,
    pub laws: Vec<LawDeviation>,
}

impl ConsistencyReport {
    pub fn deviation(&self, law: &str) -> Option<f64> {
        self.laws
            .iter()
            .find(|l| l.law == law)
            .map(|l| l.max_deviation)
    }

    pub fn worst(&self) -> f64 {
        self.laws
            .iter()
            .map(|l| l.max_deviation)
            .fold(0.0, f64::max)
    }
}

pub const LAW_SCALAR_IDENTITY: &str = "scalar identity";
pub const LAW_SCALAR_COMPOSITION: &str = "scalar composition";
pub const LAW_SCALAR_FIXED: &str = "scalar fixing";
pub const LAW_PRODUCT: &str = "tensor product consistency";
pub const LAW_CONTRACTION: &str = "contraction commutation";
pub const LAW_MUTUAL_INVERSE: &str = "mutual inverse";

fn random_tensor<T: Scalar, R: Rng>(
    rng: &mut R,
    p: usize,
    q: usize,
    dim: usize,
    anchor: T,
) -> TensorComponents<T> {
    let len = dim.pow((p + q) as u32).max(1);
    let data: Vec<T> = (0..len)
        .map(|_| T::lit(rng.gen_range(-1.0..1.0)))
        .collect();
    TensorComponents::new(p, q, if p + q == 0 { 1 } else { dim }, anchor, data)
        .expect("random tensor has the right length")
}

/// Samples the laws claimed by the rule's mode on random parameter pairs and
/// random tensors, and reports the worst deviation per law.
///
/// Probed laws: the scalar identity and composition laws always; tensor
/// product consistency (vector ⊗ covector and vector ⊗ vector) always;
/// contraction commutation, the mutual-inverse condition, and scalar fixing
/// only when the mode claims contraction consistency.
pub fn check_consistency<T: Scalar, R: Rng>(
    rule: &TensorTransportRule<T>,
    rng: &mut R,
    samples: usize,
) -> Result<ConsistencyReport> {
    let (a, b) = rule.domain;
    let dim = rule.fiber_dim;
    let draw = |rng: &mut R| -> T {
        T::lit(rng.gen_range(a.to_f64_lossy()..b.to_f64_lossy()))
    };
    let full = rule.mode == ConsistencyMode::TensorProductAndContraction;

    let mut scalar_identity: f64 = 0.0;
    let mut scalar_composition: f64 = 0.0;
    let mut scalar_fixed: f64 = 0.0;
    let mut product: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    let mut mutual_inverse: f64 = 0.0;

    for _ in 0..samples {
        let (r, t, s) = (draw(rng), draw(rng), draw(rng));

        // Scalar laws: h(s, s) = 1 and h(r, t) h(t, s) = h(r, s).
        let hss = rule.scalar_factor(s, s)?;
        scalar_identity = scalar_identity.max((hss - T::one()).abs().to_f64_lossy());
        let hrt = rule.scalar_factor(r, t)?;
        let hts = rule.scalar_factor(t, s)?;
        let hrs = rule.scalar_factor(r, s)?;
        scalar_composition =
            scalar_composition.max((hrt * hts - hrs).abs().to_f64_lossy());
        if full {
            scalar_fixed = scalar_fixed.max((hts - T::one()).abs().to_f64_lossy());
        }

        // Product law on rank >= 1 factors: transporting a product equals
        // the product of the transported factors.
        let v = random_tensor(rng, 1, 0, dim, s);
        let w = random_tensor(rng, 0, 1, dim, s);
        let u = random_tensor(rng, 1, 0, dim, s);
        for (x, y) in [(&v, &w), (&v, &u)] {
            let lhs = transport_tensor(rule, &tensor_product(x, y)?, t, s)?;
            let rhs = tensor_product(
                &transport_tensor(rule, x, t, s)?,
                &transport_tensor(rule, y, t, s)?,
            )?;
            product = product.max(lhs.distance_max(&rhs)?.to_f64_lossy());
        }

        if full {
            // Contraction law on a random (1, 1) tensor: contract then
            // transport as a scalar, versus transport then contract.
            let m = random_tensor(rng, 1, 1, dim, s);
            let c_then_t = scalar_transport(
                rule,
                t,
                s,
                contract(&m, 0, 0)?.as_scalar().expect("(0,0) tensor"),
            )?;
            let t_then_c = contract(&transport_tensor(rule, &m, t, s)?, 0, 0)?
                .as_scalar()
                .expect("(0,0) tensor");
            contraction = contraction.max((c_then_t - t_then_c).abs().to_f64_lossy());

            // Mutual inverse: Hᵀ K = I entrywise.
            let h = rule.vector_matrix(t, s)?;
            let k = rule.covector_matrix(t, s)?;
            let dev = h
                .transpose()
                .mul(&k)?
                .distance_max(&Matrix::identity(dim))?;
            mutual_inverse = mutual_inverse.max(dev.to_f64_lossy());
        }
    }

    let mut laws = vec![
        LawDeviation {
            law: LAW_SCALAR_IDENTITY,
            max_deviation: scalar_identity,
        },
        LawDeviation {
            law: LAW_SCALAR_COMPOSITION,
            max_deviation: scalar_composition,
        },
        LawDeviation {
            law: LAW_PRODUCT,
            max_deviation: product,
        },
    ];
    if full {
        laws.push(LawDeviation {
            law: LAW_SCALAR_FIXED,
            max_deviation: scalar_fixed,
        });
        laws.push(LawDeviation {
            law: LAW_CONTRACTION,
            max_deviation: contraction,
        });
        laws.push(LawDeviation {
            law: LAW_MUTUAL_INVERSE,
            max_deviation: mutual_inverse,
        });
    }
    Ok(ConsistencyReport {
        mode: rule.mode,
        laws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PathCurve;
    use crate::transport::TransportGenerator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_rule(h: [f64; 2], k: [f64; 2], mode: ConsistencyMode) -> TensorTransportRule<f64> {
        TensorTransportRule::from_parts(
            2,
            (0.0, 1.0),
            move |_t, _s| Matrix::from_rows(&[vec![h[0], 0.0], vec![0.0, h[1]]]),
            move |_t, _s| Matrix::from_rows(&[vec![k[0], 0.0], vec![0.0, k[1]]]),
            ScalarTransport::identity(),
            mode,
        )
    }

    #[test]
    fn product_of_basis_tensors_has_one_entry() {
        let e0 = TensorComponents::basis(1, 0, 2, 0.0, &[0], &[]).unwrap();
        let f1 = TensorComponents::basis(0, 1, 2, 0.0, &[], &[1]).unwrap();
        let prod = tensor_product(&e0, &f1).unwrap();
        assert_eq!(prod.rank(), (1, 1));
        assert_eq!(prod.get(&[0], &[1]).unwrap(), 1.0);
        assert_eq!(prod.get(&[0], &[0]).unwrap(), 0.0);
        assert_eq!(prod.get(&[1], &[1]).unwrap(), 0.0);
    }

    #[test]
    fn contracting_kronecker_gives_the_dimension() {
        for dim in 2..=4 {
            let delta = TensorComponents::kronecker(dim, 0.0).unwrap();
            let c = contract(&delta, 0, 0).unwrap();
            assert_eq!(c.as_scalar().unwrap(), dim as f64);
        }
    }

    #[test]
    fn contraction_of_simple_product_is_the_pairing() {
        let v = TensorComponents::new(1, 0, 3, 0.0, vec![1.0, -2.0, 0.5]).unwrap();
        let w = TensorComponents::new(0, 1, 3, 0.0, vec![4.0, 1.0, 2.0]).unwrap();
        let c = contract(&tensor_product(&v, &w).unwrap(), 0, 0).unwrap();
        // <w, v> = 4 - 2 + 1 = 3.
        assert_eq!(c.as_scalar().unwrap(), 3.0);
    }

    #[test]
    fn contraction_on_higher_rank_reduces_correct_slots() {
        // T^{ab}_c = u^a v^b w_c; contracting slot b against c leaves
        // u^a (v·w).
        let u = TensorComponents::new(1, 0, 2, 0.0, vec![2.0, -1.0]).unwrap();
        let v = TensorComponents::new(1, 0, 2, 0.0, vec![3.0, 5.0]).unwrap();
        let w = TensorComponents::new(0, 1, 2, 0.0, vec![1.0, 2.0]).unwrap();
        let t = tensor_product(&tensor_product(&u, &v).unwrap(), &w).unwrap();
        let c = contract(&t, 1, 0).unwrap();
        let dot = 3.0 + 10.0;
        assert_eq!(c.rank(), (1, 0));
        assert_eq!(c.get(&[0], &[]).unwrap(), 2.0 * dot);
        assert_eq!(c.get(&[1], &[]).unwrap(), -1.0 * dot);
    }

    #[test]
    fn inconsistent_diagonal_rule_inflates_kronecker() {
        // Vector and covector both diag(2, 3) instead of mutually inverse:
        // the Kronecker tensor transports to diag(4, 9).
        let rule = diag_rule([2.0, 3.0], [2.0, 3.0], ConsistencyMode::TensorProductAndContraction);
        let delta = TensorComponents::kronecker(2, 0.0).unwrap();
        let moved = transport_tensor(&rule, &delta, 1.0, 0.0).unwrap();
        assert_eq!(moved.get(&[0], &[0]).unwrap(), 4.0);
        assert_eq!(moved.get(&[1], &[1]).unwrap(), 9.0);
        assert_eq!(moved.get(&[0], &[1]).unwrap(), 0.0);

        // Contraction route disagreement on the (0,0)-indexed basis tensor:
        // transport-then-contract gives 4, contract-then-transport gives 1.
        let b = TensorComponents::basis(1, 1, 2, 0.0, &[0], &[0]).unwrap();
        let t_then_c = contract(&transport_tensor(&rule, &b, 1.0, 0.0).unwrap(), 0, 0)
            .unwrap()
            .as_scalar()
            .unwrap();
        let c_then_t = scalar_transport(&rule, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(t_then_c, 4.0);
        assert_eq!(c_then_t, 1.0);
        assert_eq!((t_then_c - c_then_t).abs(), 3.0);
    }

    #[test]
    fn consistent_diagonal_rule_fixes_kronecker() {
        let rule = diag_rule(
            [2.0, 3.0],
            [0.5, 1.0 / 3.0],
            ConsistencyMode::TensorProductAndContraction,
        );
        let delta = TensorComponents::kronecker(2, 0.0).unwrap();
        let moved = transport_tensor(&rule, &delta, 1.0, 0.0).unwrap();
        assert!(moved.distance_max(&TensorComponents::kronecker(2, 1.0).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn slotwise_transport_matches_brute_force_sum() {
        // Independent route: expand the full multi-index sum
        //   T'^{ab}_c = H^a_i H^b_j K_c^k T^{ij}_k
        // with explicit loops and fixed matrices.
        let h = Matrix::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![0.0, 1.0, -1.0],
            vec![0.5, 0.0, 1.0],
        ])
        .unwrap();
        let k = Matrix::from_rows(&[
            vec![2.0, 0.0, 1.0],
            vec![-1.0, 1.0, 0.0],
            vec![0.0, 3.0, 1.0],
        ])
        .unwrap();
        let hc = h.clone();
        let kc = k.clone();
        let rule = TensorTransportRule::from_parts(
            3,
            (0.0, 1.0),
            move |_t, _s| Ok(hc.clone()),
            move |_t, _s| Ok(kc.clone()),
            ScalarTransport::identity(),
            ConsistencyMode::TensorProduct,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_tensor::<f64, _>(&mut rng, 2, 1, 3, 0.0);
        let moved = transport_tensor(&rule, &t, 1.0, 0.0).unwrap();
        for a_i in 0..3 {
            for b_i in 0..3 {
                for c_i in 0..3 {
                    let mut acc = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            for kk in 0..3 {
                                acc += h[(a_i, i)]
                                    * h[(b_i, j)]
                                    * k[(c_i, kk)]
                                    * t.get(&[i, j], &[kk]).unwrap();
                            }
                        }
                    }
                    let got = moved.get(&[a_i, b_i], &[c_i]).unwrap();
                    assert!(
                        (got - acc).abs() < 1e-12,
                        "entry ({a_i},{b_i};{c_i}): {got} vs {acc}"
                    );
                }
            }
        }
    }

    #[test]
    fn scalar_factor_obeys_identity_and_composition() {
        let st = ScalarTransport::from_factor(|s: f64| s.exp());
        assert_eq!(st.h(0.7, 0.7).unwrap(), 1.0);
        let (r, t, s) = (0.2, 0.9, 0.4);
        let lhs = st.h(r, t).unwrap() * st.h(t, s).unwrap();
        let rhs = st.h(r, s).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
        assert!((st.h(1.0, 0.0).unwrap() - (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn vanishing_scalar_factor_is_an_error() {
        let st = ScalarTransport::from_factor(|s: f64| s);
        assert!(matches!(
            st.h(0.0, 1.0),
            Err(Error::ScalarFactorZero { .. })
        ));
    }

    #[test]
    fn consistency_report_for_family_backed_rule() {
        let path = PathCurve::from_fn((0.0, 1.0), 1, |s: f64| vec![s]).unwrap();
        let gen = TransportGenerator::new(path, 2, |s: f64| {
            Matrix::from_rows(&[vec![s.cos(), -s.sin()], vec![s.sin(), s.cos()]])
                .unwrap()
                .mul(&Matrix::from_rows(&[vec![1.0 + s, 0.0], vec![0.0, 1.0]]).unwrap())
                .unwrap()
        });
        let family = TransportMatrixFamily::from_generator(gen);
        let rule = TensorTransportRule::consistent(&family);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let report = check_consistency(&rule, &mut rng, 40).unwrap();
        assert!(report.worst() < 1e-10, "report: {report:?}");
    }

    #[test]
    fn consistency_report_flags_broken_covectors() {
        let rule = diag_rule([2.0, 3.0], [2.0, 3.0], ConsistencyMode::TensorProductAndContraction);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let report = check_consistency(&rule, &mut rng, 40).unwrap();
        assert!(report.deviation(LAW_CONTRACTION).unwrap() >= 0.1);
        assert!(report.deviation(LAW_MUTUAL_INVERSE).unwrap() >= 0.1);
        // The product law alone is still satisfied by any per-slot rule.
        assert!(report.deviation(LAW_PRODUCT).unwrap() < 1e-12);
    }

    #[test]
    fn transport_rejects_mismatched_anchor() {
        let rule = diag_rule([1.0, 1.0], [1.0, 1.0], ConsistencyMode::TensorProduct);
        let v = TensorComponents::new(1, 0, 2, 0.25, vec![1.0, 0.0]).unwrap();
        assert!(transport_tensor(&rule, &v, 1.0, 0.5).is_err());
    }
}
