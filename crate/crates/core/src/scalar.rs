//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate is generic over [`Scalar`] so the same code runs
//! in `f32` and `f64`. The crate root exports `f64` aliases for the common
//! types; use those unless you need single precision.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar usable by the transport kernels.
///
/// `lit` converts an `f64` literal into `T`; kernels use it for fixed
/// constants (tolerances, quadrature weights) so literals are written once.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + core::fmt::Debug + core::fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 literal converts to every scalar type")
    }

    /// Widens to `f64` for reporting and tolerance comparisons.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
