//! Error type shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the transport kernels.
///
/// Numerical failures (`SingularMatrix`, `IllConditioned`, `NonFinite`,
/// `StepLimit`) are distinct from validation failures so callers can map them
/// to different exit paths.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two objects that must agree in dimension do not.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A matrix that must be invertible is singular to working precision.
    #[error("singular matrix in {context}")]
    SingularMatrix { context: &'static str },

    /// A matrix inversion exceeded the configured condition-number cap.
    #[error("ill-conditioned matrix in {context}: condition {condition:.3e} exceeds cap {cap:.3e}")]
    IllConditioned {
        context: &'static str,
        condition: f64,
        cap: f64,
    },

    /// A path parameter lies outside the path's parameter interval.
    #[error("parameter {value} outside path domain [{lo}, {hi}]")]
    OutsideDomain { value: f64, lo: f64, hi: f64 },

    /// A point violates the open bounds of its chart.
    #[error("coordinate {value} on axis {axis} leaves chart '{chart}'")]
    OutsideChart {
        chart: String,
        axis: usize,
        value: f64,
    },

    /// Integration or finite-difference step size is unusable.
    #[error("invalid step size {step}: {reason}")]
    InvalidStep { step: f64, reason: &'static str },

    /// A fixed-step integration would need more steps than the safety limit.
    #[error("integration from {from} to {to} at step {step} exceeds the step limit")]
    StepLimit { from: f64, to: f64, step: f64 },

    /// A computed quantity is NaN or infinite.
    #[error("non-finite value produced in {context}")]
    NonFinite { context: &'static str },

    /// The operation differentiates a section that was declared non-smooth.
    #[error("section is not declared continuously differentiable; derivation is undefined")]
    NotDifferentiable,

    /// A sample grid is too small for the requested operation.
    #[error("grid too coarse in {context}: need at least {needed} points, found {found}")]
    GridTooCoarse {
        context: &'static str,
        needed: usize,
        found: usize,
    },

    /// A two-point scalar factor vanished, so its transport is undefined.
    #[error("scalar transport factor vanishes at parameter {at}")]
    ScalarFactorZero { at: f64 },

    /// Input validation failed for reasons spelled out in the message.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A caller-supplied evaluator (for instance a parsed expression) failed.
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    /// True for failures of the numerics rather than of input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::IllConditioned { .. }
                | Error::NonFinite { .. }
                | Error::StepLimit { .. }
                | Error::OutsideChart { .. }
                | Error::ScalarFactorZero { .. }
                | Error::Evaluation(_)
        )
    }
}
