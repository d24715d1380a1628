//! Numerics for linear transports along paths in vector and tensor bundles.
//!
//! The crate is organized around a small set of objects:
//!
//! * [`geometry`]: charts, parametrized paths, frame fields, and pointwise
//!   connection coefficients;
//! * [`transport`]: two-point transport matrix families `H(t, s)`, their
//!   generators `F` (with `H = F(t)⁻¹ F(s)`), and their coefficient fields
//!   `Γ(s) = F(s)⁻¹ F'(s)`;
//! * [`tensor`]: per-slot transport of dense tensor components, two-point
//!   scalar factors, and consistency checking of the laws a rule claims;
//! * [`derivation`]: the derivative induced by a transport on sections
//!   along the path, `(Dσ)(s) = σ'(s) + Γ(s) σ(s)`, with its limit,
//!   Leibniz, and annihilation properties as measurable checks;
//! * [`lpath`]: transport-straightest paths, whose velocity is transported
//!   along the curve itself, generalizing geodesics.
//!
//! Everything is generic over the floating-point type through [`Scalar`];
//! the `*64` aliases below fix `f64`, which is what the command-line
//! frontend uses. Numeric policy is uniform across the crate: fixed-step
//! fourth-order Runge-Kutta for initial-value problems, second-order
//! difference stencils for derivatives nobody supplied, LU with partial
//! pivoting behind every inversion, and condition-number caps that turn
//! meaningless inverses into errors.

pub mod derivation;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lpath;
pub mod ode;
pub mod scalar;
pub mod spline;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default numeric policy shared by library consumers and the CLI.
pub mod defaults {
    /// Fixed Runge-Kutta step for integrations.
    pub const ODE_STEP: f64 = 1e-3;
    /// Step for difference stencils.
    pub const FD_STEP: f64 = 1e-6;
    /// Condition-number cap for transport generator inversions.
    pub const TRANSPORT_CONDITION_CAP: f64 = 1e12;
    /// Condition-number cap for frame basis inversions.
    pub const FRAME_CONDITION_CAP: f64 = 1e8;
}

pub type Matrix64 = linalg::Matrix<f64>;
pub type Chart64 = geometry::Chart<f64>;
pub type Path64 = geometry::PathCurve<f64>;
pub type Frame64 = geometry::FrameField<f64>;
pub type Connection64 = geometry::ConnectionField<f64>;
pub type Generator64 = transport::TransportGenerator<f64>;
pub type Coefficients64 = transport::CoefficientField<f64>;
pub type Family64 = transport::TransportMatrixFamily<f64>;
pub type Tensor64 = tensor::TensorComponents<f64>;
pub type TensorRule64 = tensor::TensorTransportRule<f64>;
pub type ScalarTransport64 = tensor::ScalarTransport<f64>;
pub type Section64 = derivation::SectionAlongPath<f64>;
pub type LPathProblem64 = lpath::LPathProblem<f64>;
pub type LPathSolution64 = lpath::LPathSolution<f64>;
