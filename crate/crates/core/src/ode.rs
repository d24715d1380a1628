//! Fixed-step classical Runge-Kutta integration.
//!
//! Every initial-value problem in this crate (transport matrices from
//! coefficients, sections along paths, transport-straightest paths) runs
//! through this one driver, so tolerances derived from the step size mean the
//! same thing everywhere. The step is fixed by design: results must be
//! reproducible bit for bit for a given step, with no adaptive control state.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Upper bound on steps per integration; beyond this the request is treated
/// as a misconfigured step size rather than ground through.
const MAX_STEPS: usize = 20_000_000;

/// Right-hand side of `y' = f(s, y)`, writing the derivative into `out`.
pub trait Derivative<T> {
    fn eval(&mut self, s: T, y: &[T], out: &mut [T]) -> Result<()>;
}

impl<T, F> Derivative<T> for F
where
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
{
    fn eval(&mut self, s: T, y: &[T], out: &mut [T]) -> Result<()> {
        self(s, y, out)
    }
}

/// Validates a step size coming from user input.
pub fn check_step<T: Scalar>(step: T) -> Result<()> {
    if !(step.is_finite() && step > T::zero()) {
        return Err(Error::InvalidStep {
            step: step.to_f64_lossy(),
            reason: "step must be finite and positive",
        });
    }
    Ok(())
}

/// One classical fourth-order step with reusable stage buffers.
pub struct Stepper<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    stage: Vec<T>,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(dim: usize) -> Self {
        Stepper {
            k1: vec![T::zero(); dim],
            k2: vec![T::zero(); dim],
            k3: vec![T::zero(); dim],
            k4: vec![T::zero(); dim],
            stage: vec![T::zero(); dim],
        }
    }

    /// Advances `y` by one step `h` (signed), writing into `out`.
    pub fn step(
        &mut self,
        f: &mut impl Derivative<T>,
        s: T,
        y: &[T],
        h: T,
        out: &mut [T],
    ) -> Result<()> {
        let dim = y.len();
        debug_assert_eq!(self.k1.len(), dim);
        let half = h * T::lit(0.5);
        f.eval(s, y, &mut self.k1)?;
        for i in 0..dim {
            self.stage[i] = y[i] + half * self.k1[i];
        }
        f.eval(s + half, &self.stage, &mut self.k2)?;
        for i in 0..dim {
            self.stage[i] = y[i] + half * self.k2[i];
        }
        f.eval(s + half, &self.stage, &mut self.k3)?;
        for i in 0..dim {
            self.stage[i] = y[i] + h * self.k3[i];
        }
        f.eval(s + h, &self.stage, &mut self.k4)?;
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..dim {
            out[i] = y[i]
                + sixth * (self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Number of uniform steps covering `[s0, s1]` with width at most `step`.
fn step_count<T: Scalar>(s0: T, s1: T, step: T) -> Result<usize> {
    check_step(step)?;
    let span = (s1 - s0).abs();
    if span == T::zero() {
        return Ok(0);
    }
    let n = (span / step).ceil().to_f64_lossy();
    if !n.is_finite() || n as usize > MAX_STEPS {
        return Err(Error::StepLimit {
            from: s0.to_f64_lossy(),
            to: s1.to_f64_lossy(),
            step: step.to_f64_lossy(),
        });
    }
    Ok(n as usize)
}

/// Integrates `y' = f(s, y)` from `s0` to `s1` and returns `y(s1)`.
///
/// The interval is cut into uniform steps no wider than `step`, so the
/// integration lands on `s1` exactly. `s1 < s0` integrates backward.
pub fn integrate<T: Scalar>(
    f: &mut impl Derivative<T>,
    s0: T,
    y0: &[T],
    s1: T,
    step: T,
) -> Result<Vec<T>> {
    let n = step_count(s0, s1, step)?;
    let mut y = y0.to_vec();
    if n == 0 {
        return Ok(y);
    }
    let h = (s1 - s0) / T::from_usize(n).expect("step count fits the scalar");
    let mut stepper = Stepper::new(y0.len());
    let mut out = vec![T::zero(); y0.len()];
    for i in 0..n {
        let s = s0 + h * T::from_usize(i).expect("step index fits the scalar");
        stepper.step(f, s, &y, h, &mut out)?;
        core::mem::swap(&mut y, &mut out);
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: "Runge-Kutta state",
        });
    }
    Ok(y)
}

/// Like [`integrate`], but returns the state at every step, initial point
/// included, with parameters in integration order.
pub fn integrate_dense<T: Scalar>(
    f: &mut impl Derivative<T>,
    s0: T,
    y0: &[T],
    s1: T,
    step: T,
) -> Result<Vec<(T, Vec<T>)>> {
    let n = step_count(s0, s1, step)?;
    let mut samples = Vec::with_capacity(n + 1);
    samples.push((s0, y0.to_vec()));
    if n == 0 {
        return Ok(samples);
    }
    let h = (s1 - s0) / T::from_usize(n).expect("step count fits the scalar");
    let mut stepper = Stepper::new(y0.len());
    let mut y = y0.to_vec();
    let mut out = vec![T::zero(); y0.len()];
    for i in 0..n {
        let s = s0 + h * T::from_usize(i).expect("step index fits the scalar");
        stepper.step(f, s, &y, h, &mut out)?;
        core::mem::swap(&mut y, &mut out);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "Runge-Kutta state",
            });
        }
        let s_next = if i + 1 == n {
            s1
        } else {
            s0 + h * T::from_usize(i + 1).expect("step index fits the scalar")
        };
        samples.push((s_next, y.clone()));
    }
    Ok(samples)
}
