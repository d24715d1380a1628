//! Natural cubic spline interpolation.
//!
//! Sampled paths and solver output are turned back into smooth curves with
//! this spline, and velocities come from its exact derivative rather than
//! from re-differencing the samples.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Natural cubic spline through strictly increasing knots.
///
/// "Natural" fixes the second derivative to zero at both ends, which keeps
/// the interpolant fully determined by the samples alone.
#[derive(Clone)]
pub struct CubicSpline<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    /// Second derivatives at the knots.
    m: Vec<T>,
}

impl<T: Scalar> CubicSpline<T> {
    pub fn natural(xs: &[T], ys: &[T]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::GridTooCoarse {
                context: "cubic spline",
                needed: 2,
                found: n,
            });
        }
        if ys.len() != n {
            return Err(Error::DimensionMismatch {
                context: "spline knots",
                expected: n,
                found: ys.len(),
            });
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(
                    "spline knots must be strictly increasing".into(),
                ));
            }
        }
        if !xs.iter().chain(ys.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "spline input",
            });
        }

        // Natural boundary: M[0] = M[n-1] = 0; the interior second
        // derivatives solve a tridiagonal system (Thomas algorithm).
        let mut m = vec![T::zero(); n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![T::zero(); k];
            let mut upper = vec![T::zero(); k];
            let mut rhs = vec![T::zero(); k];
            let six = T::lit(6.0);
            let three = T::lit(3.0);
            for i in 0..k {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                diag[i] = (h0 + h1) / three;
                upper[i] = h1 / six;
                rhs[i] = (ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0;
            }
            // Forward sweep. The lower band equals the previous upper band
            // because the system is symmetric.
            for i in 1..k {
                let lower = upper[i - 1];
                let w = lower / diag[i - 1];
                diag[i] = diag[i] - w * upper[i - 1];
                rhs[i] = rhs[i] - w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }

        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], *self.xs.last().expect("at least two knots"))
    }

    /// Index of the segment containing `x`, clamped to the end segments.
    fn segment(&self, x: T) -> usize {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0;
        }
        if x >= self.xs[n - 1] {
            return n - 2;
        }
        // Binary search for the last knot <= x.
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn eval(&self, x: T) -> T {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let six = T::lit(6.0);
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / six
    }

    pub fn deriv(&self, x: T) -> T {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let three = T::lit(3.0);
        let one = T::one();
        let six = T::lit(6.0);
        (self.ys[i + 1] - self.ys[i]) / h
            + (-(three * a * a - one) * self.m[i] + (three * b * b - one) * self.m[i + 1]) * h
                / six
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn interpolates_knots_exactly() {
        let xs = grid(0.0, 2.0, 7);
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let sp = CubicSpline::natural(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((sp.eval(*x) - y).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_data_reproduced_everywhere() {
        let xs = grid(-1.0, 3.0, 5);
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 0.5).collect();
        let sp = CubicSpline::natural(&xs, &ys).unwrap();
        for i in 0..40 {
            let x = -1.0 + 4.0 * i as f64 / 39.0;
            assert!((sp.eval(x) - (2.0 * x - 0.5)).abs() < 1e-13);
            assert!((sp.deriv(x) - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn value_and_derivative_converge_in_the_interior() {
        // sin over [0, pi] with a fine grid; check the middle third where
        // the natural boundary condition's bias has decayed.
        let xs = grid(0.0, core::f64::consts::PI, 61);
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let sp = CubicSpline::natural(&xs, &ys).unwrap();
        for i in 0..30 {
            let x = 1.1 + i as f64 * 0.03;
            assert!((sp.eval(x) - x.sin()).abs() < 1e-6);
            assert!((sp.deriv(x) - x.cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn two_knots_give_the_chord() {
        let sp: CubicSpline<f64> = CubicSpline::natural(&[0.0, 1.0], &[1.0, 3.0]).unwrap();
        assert!((sp.eval(0.25) - 1.5).abs() < 1e-15);
        assert!((sp.deriv(0.7) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_increasing_knots() {
        assert!(CubicSpline::natural(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(CubicSpline::natural(&[0.0], &[1.0]).is_err());
    }
}
