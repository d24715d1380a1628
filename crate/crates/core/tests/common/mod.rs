//! Oracles shared by the integration suites.
//!
//! Everything here is computed independently of the library's transport
//! machinery: power series, embedding-space closed forms, and brute-force
//! index sums. The acceptance tests compare library output against these
//! routes, so nothing in this module may call into the code paths it is
//! meant to check.

use pathlift_core::linalg::Matrix;
use rand::Rng;

/// Matrix exponential by scaling and squaring with a plain Taylor series.
/// Adequate for the small, moderate-norm matrices the suites use.
#[allow(dead_code)]
pub fn mat_exp(a: &Matrix<f64>) -> Matrix<f64> {
    let n = a.rows();
    let norm = a.norm_inf();
    let scale = norm.log2().ceil().max(0.0) as u32 + 1;
    let b = a.scale(1.0 / f64::powi(2.0, scale as i32));
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..=24 {
        term = term.mul(&b).unwrap().scale(1.0 / k as f64);
        sum = sum.add(&term).unwrap();
    }
    for _ in 0..scale {
        sum = sum.mul(&sum).unwrap();
    }
    sum
}

/// A smooth invertible matrix path built from plane rotations and a
/// diagonal exponential, with the derivative carried in closed form. Rates
/// are kept small so every value stays well conditioned on [0, 1].
#[derive(Clone)]
pub struct SmoothGenerator {
    dim: usize,
    factors: Vec<Factor>,
}

#[derive(Clone)]
enum Factor {
    Rotation { i: usize, j: usize, rate: f64 },
    Diagonal { rates: Vec<f64> },
}

impl Factor {
    fn value(&self, dim: usize, s: f64) -> Matrix<f64> {
        match self {
            Factor::Rotation { i, j, rate } => {
                let mut m = Matrix::identity(dim);
                let (c, sn) = ((rate * s).cos(), (rate * s).sin());
                m[(*i, *i)] = c;
                m[(*i, *j)] = -sn;
                m[(*j, *i)] = sn;
                m[(*j, *j)] = c;
                m
            }
            Factor::Diagonal { rates } => {
                Matrix::from_fn(dim, dim, |r, c| {
                    if r == c {
                        (rates[r] * s).exp()
                    } else {
                        0.0
                    }
                })
            }
        }
    }

    fn derivative(&self, dim: usize, s: f64) -> Matrix<f64> {
        match self {
            Factor::Rotation { i, j, rate } => {
                let mut m = Matrix::zeros(dim, dim);
                let (c, sn) = ((rate * s).cos(), (rate * s).sin());
                m[(*i, *i)] = -sn * rate;
                m[(*i, *j)] = -c * rate;
                m[(*j, *i)] = c * rate;
                m[(*j, *j)] = -sn * rate;
                m
            }
            Factor::Diagonal { rates } => Matrix::from_fn(dim, dim, |r, c| {
                if r == c {
                    rates[r] * (rates[r] * s).exp()
                } else {
                    0.0
                }
            }),
        }
    }
}

impl SmoothGenerator {
    pub fn sample<R: Rng>(rng: &mut R, dim: usize) -> Self {
        let mut factors = Vec::new();
        for i in 0..dim.saturating_sub(1) {
            factors.push(Factor::Rotation {
                i,
                j: i + 1,
                rate: rng.gen_range(-1.0..1.0),
            });
        }
        let rates = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
        factors.push(Factor::Diagonal { rates });
        SmoothGenerator { dim, factors }
    }

    pub fn value(&self, s: f64) -> Matrix<f64> {
        let mut m = Matrix::identity(self.dim);
        for f in &self.factors {
            m = m.mul(&f.value(self.dim, s)).unwrap();
        }
        m
    }

    /// Product rule over the factor list.
    pub fn derivative(&self, s: f64) -> Matrix<f64> {
        let mut total = Matrix::zeros(self.dim, self.dim);
        for k in 0..self.factors.len() {
            let mut term = Matrix::identity(self.dim);
            for (idx, f) in self.factors.iter().enumerate() {
                let piece = if idx == k {
                    f.derivative(self.dim, s)
                } else {
                    f.value(self.dim, s)
                };
                term = term.mul(&piece).unwrap();
            }
            total = total.add(&term).unwrap();
        }
        total
    }
}

/// Great-circle position on the unit sphere in polar chart coordinates,
/// computed through the ℝ³ embedding: push the chart velocity forward,
/// rotate in the plane it spans with the start point, and pull back. Valid
/// while the trajectory stays clear of the poles and of the φ = ±π cut.
#[allow(dead_code)]
pub fn sphere_geodesic_chart(
    theta0: f64,
    phi0: f64,
    vtheta: f64,
    vphi: f64,
    s: f64,
) -> [f64; 2] {
    let p = [
        theta0.sin() * phi0.cos(),
        theta0.sin() * phi0.sin(),
        theta0.cos(),
    ];
    let e_theta = [
        theta0.cos() * phi0.cos(),
        theta0.cos() * phi0.sin(),
        -theta0.sin(),
    ];
    let e_phi = [-theta0.sin() * phi0.sin(), theta0.sin() * phi0.cos(), 0.0];
    let w = [
        vtheta * e_theta[0] + vphi * e_phi[0],
        vtheta * e_theta[1] + vphi * e_phi[1],
        vtheta * e_theta[2] + vphi * e_phi[2],
    ];
    let speed = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if speed == 0.0 {
        return [theta0, phi0];
    }
    let (c, sn) = ((speed * s).cos(), (speed * s).sin());
    let x = [
        c * p[0] + sn * w[0] / speed,
        c * p[1] + sn * w[1] / speed,
        c * p[2] + sn * w[2] / speed,
    ];
    [x[2].clamp(-1.0, 1.0).acos(), x[1].atan2(x[0])]
}

/// Brute-force tensor transport: one explicit sum over all input indices
/// with a factor of `h` per upper slot and `k` per lower slot. Cubic in
/// nothing, exponential in rank, and proudly so; it exists to be obviously
/// correct rather than fast.
#[allow(dead_code)]
pub fn transport_tensor_brute(
    h: &Matrix<f64>,
    k: &Matrix<f64>,
    p: usize,
    q: usize,
    dim: usize,
    data: &[f64],
) -> Vec<f64> {
    let rank = p + q;
    let len = dim.pow(rank as u32).max(1);
    assert_eq!(data.len(), len);
    if rank == 0 {
        return data.to_vec();
    }
    let decode = |flat: usize| -> Vec<usize> {
        let mut digits = vec![0usize; rank];
        let mut rest = flat;
        for d in (0..rank).rev() {
            digits[d] = rest % dim;
            rest /= dim;
        }
        digits
    };
    let mut out = vec![0.0; len];
    for (flat_out, slot) in out.iter_mut().enumerate() {
        let outs = decode(flat_out);
        let mut acc = 0.0;
        for flat_in in 0..len {
            let ins = decode(flat_in);
            let mut factor = 1.0;
            for m in 0..p {
                factor *= h[(outs[m], ins[m])];
            }
            for m in 0..q {
                factor *= k[(outs[p + m], ins[p + m])];
            }
            acc += factor * data[flat_in];
        }
        *slot = acc;
    }
    out
}

#[allow(dead_code)]
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
