//! Small dense matrices with an LU kernel.
//!
//! Fiber dimensions here are tiny (2 to 8), so the matrices are plain
//! row-major `Vec` storage and the solver is textbook LU with partial
//! pivoting. No external linear algebra is pulled in; the point is that
//! every numeric step stays inspectable.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Identity of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from a row-major closure.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let c = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {}, expected {c}",
                    row.len()
                )));
            }
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    /// Wraps an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix buffer",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix shapes",
                expected: self.data.len(),
                found: rhs.data.len(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, k: T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * k).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Largest absolute entry. Used for deviation reports.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &a| acc.max(a.abs()))
    }

    /// Operator infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.rows {
            let mut sum = T::zero();
            for j in 0..self.cols {
                sum += self[(i, j)].abs();
            }
            best = best.max(sum);
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Entrywise distance `max |a_ij - b_ij|`; shapes must match.
    pub fn distance_max(&self, rhs: &Self) -> Result<T> {
        Ok(self.sub(rhs)?.max_abs())
    }
}

impl<T: Scalar> core::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> core::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> core::fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// LU factorization with partial pivoting.
///
/// Stores L (unit diagonal, below) and U (diagonal and above) packed in one
/// matrix, plus the row permutation applied during elimination.
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    swaps: usize,
}

impl<T: Scalar> Lu<T> {
    /// Factors a square matrix. Fails when a pivot column is exactly zero;
    /// near-singularity is the condition cap's job, not this one's.
    pub fn factor(a: &Matrix<T>, context: &'static str) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "LU factorization",
                expected: a.rows(),
                found: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite { context });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for col in 0..n {
            // Pick the largest remaining entry in this column as pivot.
            let mut pivot_row = col;
            let mut pivot_abs = lu[(col, col)].abs();
            for r in col + 1..n {
                let cand = lu[(r, col)].abs();
                if cand > pivot_abs {
                    pivot_abs = cand;
                    pivot_row = r;
                }
            }
            if pivot_abs == T::zero() {
                return Err(Error::SingularMatrix { context });
            }
            if pivot_row != col {
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
                perm.swap(col, pivot_row);
                swaps += 1;
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                for j in col + 1..n {
                    let upper = lu[(col, j)];
                    lu[(r, j)] = lu[(r, j)] - factor * upper;
                }
            }
        }
        Ok(Lu { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A x = b` by permuted forward and backward substitution.
    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LU solve",
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                context: "LU solve",
                expected: n,
                found: b.rows(),
            });
        }
        let mut out = Matrix::zeros(n, b.cols());
        let mut col = vec![T::zero(); n];
        for j in 0..b.cols() {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve_vec(&col)?;
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve_matrix(&Matrix::identity(self.dim()))
    }

    pub fn det(&self) -> T {
        let mut d = if self.swaps % 2 == 0 {
            T::one()
        } else {
            -T::one()
        };
        for i in 0..self.dim() {
            d = d * self.lu[(i, i)];
        }
        d
    }
}

/// Inverts a square matrix, failing only on exact singularity.
pub fn invert<T: Scalar>(a: &Matrix<T>, context: &'static str) -> Result<Matrix<T>> {
    Lu::factor(a, context)?.inverse()
}

/// Infinity-norm condition number `‖A‖ ‖A⁻¹‖`.
pub fn condition_inf<T: Scalar>(a: &Matrix<T>, context: &'static str) -> Result<f64> {
    let inv = invert(a, context)?;
    Ok(a.norm_inf().to_f64_lossy() * inv.norm_inf().to_f64_lossy())
}

/// Inverts with a condition-number cap: a matrix whose inverse is numerically
/// meaningless is reported as a failure instead of silently amplifying noise.
pub fn invert_capped<T: Scalar>(
    a: &Matrix<T>,
    cap: f64,
    context: &'static str,
) -> Result<Matrix<T>> {
    let inv = invert(a, context)?;
    let cond = a.norm_inf().to_f64_lossy() * inv.norm_inf().to_f64_lossy();
    if !cond.is_finite() || cond > cap {
        return Err(Error::IllConditioned {
            context,
            condition: cond,
            cap,
        });
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<f64>]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn product_against_hand_computation() {
        let a = mat(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = mat(&[vec![5.0, 6.0], vec![7.0, 8.0]]);
        let c = a.mul(&b).unwrap();
        assert_eq!(c.as_slice(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn lu_solve_recovers_known_solution() {
        // A x = b with x = (1, -2, 3) fixed first, b = A x computed by hand.
        let a = mat(&[
            vec![2.0, 1.0, 1.0],
            vec![4.0, -6.0, 0.0],
            vec![-2.0, 7.0, 2.0],
        ]);
        let x_true = [1.0, -2.0, 3.0];
        let b = a.mul_vec(&x_true).unwrap();
        let x = Lu::factor(&a, "test").unwrap().solve_vec(&b).unwrap();
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_times_original_is_identity() {
        let a = mat(&[
            vec![4.0, 3.0, 0.0],
            vec![3.0, 7.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ]);
        let inv = invert(&a, "test").unwrap();
        let prod = a.mul(&inv).unwrap();
        let dev = prod.distance_max(&Matrix::identity(3)).unwrap();
        assert!(dev < 1e-13, "deviation {dev}");
    }

    #[test]
    fn determinant_tracks_pivot_swaps() {
        // Row-swapped identity has determinant -1.
        let a = mat(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let lu = Lu::factor(&a, "test").unwrap();
        assert_eq!(lu.det(), -1.0);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = mat(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            invert(&a, "test"),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn condition_cap_rejects_nearly_singular() {
        let eps = 1e-14;
        let a = mat(&[vec![1.0, 1.0], vec![1.0, 1.0 + eps]]);
        let err = invert_capped(&a, 1e12, "test").unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
        // Without the cap the inversion itself still succeeds.
        assert!(invert(&a, "test").is_ok());
    }

    #[test]
    fn condition_of_diagonal_matrix_is_entry_ratio() {
        let a = mat(&[vec![10.0, 0.0], vec![0.0, 0.5]]);
        let cond = condition_inf(&a, "test").unwrap();
        assert!((cond - 20.0).abs() < 1e-12);
    }

    #[test]
    fn norms_on_a_fixed_matrix() {
        let a = mat(&[vec![1.0, -7.0], vec![3.0, 4.0]]);
        assert_eq!(a.max_abs(), 7.0);
        assert_eq!(a.norm_inf(), 8.0);
    }

    #[test]
    fn works_in_single_precision() {
        let a: Matrix<f32> =
            Matrix::from_rows(&[vec![2.0_f32, 0.0], vec![0.0, 4.0]]).unwrap();
        let inv = invert(&a, "test").unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-6);
        assert!((inv[(1, 1)] - 0.25).abs() < 1e-6);
    }
}
