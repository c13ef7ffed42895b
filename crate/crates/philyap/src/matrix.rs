//! Dense real matrices in row-major IEEE double precision.
//!
//! This is the carrier type for the whole crate: element access, arithmetic,
//! the 1-norm and Frobenius norm, and an instrumented matrix product. The
//! gemm itself is delegated to `matrixmultiply`; everything above it is ours.
//!
//! Matrix-matrix products are the unit of cost accounting throughout the
//! crate. Code that participates in the cost model must multiply through
//! [`DenseMatrix::matmul_counted`] with a [`ProductCounter`].

use std::cell::Cell;
use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Counter for matrix-matrix products, local to one computation.
///
/// Interior mutability keeps the multiplying call sites by-reference; the
/// counter is not shared across threads.
#[derive(Debug, Default)]
pub struct ProductCounter(Cell<u64>);

impl ProductCounter {
    pub fn new() -> Self {
        Self(Cell::new(0))
    }

    pub fn bump(&self) {
        self.0.set(self.0.get() + 1);
    }

    pub fn count(&self) -> u64 {
        self.0.get()
    }
}

/// Real N x M matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix({}x{})", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|j| format!("{:11.4e}", self[(i, j)]))
                .collect();
            writeln!(f, "  [{}{}]", row.join(", "), if self.cols > 8 { ", ..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        m.check_finite("matrix construction")?;
        Ok(m)
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i];
        }
        m
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

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub(crate) fn require_same_shape(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                context,
                expected: self.shape(),
                found: other.shape(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let data = self.data.iter().map(|v| a * v).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "add: shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_shape(other), "sub: shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// `self += a * other`, in place.
    pub fn add_scaled_assign(&mut self, a: f64, other: &Self) {
        assert!(self.same_shape(other), "add_scaled_assign: shape mismatch");
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scale_assign(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    /// `self + a * I`; the matrix must be square.
    pub fn add_scaled_identity(&self, a: f64) -> Self {
        assert!(self.is_square(), "add_scaled_identity: square matrix required");
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += a;
        }
        out
    }

    /// `self + other^T`, used to symmetrize products.
    pub fn add_transposed(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.cols, "add_transposed: shape mismatch");
        assert_eq!(self.cols, other.rows, "add_transposed: shape mismatch");
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] += other[(j, i)];
            }
        }
        out
    }

    /// Plain matrix product, not counted against any cost model.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                self.data.as_ptr(),
                k as isize,
                1,
                rhs.data.as_ptr(),
                n as isize,
                1,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        out
    }

    /// Matrix product that bumps the instrumentation counter once.
    pub fn matmul_counted(&self, rhs: &Self, counter: &ProductCounter) -> Self {
        counter.bump();
        self.matmul(rhs)
    }

    /// Product with the transpose of `rhs`, i.e. `self * rhs^T`, counted once.
    pub fn matmul_transb_counted(&self, rhs: &Self, counter: &ProductCounter) -> Self {
        assert_eq!(self.cols, rhs.cols, "matmul_transb: inner dimensions differ");
        counter.bump();
        let mut out = Self::zeros(self.rows, rhs.rows);
        let (m, k, n) = (self.rows, self.cols, rhs.rows);
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                self.data.as_ptr(),
                k as isize,
                1,
                rhs.data.as_ptr(),
                1,
                k as isize,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        out
    }

    /// Maximum column sum of absolute entries.
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let mut sum = 0.0;
            for i in 0..self.rows {
                sum += self[(i, j)].abs();
            }
            best = best.max(sum);
        }
        best
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise asymmetry `|a_ij - a_ji|`, scaled by the largest entry.
    /// Returns 0 for a 1x1 matrix and for the zero matrix.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square(), "asymmetry: square matrix required");
        let mut defect = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                defect = defect.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    pub fn is_symmetric_within(&self, tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= tol
    }

    /// Column-wise vectorization, `vec(A)`.
    pub fn vectorize(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`DenseMatrix::vectorize`] for an `n x n` target.
    pub fn from_vectorized(n: usize, v: &[f64]) -> Self {
        assert_eq!(v.len(), n * n, "from_vectorized: length mismatch");
        let mut m = Self::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] = v[j * n + i];
            }
        }
        m
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative error in the 1-norm, `||Y - Yhat||_1 / ||Y||_1`.
pub fn relative_error(y: &DenseMatrix, yhat: &DenseMatrix) -> Result<f64> {
    y.require_same_shape(yhat, "relative_error")?;
    let denom = y.one_norm();
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(y.sub(yhat).one_norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let data: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DenseMatrix::from_vec(n, n, data).unwrap()
    }

    #[test]
    fn one_norm_examples() {
        let m = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.one_norm(), 6.0);
        assert_eq!(DenseMatrix::zeros(3, 3).one_norm(), 0.0);
        assert_eq!(DenseMatrix::identity(5).one_norm(), 1.0);
    }

    #[test]
    fn frobenius_examples() {
        let m = DenseMatrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.frobenius_norm(), 5.0);
        assert!((DenseMatrix::identity(7).frobenius_norm() - 7.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(DenseMatrix::zeros(4, 4).frobenius_norm(), 0.0);
    }

    #[test]
    fn relative_error_examples() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(relative_error(&i2, &i2).unwrap(), 0.0);
        let scaled = i2.scale(1.01);
        assert!((relative_error(&i2, &scaled).unwrap() - 0.01).abs() < 1e-12);

        let y = DenseMatrix::diagonal(&[2.0, 2.0]);
        let yhat = DenseMatrix::diagonal(&[2.0, 1.0]);
        assert_eq!(relative_error(&y, &yhat).unwrap(), 0.5);

        let zero = DenseMatrix::zeros(2, 2);
        assert!(matches!(relative_error(&zero, &i2), Err(Error::ZeroReference)));
    }

    #[test]
    fn construction_rejects_non_finite() {
        let err = DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        let err = DenseMatrix::from_vec(1, 1, vec![f64::INFINITY]);
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    #[test]
    fn matmul_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(13, &mut rng);
        let b = random_matrix(13, &mut rng);
        let fast = a.matmul(&b);
        let mut slow = DenseMatrix::zeros(13, 13);
        for i in 0..13 {
            for j in 0..13 {
                let mut s = 0.0;
                for k in 0..13 {
                    s += a[(i, k)] * b[(k, j)];
                }
                slow[(i, j)] = s;
            }
        }
        assert!(fast.sub(&slow).max_abs() < 1e-13);
    }

    #[test]
    fn matmul_transb_matches_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_matrix(9, &mut rng);
        let b = random_matrix(9, &mut rng);
        let counter = ProductCounter::new();
        let fused = a.matmul_transb_counted(&b, &counter);
        let explicit = a.matmul(&b.transpose());
        assert!(fused.sub(&explicit).max_abs() < 1e-13);
        assert_eq!(counter.count(), 1);
    }

    #[test]
    fn one_norm_is_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(1..12);
            let a = random_matrix(n, &mut rng);
            let b = random_matrix(n, &mut rng);
            let lhs = a.matmul(&b).one_norm();
            let rhs = a.one_norm() * b.one_norm();
            assert!(lhs <= rhs * (1.0 + 1e-14), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn vectorize_is_column_wise() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(m.vectorize(), vec![1.0, 2.0, 3.0, 4.0]);
        let back = DenseMatrix::from_vectorized(2, &m.vectorize());
        assert_eq!(back, m);
    }

    #[test]
    fn product_counter_counts() {
        let c = ProductCounter::new();
        let a = DenseMatrix::identity(3);
        let _ = a.matmul_counted(&a, &c);
        let _ = a.matmul_counted(&a, &c);
        assert_eq!(c.count(), 2);
    }
}
