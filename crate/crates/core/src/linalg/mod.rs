//! Small dense real linear algebra: vectors, matrices, LU and a real-spectrum
//! eigendecomposition.
//!
//! Sizes here are tiny (state dimensions of a handful of components), so
//! everything is stored row-major in a `Vec` and no blocking is attempted.

mod eigen;
mod lu;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use thiserror::Error;

use crate::scalar::Scalar;

pub use eigen::{real_eigen, EigenDecomposition, DEFAULT_COMPLEX_TOL};
pub use lu::{inverse, lu_solve, Lu};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("spectrum is not real: eigenvalue pair {re:e} ± {im:e}i")]
    ComplexSpectrum { re: f64, im: f64 },
    #[error("matrix is not diagonalizable to working precision: {0}")]
    DefectiveMatrix(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Dense column vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn from_vec(v: Vec<T>) -> Self {
        Vector(v)
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![T::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    /// Largest absolute entry.
    pub fn inf_norm(&self) -> T {
        inf_norm_vec(self)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, s: T) -> Self {
        Vector(self.0.iter().map(|&x| x * s).collect())
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| a + s * b).collect())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Vector(self.0.iter().map(|&x| f(x)).collect())
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T: Scalar> From<Vec<T>> for Vector<T> {
    fn from(v: Vec<T>) -> Self {
        Vector(v)
    }
}

impl<T: Scalar> FromIterator<T> for Vector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl<'a, T: Scalar> Add<&'a Vector<T>> for &'a Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: &'a Vector<T>) -> Vector<T> {
        debug_assert_eq!(self.len(), rhs.len());
        self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect()
    }
}

impl<'a, T: Scalar> Sub<&'a Vector<T>> for &'a Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: &'a Vector<T>) -> Vector<T> {
        debug_assert_eq!(self.len(), rhs.len());
        self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect()
    }
}

impl<T: Scalar> Neg for &Vector<T> {
    type Output = Vector<T>;
    fn neg(self) -> Vector<T> {
        self.0.iter().map(|&a| -a).collect()
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds from row slices; panics on ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.as_ref().len()).unwrap_or(0);
        assert!(r >= 1 && c >= 1, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Max row sum of absolute entries.
    pub fn inf_norm(&self) -> T {
        inf_norm_mat(self)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn mul_vec(&self, v: &Vector<T>) -> Vector<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v.iter()).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub_mat(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a, T: Scalar> Mul<&'a Vector<T>> for &'a Matrix<T> {
    type Output = Vector<T>;
    fn mul(self, rhs: &'a Vector<T>) -> Vector<T> {
        self.mul_vec(rhs)
    }
}

impl<'a, T: Scalar> Mul<&'a Matrix<T>> for &'a Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Scalar> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Infinity norm of a matrix: max over rows of the sum of absolute entries.
pub fn inf_norm_mat<T: Scalar>(a: &Matrix<T>) -> T {
    (0..a.rows())
        .map(|i| a.row(i).iter().fold(T::zero(), |s, &x| s + x.abs()))
        .fold(T::zero(), T::max)
}

pub fn inf_norm_vec<T: Scalar>(v: &Vector<T>) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inf_norms_of_small_cases() {
        assert_eq!(inf_norm_mat(&Matrix::<f64>::identity(2)), 1.0);
        assert_eq!(inf_norm_mat(&Matrix::from_rows(&[[-1.0, 0.0], [0.0, 2.0]])), 2.0);
        assert_eq!(inf_norm_mat(&Matrix::from_rows(&[[0.0, 1.0], [1.0, -1.0]])), 2.0);

        assert_eq!(inf_norm_vec(&Vector::from_vec(vec![0.0, 0.0])), 0.0);
        assert_eq!(inf_norm_vec(&Vector::from_vec(vec![1.0, -3.0])), 3.0);
        let t = 0.0_f64;
        let x0 = Vector::from_vec(vec![(std::f64::consts::PI * t).cos() - 1.0, (std::f64::consts::PI * t).sin()]);
        assert_eq!(inf_norm_vec(&x0), 0.0);
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(a.matmul(&b), Matrix::from_rows(&[[2.0, 1.0], [4.0, 3.0]]));
        let v = Vector::from_vec(vec![1.0, -1.0]);
        assert_eq!((&a * &v).into_vec(), vec![-1.0, -1.0]);
    }

    proptest! {
        #[test]
        fn inf_norm_ignores_order_within_rows(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..6),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let a = Matrix::from_rows(&rows);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let shuffled: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.shuffle(&mut rng);
                    r
                })
                .collect();
            let b = Matrix::from_rows(&shuffled);
            let (na, nb) = (inf_norm_mat(&a), inf_norm_mat(&b));
            prop_assert!((na - nb).abs() <= 1e-12 * na.max(1.0));
            prop_assert!(na >= 0.0);
        }
    }
}
