//! Dense row-major matrices and vectors over a [`Scalar`] backend.
//!
//! Elimination-based operations (`invert`, `rank`, `null_space`) take the
//! same code path for both backends. In the rational backend a pivot is
//! rejected only when it is exactly zero; in the float backend it is rejected
//! when it falls below a fixed fraction of the matrix infinity norm:
//! [`PIVOT_TOL`] for inversion and [`RANK_TOL`] for rank decisions.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{Backend, Rational, Scalar};

/// Relative pivot threshold for float inversion.
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative threshold below which a float row counts as null in rank decisions.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidData {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, v) in diag.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    /// Builds a matrix from nested rows; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::InvalidData {
                expected: c,
                got: bad.len(),
            });
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Column vector `n x 1` of ones.
    pub fn ones_column(n: usize) -> Self {
        Self {
            rows: n,
            cols: 1,
            data: vec![T::one(); n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn backend(&self) -> Backend {
        T::BACKEND
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        Vector((0..self.rows).map(|i| self[(i, j)].clone()).collect())
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(Scalar::to_f64)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])].clone())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                op: "hstack",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        }))
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(self.zip_with(other, |a, b| a.clone() + b.clone()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(self.zip_with(other, |a, b| a.clone() - b.clone()))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, k: &T) -> Self {
        self.map(|v| v.clone() * k.clone())
    }

    /// Standard matrix product.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "multiply",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + prod;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &Vector<T>) -> Result<Vector<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                op: "mul_vec",
                left: self.shape(),
                right: (v.len(), 1),
            });
        }
        Ok(Vector(
            (0..self.rows)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(v.iter())
                        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
                })
                .collect(),
        ))
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u32) -> Result<Self> {
        self.require_square()?;
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.multiply(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.multiply(&base)?;
            }
        }
        Ok(result)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn row_sums(&self) -> Vector<T> {
        Vector(
            (0..self.rows)
                .map(|i| self.row(i).iter().fold(T::zero(), |acc, v| acc + v.clone()))
                .collect(),
        )
    }

    /// Infinity norm (maximum absolute row sum), evaluated in `f64`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.to_f64().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise absolute difference, in `f64`. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|v| {
                let x = v.to_f64();
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Sum of squared entries, exact in the rational backend.
    pub fn frobenius_norm_squared(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc + v.clone() * v.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    fn require_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Reduced row echelon form with partial pivoting. Returns the reduced
    /// matrix and the pivot columns.
    pub fn rref(&self, rel_tol: f64) -> (Self, Vec<usize>) {
        let scale = self.norm_inf();
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let best = (row..m.rows)
                .max_by(|&a, &b| {
                    m[(a, col)]
                        .abs()
                        .partial_cmp(&m[(b, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty row range");
            if m[(best, col)].negligible(scale, rel_tol) {
                for r in row..m.rows {
                    m[(r, col)] = T::zero();
                }
                continue;
            }
            m.swap_rows(row, best);
            let pivot = m[(row, col)].clone();
            for j in col..m.cols {
                m[(row, j)] = m[(row, j)].clone() / pivot.clone();
            }
            for r in 0..m.rows {
                if r == row || m[(r, col)].is_zero() {
                    continue;
                }
                let factor = m[(r, col)].clone();
                for j in col..m.cols {
                    let delta = factor.clone() * m[(row, j)].clone();
                    m[(r, j)] = m[(r, j)].clone() - delta;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref(RANK_TOL).1.len()
    }

    /// Basis of the right null space, one vector per column of the result
    /// (an `n x 0` matrix when the kernel is trivial).
    pub fn null_space(&self) -> Self {
        let (r, pivots) = self.rref(RANK_TOL);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Self::zeros(self.cols, free.len());
        for (k, &f) in free.iter().enumerate() {
            basis[(f, k)] = T::one();
            for (row, &p) in pivots.iter().enumerate() {
                basis[(p, k)] = -r[(row, f)].clone();
            }
        }
        basis
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn invert(&self) -> Result<Self> {
        self.require_square()?;
        let n = self.rows;
        let augmented = self.hstack(&Self::identity(n))?;
        let scale = self.norm_inf();
        if scale == 0.0 && n > 0 {
            return Err(Error::Singular);
        }
        // rref over the augmented matrix uses its own norm; rescale the
        // tolerance so the pivot test is relative to ||A|| alone.
        let rel = PIVOT_TOL * scale / augmented.norm_inf().max(f64::MIN_POSITIVE);
        let (reduced, pivots) = augmented.rref(rel);
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(Error::Singular);
        }
        Ok(Self::from_fn(n, n, |i, j| reduced[(i, n + j)].clone()))
    }

    /// Index of a square matrix: the smallest `k` with
    /// `rank(A^(k+1)) == rank(A^k)`.
    pub fn index(&self) -> Result<usize> {
        self.require_square()?;
        let mut prev_rank = self.rows;
        let mut power = Self::identity(self.rows);
        for k in 0..=self.rows {
            power = power.multiply(self)?;
            let r = power.rank();
            if r == prev_rank {
                return Ok(k);
            }
            prev_rank = r;
        }
        Ok(self.rows)
    }

    /// Characteristic polynomial `det(xI - A)` by Faddeev-LeVerrier.
    /// Coefficients are returned lowest degree first; the last one is 1.
    pub fn characteristic_polynomial(&self) -> Result<Vec<T>> {
        self.require_square()?;
        let n = self.rows;
        let mut coeffs = vec![T::zero(); n + 1];
        coeffs[n] = T::one();
        let mut m = Self::zeros(n, n);
        for k in 1..=n {
            let mut next = self.multiply(&m)?;
            for i in 0..n {
                next[(i, i)] = next[(i, i)].clone() + coeffs[n - k + 1].clone();
            }
            let am = self.multiply(&next)?;
            coeffs[n - k] = -am.trace() / T::from_i64(k as i64);
            m = next;
        }
        Ok(coeffs)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.data[i * self.cols + j].to_string())
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Matrix<Rational> {
    /// Converts an integer table; convenient for fixtures.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Rational::from_i64(v)).collect())
                .collect(),
        )
    }
}

impl Matrix<f64> {
    pub fn from_f64_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.to_vec()).collect())
    }
}

impl<T: Scalar> Vector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("vector must be non-empty".into()));
        }
        Ok(Self(entries))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![T::one(); n])
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![T::zero(); n];
        v[i] = T::one();
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Vector<U> {
        Vector(self.0.iter().map(f).collect())
    }

    pub fn to_f64(&self) -> Vector<f64> {
        self.map(Scalar::to_f64)
    }

    pub fn as_column(&self) -> Matrix<T> {
        Matrix {
            rows: self.len(),
            cols: 1,
            data: self.0.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }

    pub fn scale(&self, k: &T) -> Self {
        self.map(|v| v.clone() * k.clone())
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).norm_inf()
    }

    /// `max(x) - min(x)`, in `f64`.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .0
            .iter()
            .map(Scalar::to_f64)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
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

impl<T> From<Vec<T>> for Vector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn example_laplacian() -> Matrix<Rational> {
        Matrix::from_i64_rows(&[
            &[3, 0, -3, 0, 0, 0, 0],
            &[-1, 1, 0, 0, 0, 0, 0],
            &[-4, -2, 6, 0, 0, 0, 0],
            &[0, 0, 0, 3, -3, 0, 0],
            &[0, 0, 0, -2, 2, 0, 0],
            &[0, -1, -3, 0, 0, 7, -3],
            &[0, 0, 0, -2, 0, -2, 4],
        ])
        .unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let m = Matrix::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let i = Matrix::identity(2);
        assert_eq!(i.multiply(&m).unwrap(), m);
        assert_eq!(m.multiply(&i).unwrap(), m);
    }

    #[test]
    fn permutation_squares_to_identity() {
        let p = Matrix::from_i64_rows(&[&[0, 1], &[1, 0]]).unwrap();
        assert_eq!(p.multiply(&p).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn laplacian_annihilates_ones() {
        let l = example_laplacian();
        let ones = Matrix::ones_column(7);
        assert!(l.multiply(&ones).unwrap().is_zero());
    }

    #[test]
    fn multiply_rejects_bad_shapes() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(
            a.multiply(&a),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Matrix::<f64>::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn invert_small_cases() {
        let i = Matrix::<Rational>::identity(3);
        assert_eq!(i.invert().unwrap(), i);
        let d = Matrix::from_diagonal(&[q(2, 1), q(4, 1)]);
        assert_eq!(
            d.invert().unwrap(),
            Matrix::from_diagonal(&[q(1, 2), q(1, 4)])
        );
    }

    #[test]
    fn invert_rejects_singular() {
        let l = example_laplacian();
        assert_eq!(l.invert(), Err(Error::Singular));
        assert_eq!(l.to_f64().invert(), Err(Error::Singular));
        let tiny = Matrix::from_f64_rows(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-14]]).unwrap();
        assert_eq!(tiny.invert(), Err(Error::Singular));
    }

    #[test]
    fn invert_gram_matrix_of_example_u() {
        // U = [1 | columns 2,3,5,6,7 of L]; U^T U is 6x6 and nonsingular.
        let l = example_laplacian();
        let u = Matrix::ones_column(7)
            .hstack(&l.select_columns(&[1, 2, 4, 5, 6]))
            .unwrap();
        let gram = u.transpose().multiply(&u).unwrap();
        let inv = gram.invert().unwrap();
        assert_eq!(gram.multiply(&inv).unwrap(), Matrix::identity(6));
        // one frozen entry, from an independent sympy run
        assert_eq!(inv[(0, 0)], q(117, 550));
        assert_eq!(inv[(5, 5)], q(43027, 266200));

        let inv_f = gram.to_f64().invert().unwrap();
        let resid = gram.to_f64().multiply(&inv_f).unwrap();
        assert!(resid.max_abs_diff(&Matrix::identity(6)) < 1e-10);
    }

    #[test]
    fn rank_cases() {
        assert_eq!(Matrix::<Rational>::zeros(3, 4).rank(), 0);
        assert_eq!(example_laplacian().rank(), 5);
        assert_eq!(example_laplacian().to_f64().rank(), 5);
    }

    #[test]
    fn index_cases() {
        assert_eq!(Matrix::<Rational>::identity(3).index().unwrap(), 0);
        let nil = Matrix::from_i64_rows(&[&[0, 1], &[0, 0]]).unwrap();
        assert_eq!(nil.index().unwrap(), 2);
        assert_eq!(example_laplacian().index().unwrap(), 1);
        assert_eq!(Matrix::<Rational>::zeros(2, 2).index().unwrap(), 1);
    }

    #[test]
    fn null_space_of_example_laplacian() {
        let l = example_laplacian();
        let ns = l.null_space();
        assert_eq!(ns.shape(), (7, 2));
        assert!(l.multiply(&ns).unwrap().is_zero());
        assert_eq!(ns.rank(), 2);
        assert_eq!(Matrix::<Rational>::identity(3).null_space().cols(), 0);
    }

    #[test]
    fn characteristic_polynomial_of_example_laplacian() {
        // Oracle: x^2 (x - 5)(x^2 - 11x + 22)(x^2 - 10x + 15), expanded by hand
        // from the factorization computed independently with sympy.
        let expected = poly_mul(&[
            vec![0, 0, 1],
            vec![-5, 1],
            vec![22, -11, 1],
            vec![15, -10, 1],
        ]);
        let got = example_laplacian().characteristic_polynomial().unwrap();
        let got: Vec<Rational> = got;
        let expected: Vec<Rational> = expected.into_iter().map(Rational::from_i64).collect();
        assert_eq!(got, expected);
        // zero is a root of multiplicity exactly 2 = number of final classes
        assert!(got[0].is_zero() && got[1].is_zero() && !got[2].is_zero());
    }

    fn poly_mul(factors: &[Vec<i64>]) -> Vec<i64> {
        factors.iter().fold(vec![1], |acc, f| {
            let mut out = vec![0; acc.len() + f.len() - 1];
            for (i, a) in acc.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            out
        })
    }

    #[test]
    fn frobenius_cases() {
        assert_eq!(Matrix::<f64>::zeros(3, 3).frobenius_norm(), 0.0);
        assert_eq!(Matrix::<f64>::identity(4).frobenius_norm(), 2.0);
    }

    #[test]
    fn pow_matches_repeated_multiply() {
        let m = Matrix::from_i64_rows(&[&[1, 1], &[1, 0]]).unwrap();
        let p10 = m.pow(10).unwrap();
        assert_eq!(p10[(0, 0)], Rational::from_i64(89));
        assert_eq!(m.pow(0).unwrap(), Matrix::identity(2));
    }

    fn rational_matrix(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
        proptest::collection::vec((-9i64..=9, 1i64..=4), n * n).prop_map(move |v| {
            Matrix::new(n, n, v.into_iter().map(|(a, b)| q(a, b)).collect()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_arithmetic_is_associative_and_distributive(
            (a, b, c) in (1usize..=4).prop_flat_map(|n| (rational_matrix(n), rational_matrix(n), rational_matrix(n)))
        ) {
            let ab_c = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let a_bc = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let lhs = a.multiply(&b.add(&c).unwrap()).unwrap();
            let rhs = a.multiply(&b).unwrap().add(&a.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn double_inverse_is_identity(a in (1usize..=6).prop_flat_map(rational_matrix)) {
            if let Ok(inv) = a.invert() {
                prop_assert_eq!(inv.invert().unwrap(), a.clone());
                prop_assert_eq!(a.multiply(&inv).unwrap(), Matrix::identity(a.rows()));
            } else {
                prop_assert!(a.rank() < a.rows());
            }
        }

        #[test]
        fn rank_nullity(
            (rows, a) in (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| {
                (Just(r), proptest::collection::vec(-2i64..=2, r * c).prop_map(move |v| {
                    Matrix::new(r, c, v.into_iter().map(Rational::from_i64).collect()).unwrap()
                }))
            })
        ) {
            let _ = rows;
            prop_assert_eq!(a.rank() + a.null_space().cols(), a.cols());
            prop_assert!(a.multiply(&a.null_space()).map(|m| m.is_zero()).unwrap_or(true));
        }
    }
}
