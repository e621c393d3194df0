//! Dense matrices over a [`Scalar`] field.
//!
//! A p×p [`Block`] is a square `Matrix`; block rows, columns and grids are
//! matrices whose dimensions are multiples of `p`, addressed with
//! [`Matrix::block`] / [`Matrix::set_block`].

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

/// Default float-mode pivot tolerance, relative to the largest entry.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

/// The matrix has no usable pivot in the given column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("singular matrix (no pivot in column {column})")]
pub struct SingularMatrix {
    pub column: usize,
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// A p×p matrix; the atom of every computation.
pub type Block<T> = Matrix<T>;

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
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

    /// Builds from row vectors; panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// `value · I_n`.
    pub fn scalar(n: usize, value: T) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { value.clone() } else { T::zero() })
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

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(T::magnitude).fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.add_ref(b)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.sub_ref(b)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.assert_same_shape(other);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.add_ref(b);
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn scale(&self, factor: &T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.mul_ref(factor)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].add_ref(&a.mul_ref(b));
                }
            }
        }
        out
    }

    /// Copies the `(bi, bj)` block of size `p × p`.
    pub fn block(&self, bi: usize, bj: usize, p: usize) -> Self {
        self.submatrix(bi * p, bj * p, p, p)
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn set_block(&mut self, bi: usize, bj: usize, block: &Self) {
        self.set_submatrix(bi * block.rows, bj * block.cols, block);
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, sub: &Self) {
        for i in 0..sub.rows {
            for j in 0..sub.cols {
                self[(r0 + i, c0 + j)] = sub[(i, j)].clone();
            }
        }
    }

    /// Concatenates matrices with equal row counts left to right.
    pub fn hstack(parts: &[Self], rows: usize) -> Self {
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c0 = 0;
        for part in parts {
            assert_eq!(part.rows, rows, "hstack row mismatch");
            out.set_submatrix(0, c0, part);
            c0 += part.cols;
        }
        out
    }

    /// Concatenates matrices with equal column counts top to bottom.
    pub fn vstack(parts: &[Self], cols: usize) -> Self {
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for part in parts {
            assert_eq!(part.cols, cols, "vstack column mismatch");
            out.set_submatrix(r0, 0, part);
            r0 += part.rows;
        }
        out
    }

    /// Transposes every `p × p` block in place, keeping the block layout.
    pub fn transpose_blocks(&self, p: usize) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for bi in 0..self.rows / p {
            for bj in 0..self.cols / p {
                out.set_block(bi, bj, &self.block(bi, bj, p).transpose());
            }
        }
        out
    }

    fn assert_same_shape(&self, other: &Self) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }

    /// Row-reduces `[self | rhs]` and returns `self^{-1} · rhs`.
    ///
    /// Exact fields take the first nonzero pivot; floats use partial pivoting
    /// and reject pivots below `tol` times the largest entry of `self`.
    pub fn solve(&self, rhs: &Self, tol: f64) -> Result<Self, SingularMatrix> {
        assert!(self.is_square(), "solve needs a square matrix");
        assert_eq!(self.rows, rhs.rows, "solve rhs row mismatch");
        let n = self.rows;
        let scale = self.max_magnitude();
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let pivot_row = select_pivot(&a, col, scale, tol).ok_or(SingularMatrix { column: col })?;
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                b.swap_rows(pivot_row, col);
            }
            let pivot = a[(col, col)].clone();
            for j in col..n {
                a[(col, j)] = a[(col, j)].div_ref(&pivot);
            }
            for j in 0..b.cols {
                b[(col, j)] = b[(col, j)].div_ref(&pivot);
            }
            for row in 0..n {
                if row == col || a[(row, col)].is_zero() {
                    continue;
                }
                let factor = a[(row, col)].clone();
                for j in col..n {
                    let delta = factor.mul_ref(&a[(col, j)]);
                    a[(row, j)] = a[(row, j)].sub_ref(&delta);
                }
                for j in 0..b.cols {
                    let delta = factor.mul_ref(&b[(col, j)]);
                    b[(row, j)] = b[(row, j)].sub_ref(&delta);
                }
            }
        }
        Ok(b)
    }

    /// Returns `lhs · self^{-1}`.
    pub fn solve_right(&self, lhs: &Self, tol: f64) -> Result<Self, SingularMatrix> {
        Ok(self.transpose().solve(&lhs.transpose(), tol)?.transpose())
    }

    pub fn inverse(&self, tol: f64) -> Result<Self, SingularMatrix> {
        self.solve(&Self::identity(self.rows), tol)
    }

    /// Determinant by fraction-producing elimination.
    pub fn det(&self) -> T {
        assert!(self.is_square(), "det needs a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..n {
            // any nonzero pivot; floats still prefer the largest
            let Some(pivot_row) = select_pivot(&a, col, 0.0, 0.0) else {
                return T::zero();
            };
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                det = -det;
            }
            let pivot = a[(col, col)].clone();
            det = det.mul_ref(&pivot);
            for row in col + 1..n {
                if a[(row, col)].is_zero() {
                    continue;
                }
                let factor = a[(row, col)].div_ref(&pivot);
                for j in col..n {
                    let delta = factor.mul_ref(&a[(col, j)]);
                    a[(row, j)] = a[(row, j)].sub_ref(&delta);
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        for j in 0..self.cols {
            self.data.swap(r1 * self.cols + j, r2 * self.cols + j);
        }
    }

    /// Largest blockwise relative difference, measured against the larger
    /// of the two operands' max-norms. Zero when both are zero.
    pub fn relative_difference(&self, other: &Self) -> f64 {
        self.assert_same_shape(other);
        let scale = self.max_magnitude().max(other.max_magnitude());
        if scale == 0.0 {
            return 0.0;
        }
        self.sub(other).max_magnitude() / scale
    }
}

fn select_pivot<T: Scalar>(a: &Matrix<T>, col: usize, scale: f64, tol: f64) -> Option<usize> {
    if T::EXACT {
        return (col..a.rows).find(|&r| !a[(r, col)].is_zero());
    }
    let (best, mag) = (col..a.rows)
        .map(|r| (r, a[(r, col)].magnitude()))
        .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if mag <= 0.0 || a[(best, col)].is_negligible(scale, tol) {
        None
    } else {
        Some(best)
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

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}
