//! Matrix polynomials, bivariate matrix kernels and spectral jets.
//!
//! Every jet is laid out point-major, derivative-minor: all orders
//! `0..κ` of the first support point, then the second point, and so on.
//! Entries carry the `1/m!` normalization, i.e. they are Taylor coefficients.

use thiserror::Error;

use crate::linalg::{Block, Matrix};
use crate::scalar::{falling_factorial, taylor_weight, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupportError {
    #[error("support has {points} points but {mults} multiplicities")]
    LengthMismatch { points: usize, mults: usize },
    #[error("multiplicity of point {index} is zero")]
    ZeroMultiplicity { index: usize },
    #[error("support points {first} and {second} coincide")]
    RepeatedPoint { first: usize, second: usize },
}

/// Univariate matrix polynomial `Σ c_k x^k` with `p × p` coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct MatPoly<T> {
    p: usize,
    coeffs: Vec<Block<T>>,
}

impl<T: Scalar> MatPoly<T> {
    pub fn zero(p: usize) -> Self {
        Self { p, coeffs: Vec::new() }
    }

    pub fn constant(block: Block<T>) -> Self {
        Self::monomial(block, 0)
    }

    pub fn identity(p: usize) -> Self {
        Self::constant(Matrix::identity(p))
    }

    /// `block · x^k`.
    pub fn monomial(block: Block<T>, k: usize) -> Self {
        let p = block.rows();
        let mut coeffs = vec![Matrix::zeros(p, p); k];
        coeffs.push(block);
        Self::from_coeffs(p, coeffs)
    }

    /// Builds from coefficients (index = power) and trims trailing zeros.
    pub fn from_coeffs(p: usize, coeffs: Vec<Block<T>>) -> Self {
        assert!(
            coeffs.iter().all(|c| c.rows() == p && c.cols() == p),
            "all coefficients must be {p}x{p}"
        );
        let mut poly = Self { p, coeffs };
        poly.trim();
        poly
    }

    /// Scalar polynomial `Σ c_k x^k · I_p`.
    pub fn from_scalars(p: usize, coeffs: &[T]) -> Self {
        Self::from_coeffs(p, coeffs.iter().map(|c| Matrix::scalar(p, c.clone())).collect())
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Matrix::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Block<T>] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Block<T> {
        self.coeffs.get(k).cloned().unwrap_or_else(|| Matrix::zeros(self.p, self.p))
    }

    pub fn leading(&self) -> Option<&Block<T>> {
        self.coeffs.last()
    }

    /// Horner evaluation.
    pub fn eval(&self, x0: &T) -> Block<T> {
        let mut acc = Matrix::zeros(self.p, self.p);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(x0).add(c);
        }
        acc
    }

    /// `m`-th derivative.
    pub fn derivative(&self, m: usize) -> Self {
        if m == 0 {
            return self.clone();
        }
        let coeffs = (m..self.coeffs.len())
            .map(|k| self.coeffs[k].scale(&falling_factorial::<T>(k, m)))
            .collect();
        Self::from_coeffs(self.p, coeffs)
    }

    /// `f^(m)(x0) / m!`.
    pub fn taylor_coeff(&self, x0: &T, m: usize) -> Block<T> {
        let mut acc = Matrix::zeros(self.p, self.p);
        for (k, c) in self.coeffs.iter().enumerate().skip(m) {
            acc.add_assign(&c.scale(&taylor_weight(k, m, x0)));
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::from_coeffs(self.p, (0..len).map(|k| self.coeff(k).add(&other.coeff(k))).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::from_coeffs(self.p, (0..len).map(|k| self.coeff(k).sub(&other.coeff(k))).collect())
    }

    /// `A · P(x)`.
    pub fn left_mul(&self, a: &Block<T>) -> Self {
        Self::from_coeffs(self.p, self.coeffs.iter().map(|c| a.mul(c)).collect())
    }

    /// `P(x) · A`.
    pub fn right_mul(&self, a: &Block<T>) -> Self {
        Self::from_coeffs(self.p, self.coeffs.iter().map(|c| c.mul(a)).collect())
    }

    /// Coefficientwise transpose, `P(x)^T`.
    pub fn transpose(&self) -> Self {
        Self::from_coeffs(self.p, self.coeffs.iter().map(Matrix::transpose).collect())
    }

    /// Coefficients `0..len` stacked left to right as a `p × len·p` matrix.
    pub fn hstack_coeffs(&self, len: usize) -> Matrix<T> {
        let parts: Vec<_> = (0..len).map(|k| self.coeff(k)).collect();
        Matrix::hstack(&parts, self.p)
    }

    /// Inverse of [`hstack_coeffs`](Self::hstack_coeffs).
    pub fn from_hstack(p: usize, stacked: &Matrix<T>) -> Self {
        let len = stacked.cols() / p;
        Self::from_coeffs(p, (0..len).map(|k| stacked.block(0, k, p)).collect())
    }
}

/// Bivariate matrix kernel `Σ c_{k,l} x^k y^l`.
#[derive(Clone, PartialEq, Debug)]
pub struct MatKernel<T> {
    p: usize,
    x_len: usize,
    y_len: usize,
    coeffs: Vec<Block<T>>,
}

impl<T: Scalar> MatKernel<T> {
    pub fn zero(p: usize) -> Self {
        Self {
            p,
            x_len: 0,
            y_len: 0,
            coeffs: Vec::new(),
        }
    }

    /// Grid of coefficients with `grid[k][l]` multiplying `x^k y^l`.
    pub fn from_grid(p: usize, grid: Vec<Vec<Block<T>>>) -> Self {
        let x_len = grid.len();
        let y_len = grid.first().map_or(0, Vec::len);
        assert!(grid.iter().all(|row| row.len() == y_len), "ragged kernel grid");
        let coeffs: Vec<_> = grid.into_iter().flatten().collect();
        assert!(coeffs.iter().all(|c| c.rows() == p && c.cols() == p));
        Self { p, x_len, y_len, coeffs }
    }

    /// `B · x^k y^l`.
    pub fn monomial(block: Block<T>, k: usize, l: usize) -> Self {
        let p = block.rows();
        let mut kernel = Self::zero(p);
        kernel.resize(k + 1, l + 1);
        kernel.coeffs[k * (l + 1) + l] = block;
        kernel
    }

    /// `Q(y)^T · M · R(x)`.
    pub fn outer(q: &MatPoly<T>, middle: &Block<T>, r: &MatPoly<T>) -> Self {
        let p = middle.rows();
        let mut kernel = Self::zero(p);
        kernel.resize(r.coeffs().len(), q.coeffs().len());
        for (k, rk) in r.coeffs().iter().enumerate() {
            let right = middle.mul(rk);
            for (l, ql) in q.coeffs().iter().enumerate() {
                kernel.coeffs[k * kernel.y_len + l] = ql.transpose().mul(&right);
            }
        }
        kernel
    }

    fn resize(&mut self, x_len: usize, y_len: usize) {
        if x_len <= self.x_len && y_len <= self.y_len {
            return;
        }
        let nx = x_len.max(self.x_len);
        let ny = y_len.max(self.y_len);
        let mut coeffs = vec![Matrix::zeros(self.p, self.p); nx * ny];
        for k in 0..self.x_len {
            for l in 0..self.y_len {
                coeffs[k * ny + l] = self.coeffs[k * self.y_len + l].clone();
            }
        }
        self.x_len = nx;
        self.y_len = ny;
        self.coeffs = coeffs;
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of stored powers of `x` (degree bound + 1).
    pub fn x_len(&self) -> usize {
        self.x_len
    }

    pub fn y_len(&self) -> usize {
        self.y_len
    }

    pub fn coeff(&self, k: usize, l: usize) -> Block<T> {
        if k < self.x_len && l < self.y_len {
            self.coeffs[k * self.y_len + l].clone()
        } else {
            Matrix::zeros(self.p, self.p)
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let nx = self.x_len.max(other.x_len);
        let ny = self.y_len.max(other.y_len);
        let grid = (0..nx)
            .map(|k| (0..ny).map(|l| self.coeff(k, l).add(&other.coeff(k, l))).collect())
            .collect();
        Self::from_grid(self.p, grid)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(&-T::one()))
    }

    fn scaled(&self, factor: &T) -> Self {
        Self {
            p: self.p,
            x_len: self.x_len,
            y_len: self.y_len,
            coeffs: self.coeffs.iter().map(|c| c.scale(factor)).collect(),
        }
    }

    /// `K(y, x)^T`; a kernel is symmetric when this equals `K`.
    pub fn swap_transpose(&self) -> Self {
        let grid = (0..self.y_len)
            .map(|k| (0..self.x_len).map(|l| self.coeff(l, k).transpose()).collect())
            .collect();
        Self::from_grid(self.p, grid)
    }

    /// Exact comparison that ignores zero padding.
    pub fn coeff_eq(&self, other: &Self) -> bool {
        let nx = self.x_len.max(other.x_len);
        let ny = self.y_len.max(other.y_len);
        (0..nx).all(|k| (0..ny).all(|l| self.coeff(k, l) == other.coeff(k, l)))
    }

    /// `K(x, y)` as a polynomial in `x` for the power `y^l`.
    pub fn x_poly_at_y_power(&self, l: usize) -> MatPoly<T> {
        MatPoly::from_coeffs(self.p, (0..self.x_len).map(|k| self.coeff(k, l)).collect())
    }

    /// `K(x, y)` as a polynomial in `y` for the power `x^k`.
    pub fn y_poly_at_x_power(&self, k: usize) -> MatPoly<T> {
        MatPoly::from_coeffs(self.p, (0..self.y_len).map(|l| self.coeff(k, l)).collect())
    }

    /// `(∂_y^m K)(x, y0) / m!` as a polynomial in `x`.
    pub fn y_taylor(&self, y0: &T, m: usize) -> MatPoly<T> {
        let coeffs = (0..self.x_len)
            .map(|k| {
                let mut acc = Matrix::zeros(self.p, self.p);
                for l in m..self.y_len {
                    acc.add_assign(&self.coeff(k, l).scale(&taylor_weight(l, m, y0)));
                }
                acc
            })
            .collect();
        MatPoly::from_coeffs(self.p, coeffs)
    }

    /// `(∂_x^m K)(x0, y) / m!` as a polynomial in `y`.
    pub fn x_taylor(&self, x0: &T, m: usize) -> MatPoly<T> {
        let coeffs = (0..self.y_len)
            .map(|l| {
                let mut acc = Matrix::zeros(self.p, self.p);
                for k in m..self.x_len {
                    acc.add_assign(&self.coeff(k, l).scale(&taylor_weight(k, m, x0)));
                }
                acc
            })
            .collect();
        MatPoly::from_coeffs(self.p, coeffs)
    }

    pub fn eval(&self, x0: &T, y0: &T) -> Block<T> {
        self.y_taylor(y0, 0).eval(x0)
    }
}

/// Distinct points with multiplicities.
#[derive(Clone, PartialEq, Debug)]
pub struct Support<T> {
    points: Vec<T>,
    mults: Vec<usize>,
}

impl<T: Scalar> Support<T> {
    pub fn new(points: Vec<T>, mults: Vec<usize>) -> Result<Self, SupportError> {
        if points.len() != mults.len() {
            return Err(SupportError::LengthMismatch {
                points: points.len(),
                mults: mults.len(),
            });
        }
        if let Some(index) = mults.iter().position(|&m| m == 0) {
            return Err(SupportError::ZeroMultiplicity { index });
        }
        for first in 0..points.len() {
            for second in first + 1..points.len() {
                if points[first] == points[second] {
                    return Err(SupportError::RepeatedPoint { first, second });
                }
            }
        }
        Ok(Self { points, mults })
    }

    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            mults: Vec::new(),
        }
    }

    /// Simple points, each with multiplicity one.
    pub fn simple(points: Vec<T>) -> Result<Self, SupportError> {
        let mults = vec![1; points.len()];
        Self::new(points, mults)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn mults(&self) -> &[usize] {
        &self.mults
    }

    /// `N = Σ κ`.
    pub fn total(&self) -> usize {
        self.mults.iter().sum()
    }

    /// `(point index, point, derivative order)` in jet order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &T, usize)> + '_ {
        self.points
            .iter()
            .zip(&self.mults)
            .enumerate()
            .flat_map(|(j, (x, &k))| (0..k).map(move |m| (j, x, m)))
    }
}

/// `[f(x_1), f'(x_1)/1!, …]` as a `p × Np` block row.
pub fn jet_row<T: Scalar>(f: &MatPoly<T>, s: &Support<T>) -> Matrix<T> {
    let p = f.p();
    let blocks: Vec<_> = s.entries().map(|(_, x, m)| f.taylor_coeff(x, m)).collect();
    Matrix::hstack(&blocks, p)
}

/// Entry `(j, m)` is `(∂_y^m K)(x, x_j) / m!`, a polynomial in `x`.
pub fn kernel_jet_col<T: Scalar>(k: &MatKernel<T>, s: &Support<T>) -> Vec<MatPoly<T>> {
    s.entries().map(|(_, x, m)| k.y_taylor(x, m)).collect()
}

/// Entry `(j, m)` is `(∂_x^m K)(x_j, y) / m!`, a polynomial in `y`.
pub fn kernel_jet_row<T: Scalar>(k: &MatKernel<T>, s: &Support<T>) -> Vec<MatPoly<T>> {
    s.entries().map(|(_, x, m)| k.x_taylor(x, m)).collect()
}

/// `Np × Np` grid: row `(b, m_y)`, column `(j, m_x)` holds
/// `(∂_x^{m_x} ∂_y^{m_y} K)(x_j, x_b) / (m_x! m_y!)`.
pub fn kernel_double_jet<T: Scalar>(k: &MatKernel<T>, s: &Support<T>) -> Matrix<T> {
    kernel_mixed_jet(k, s, s)
}

/// `N_y p × N_x p` grid: x-jets at `sx` along columns, y-jets at `sy` along rows.
pub fn kernel_mixed_jet<T: Scalar>(k: &MatKernel<T>, sx: &Support<T>, sy: &Support<T>) -> Matrix<T> {
    let p = k.p();
    let mut out = Matrix::zeros(sy.total() * p, sx.total() * p);
    for (row, poly) in kernel_jet_col(k, sy).iter().enumerate() {
        for (col, (_, x, m)) in sx.entries().enumerate() {
            out.set_block(row, col, &poly.taylor_coeff(x, m));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn scalar_poly(c: &[Rational]) -> MatPoly<Rational> {
        MatPoly::from_scalars(1, c)
    }

    fn one_by_one(v: Rational) -> Block<Rational> {
        Matrix::scalar(1, v)
    }

    fn xy() -> MatKernel<Rational> {
        MatKernel::monomial(one_by_one(q(1, 1)), 1, 1)
    }

    fn row_values(m: &Matrix<Rational>) -> Vec<Rational> {
        m.entries().to_vec()
    }

    #[test]
    fn eval_examples() {
        let x_i2 = MatPoly::monomial(Matrix::<Rational>::identity(2), 1);
        assert_eq!(x_i2.eval(&q(3, 1)), Matrix::scalar(2, q(3, 1)));
        assert_eq!(MatPoly::<Rational>::zero(2).eval(&q(7, 1)), Matrix::zeros(2, 2));
        let p = scalar_poly(&[q(-1, 3), q(0, 1), q(1, 1)]);
        assert_eq!(p.eval(&q(1, 1)), one_by_one(q(2, 3)));
    }

    #[test]
    fn derivative_examples() {
        let x3 = scalar_poly(&[q(0, 1), q(0, 1), q(0, 1), q(1, 1)]);
        assert_eq!(x3.derivative(1), scalar_poly(&[q(0, 1), q(0, 1), q(3, 1)]));
        assert!(x3.derivative(4).is_zero());
        assert_eq!(x3.derivative(4).degree(), None);
        let x2 = MatPoly::monomial(Matrix::<Rational>::identity(2), 2);
        assert_eq!(x2.derivative(2), MatPoly::constant(Matrix::scalar(2, q(2, 1))));
        assert_eq!(x3.derivative(0), x3);
    }

    #[test]
    fn jet_row_examples() {
        let x2 = scalar_poly(&[q(0, 1), q(0, 1), q(1, 1)]);
        let s = Support::new(vec![q(1, 1)], vec![2]).unwrap();
        assert_eq!(row_values(&jet_row(&x2, &s)), vec![q(1, 1), q(2, 1)]);

        let x3 = scalar_poly(&[q(0, 1), q(0, 1), q(0, 1), q(1, 1)]);
        let s = Support::new(vec![q(0, 1), q(1, 1)], vec![2, 1]).unwrap();
        assert_eq!(row_values(&jet_row(&x3, &s)), vec![q(0, 1), q(0, 1), q(1, 1)]);

        let s = Support::new(vec![q(0, 1), q(5, 1)], vec![2, 1]).unwrap();
        let jet = jet_row(&MatPoly::<Rational>::identity(2), &s);
        assert_eq!(jet.block(0, 0, 2), Matrix::identity(2));
        assert_eq!(jet.block(0, 1, 2), Matrix::zeros(2, 2));
        assert_eq!(jet.block(0, 2, 2), Matrix::identity(2));
    }

    #[test]
    fn kernel_jet_col_examples() {
        let s = Support::simple(vec![q(2, 1)]).unwrap();
        assert_eq!(kernel_jet_col(&xy(), &s), vec![scalar_poly(&[q(0, 1), q(2, 1)])]);

        let k1 = MatKernel::from_grid(
            1,
            vec![
                vec![one_by_one(q(1, 2)), one_by_one(q(0, 1))],
                vec![one_by_one(q(0, 1)), one_by_one(q(3, 2))],
            ],
        );
        let s = Support::simple(vec![q(1, 1)]).unwrap();
        assert_eq!(kernel_jet_col(&k1, &s), vec![scalar_poly(&[q(1, 2), q(3, 2)])]);

        let s = Support::new(vec![q(0, 1)], vec![2]).unwrap();
        assert_eq!(
            kernel_jet_col(&xy(), &s),
            vec![MatPoly::zero(1), scalar_poly(&[q(0, 1), q(1, 1)])]
        );
    }

    #[test]
    fn kernel_jet_row_examples() {
        let s = Support::simple(vec![q(2, 1)]).unwrap();
        assert_eq!(kernel_jet_row(&xy(), &s), vec![scalar_poly(&[q(0, 1), q(2, 1)])]);

        let x2y = MatKernel::monomial(one_by_one(q(1, 1)), 2, 1);
        let s = Support::new(vec![q(1, 1)], vec![2]).unwrap();
        assert_eq!(
            kernel_jet_row(&x2y, &s),
            vec![scalar_poly(&[q(0, 1), q(1, 1)]), scalar_poly(&[q(0, 1), q(2, 1)])]
        );
    }

    #[test]
    fn kernel_jet_row_is_transpose_of_col_for_symmetric_kernels() {
        let a = Matrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(3, 1), q(4, 1)]]);
        let k = MatKernel::monomial(a, 2, 1);
        let sym = k.add(&k.swap_transpose());
        assert!(sym.coeff_eq(&sym.swap_transpose()));
        let s = Support::new(vec![q(1, 1), q(-2, 3)], vec![2, 1]).unwrap();
        let rows = kernel_jet_row(&sym, &s);
        let cols = kernel_jet_col(&sym, &s);
        for (r, c) in rows.iter().zip(&cols) {
            assert_eq!(*r, c.transpose());
        }
    }

    #[test]
    fn double_jet_examples() {
        let s = Support::simple(vec![q(1, 1), q(2, 1)]).unwrap();
        assert_eq!(
            row_values(&kernel_double_jet(&xy(), &s)),
            vec![q(1, 1), q(2, 1), q(2, 1), q(4, 1)]
        );

        let c = Matrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(0, 1), q(5, 1)]]);
        let constant = MatKernel::monomial(c.clone(), 0, 0);
        let s = Support::new(vec![q(0, 1), q(3, 1)], vec![2, 1]).unwrap();
        let jet = kernel_double_jet(&constant, &s);
        for (row, (_, _, my)) in s.entries().enumerate() {
            for (col, (_, _, mx)) in s.entries().enumerate() {
                let expected = if my == 0 && mx == 0 { c.clone() } else { Matrix::zeros(2, 2) };
                assert_eq!(jet.block(row, col, 2), expected);
            }
        }

        let s = Support::new(vec![q(0, 1)], vec![2]).unwrap();
        assert_eq!(
            row_values(&kernel_double_jet(&xy(), &s)),
            vec![q(0, 1), q(0, 1), q(0, 1), q(1, 1)]
        );
    }

    #[test]
    fn double_jet_layout_is_rows_y_cols_x() {
        // K = x^2 y: entry (row=(b,my), col=(j,mx)) = C(2,mx) x_j^{2-mx} * C(1,my) x_b^{1-my}
        let k = MatKernel::monomial(one_by_one(q(1, 1)), 2, 1);
        let s = Support::new(vec![q(2, 1), q(3, 1)], vec![1, 1]).unwrap();
        let jet = kernel_double_jet(&k, &s);
        // row b=0 (y=2), col j=1 (x=3): 9*2
        assert_eq!(jet[(0, 1)], q(18, 1));
        // row b=1 (y=3), col j=0 (x=2): 4*3
        assert_eq!(jet[(1, 0)], q(12, 1));
    }

    #[test]
    fn mixed_jet_examples() {
        let sx = Support::simple(vec![q(3, 1)]).unwrap();
        let sy = Support::simple(vec![q(1, 1), q(2, 1)]).unwrap();
        let jet = kernel_mixed_jet(&xy(), &sx, &sy);
        assert_eq!((jet.rows(), jet.cols()), (2, 1));
        assert_eq!(row_values(&jet), vec![q(3, 1), q(6, 1)]);

        assert!(kernel_mixed_jet(&MatKernel::<Rational>::zero(1), &sx, &sy).is_zero());

        let s = Support::new(vec![q(1, 2), q(-1, 1)], vec![2, 3]).unwrap();
        let k = MatKernel::monomial(one_by_one(q(1, 1)), 3, 4).add(&xy());
        assert_eq!(kernel_mixed_jet(&k, &s, &s), kernel_double_jet(&k, &s));
    }

    #[test]
    fn support_validation() {
        assert!(matches!(
            Support::new(vec![q(1, 1), q(1, 1)], vec![1, 1]),
            Err(SupportError::RepeatedPoint { .. })
        ));
        assert!(matches!(
            Support::new(vec![q(1, 1)], vec![0]),
            Err(SupportError::ZeroMultiplicity { index: 0 })
        ));
        assert!(matches!(
            Support::<Rational>::new(vec![q(1, 1)], vec![]),
            Err(SupportError::LengthMismatch { .. })
        ));
        assert_eq!(Support::new(vec![q(1, 1), q(2, 1)], vec![2, 3]).unwrap().total(), 5);
    }
}
