//! Block Gauss–Borel factorization `G = S1^{-1} H S2^{-T}` of a Gram matrix.
//!
//! Elimination proceeds one block row at a time: degree `n` only needs the
//! moments `G_{k,l}` with `k, l ≤ n` and all earlier pivots, so the
//! factorization can be extended in place.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Block, Matrix, DEFAULT_PIVOT_TOL};
use crate::matpoly::MatPoly;
use crate::moments::MomentSource;
use crate::scalar::Scalar;

/// Float-mode thresholds. Exact fields ignore both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Pivot is singular below `pivot × (largest entry)`.
    pub pivot: f64,
    /// Relative tolerance for identity checks.
    pub check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pivot: DEFAULT_PIVOT_TOL,
            check: 1e-9,
        }
    }
}

impl Tolerances {
    /// `‖a − b‖ ≤ check · max(scale, ‖a‖, ‖b‖)`; exact fields require equality.
    pub fn close<T: Scalar>(&self, a: &Matrix<T>, b: &Matrix<T>, scale: f64) -> bool {
        if T::EXACT {
            return a == b;
        }
        let bound = scale.max(a.max_magnitude()).max(b.max_magnitude());
        a.sub(b).max_magnitude() <= self.check * bound
    }
}

#[derive(Clone)]
pub struct Factorization<T: Scalar> {
    source: Arc<dyn MomentSource<T>>,
    tol: Tolerances,
    p: usize,
    // (S1^{-1})_{n,m} H_m for m < n
    lower_h: Vec<Vec<Block<T>>>,
    // (S2^{-T})_{m,n} for m < n, stored by column n
    upper: Vec<Vec<Block<T>>>,
    // (S2^T)^{-1} columns, i.e. (S2^{-T})^{-1}_{m,n}, stored by column n
    upper_inv: Vec<Vec<Block<T>>>,
    s1: Vec<Vec<Block<T>>>,
    h: Vec<Block<T>>,
    h_inv: Vec<Block<T>>,
}

impl<T: Scalar> std::fmt::Debug for Factorization<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("p", &self.p)
            .field("degrees", &self.h.len())
            .field("h", &self.h)
            .finish()
    }
}

/// Factorizes the Gram matrix through degree `n_max`.
pub fn factorize<T: Scalar>(
    source: Arc<dyn MomentSource<T>>,
    n_max: usize,
    tol: Tolerances,
) -> Result<Factorization<T>> {
    let mut f = Factorization::empty(source, tol);
    f.extend_to(n_max)?;
    Ok(f)
}

impl<T: Scalar> Factorization<T> {
    /// A factorization with no degrees yet.
    pub fn empty(source: Arc<dyn MomentSource<T>>, tol: Tolerances) -> Self {
        let p = source.p();
        Self {
            source,
            tol,
            p,
            lower_h: Vec::new(),
            upper: Vec::new(),
            upper_inv: Vec::new(),
            s1: Vec::new(),
            h: Vec::new(),
            h_inv: Vec::new(),
        }
    }

    pub fn extend_to(&mut self, n_max: usize) -> Result<()> {
        while self.h.len() <= n_max {
            self.push_degree()?;
        }
        Ok(())
    }

    /// Eliminates the next block row. On breakdown the factorization keeps
    /// every earlier degree.
    pub fn push_degree(&mut self) -> Result<()> {
        let n = self.h.len();
        let p = self.p;
        let g = |k, l| self.source.moment(k, l);

        let mut lower_h = Vec::with_capacity(n);
        for m in 0..n {
            let mut r = g(n, m)?;
            for (k, lh) in lower_h.iter().enumerate().take(m) {
                r = r.sub(&Matrix::mul(lh, &self.upper[m][k]));
            }
            lower_h.push(r);
        }
        let mut upper = Vec::with_capacity(n);
        for m in 0..n {
            let mut t = g(m, n)?;
            for (k, u) in upper.iter().enumerate().take(m) {
                t = t.sub(&Matrix::mul(&self.lower_h[m][k], u));
            }
            upper.push(self.h_inv[m].mul(&t));
        }
        let mut h = g(n, n)?;
        for (lh, u) in lower_h.iter().zip(&upper) {
            h = h.sub(&lh.mul(u));
        }
        let h_inv = h.inverse(self.tol.pivot).map_err(|_| Error::Breakdown { degree: n })?;

        // S1 row n from S1 · S1^{-1} = I
        let lower: Vec<_> = lower_h.iter().enumerate().map(|(m, lh)| lh.mul(&self.h_inv[m])).collect();
        let mut s1_row = vec![Matrix::zeros(p, p); n + 1];
        s1_row[n] = Matrix::identity(p);
        for m in (0..n).rev() {
            let mut acc = lower[m].clone();
            for (k, s) in s1_row.iter().enumerate().take(n).skip(m + 1) {
                acc.add_assign(&s.mul(&self.lower_of(k, m)));
            }
            s1_row[m] = acc.neg();
        }

        // column n of U^{-1}, where U = S2^{-T}
        let mut w = vec![Matrix::zeros(p, p); n + 1];
        w[n] = Matrix::identity(p);
        for m in (0..n).rev() {
            let mut acc = upper[m].clone();
            for (k, wk) in w.iter().enumerate().take(n).skip(m + 1) {
                acc.add_assign(&self.upper_block(m, k).mul(wk));
            }
            w[m] = acc.neg();
        }

        self.lower_h.push(lower_h);
        self.upper.push(upper);
        self.upper_inv.push(w);
        self.s1.push(s1_row);
        self.h.push(h);
        self.h_inv.push(h_inv);
        Ok(())
    }

    fn lower_of(&self, n: usize, m: usize) -> Block<T> {
        self.lower_h[n][m].mul(&self.h_inv[m])
    }

    /// `(S1^{-1})_{n,m}`.
    pub fn lower_block(&self, n: usize, m: usize) -> Block<T> {
        match m.cmp(&n) {
            std::cmp::Ordering::Less => self.lower_of(n, m),
            std::cmp::Ordering::Equal => Matrix::identity(self.p),
            std::cmp::Ordering::Greater => Matrix::zeros(self.p, self.p),
        }
    }

    /// `(S2^{-T})_{m,n}`.
    pub fn upper_block(&self, m: usize, n: usize) -> Block<T> {
        match m.cmp(&n) {
            std::cmp::Ordering::Less => self.upper[n][m].clone(),
            std::cmp::Ordering::Equal => Matrix::identity(self.p),
            std::cmp::Ordering::Greater => Matrix::zeros(self.p, self.p),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of factorized degrees (`n_max + 1`).
    pub fn degrees(&self) -> usize {
        self.h.len()
    }

    /// Highest factorized degree; `None` before the first pivot.
    pub fn n_max(&self) -> Option<usize> {
        self.h.len().checked_sub(1)
    }

    pub fn source(&self) -> &Arc<dyn MomentSource<T>> {
        &self.source
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n < self.h.len() {
            Ok(())
        } else {
            Err(Error::DegreeOutOfRange {
                degree: n,
                n_max: self.h.len().saturating_sub(1),
            })
        }
    }

    pub fn h(&self, n: usize) -> Result<&Block<T>> {
        self.check_degree(n)?;
        Ok(&self.h[n])
    }

    pub fn h_inv(&self, n: usize) -> Result<&Block<T>> {
        self.check_degree(n)?;
        Ok(&self.h_inv[n])
    }

    pub fn hs(&self) -> &[Block<T>] {
        &self.h
    }

    /// `(S1)_{n,k}`.
    pub fn s1(&self, n: usize, k: usize) -> Block<T> {
        if k <= n && n < self.s1.len() {
            self.s1[n][k].clone()
        } else {
            Matrix::zeros(self.p, self.p)
        }
    }

    /// `(S2)_{n,k}`.
    pub fn s2(&self, n: usize, k: usize) -> Block<T> {
        if k <= n && n < self.upper_inv.len() {
            self.upper_inv[n][k].transpose()
        } else {
            Matrix::zeros(self.p, self.p)
        }
    }

    /// `P^{[1]}_n(x) = Σ_k (S1)_{n,k} x^k`.
    pub fn polynomial1(&self, n: usize) -> Result<MatPoly<T>> {
        self.check_degree(n)?;
        Ok(MatPoly::from_coeffs(self.p, self.s1[n].clone()))
    }

    /// `P^{[2]}_n(x) = Σ_k (S2)_{n,k} x^k`.
    pub fn polynomial2(&self, n: usize) -> Result<MatPoly<T>> {
        self.check_degree(n)?;
        Ok(MatPoly::from_coeffs(
            self.p,
            self.upper_inv[n].iter().map(Matrix::transpose).collect(),
        ))
    }

    /// `S1^{-1} H S2^{-T}` on the factorized truncation.
    pub fn reconstruct_gram(&self) -> Vec<Vec<Block<T>>> {
        let size = self.h.len();
        (0..size)
            .map(|k| {
                (0..size)
                    .map(|l| {
                        let mut acc = Matrix::zeros(self.p, self.p);
                        for j in 0..=k.min(l) {
                            let term = self.lower_block(k, j).mul(&self.h[j]).mul(&self.upper_block(j, l));
                            acc.add_assign(&term);
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }
}

/// `⟨P, Q⟩ = Σ_{k,l} p_k G_{k,l} q_l^T`.
pub fn pair<T: Scalar>(source: &dyn MomentSource<T>, p_poly: &MatPoly<T>, q_poly: &MatPoly<T>) -> Result<Block<T>> {
    let p = source.p();
    let mut acc = Matrix::zeros(p, p);
    for (k, pk) in p_poly.coeffs().iter().enumerate() {
        if pk.is_zero() {
            continue;
        }
        for (l, ql) in q_poly.coeffs().iter().enumerate() {
            if ql.is_zero() {
                continue;
            }
            acc.add_assign(&pk.mul(&source.moment(k, l)?).mul(&ql.transpose()));
        }
    }
    Ok(acc)
}

/// The truncation `G_{[size]}` as a dense `size·p × size·p` matrix.
pub fn gram_matrix<T: Scalar>(source: &dyn MomentSource<T>, size: usize) -> Result<Matrix<T>> {
    let p = source.p();
    let mut out = Matrix::zeros(size * p, size * p);
    for k in 0..size {
        for l in 0..size {
            out.set_block(k, l, &source.moment(k, l)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `⟨P1_n, P2_m⟩ = δ_{nm} H_n`.
    Biorthogonal,
    /// `⟨P1_n, y^m I⟩ = 0` for `m < n`, `H_n` for `m = n`.
    FirstFamily,
    /// `⟨x^m I, P2_n⟩ = 0` for `m < n`, `H_n` for `m = n`.
    SecondFamily,
}

#[derive(Debug, Clone)]
pub struct CheckCell {
    pub relation: Relation,
    pub n: usize,
    pub m: usize,
    pub passed: bool,
    /// Max-norm of the residual.
    pub residual: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BiorthogonalityReport {
    pub cells: Vec<CheckCell>,
}

impl BiorthogonalityReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckCell> {
        self.cells.iter().filter(|c| !c.passed)
    }
}

/// Checks biorthogonality and both orthogonality relations for every
/// factorized pair of degrees.
pub fn verify_biorthogonality<T: Scalar>(f: &Factorization<T>) -> Result<BiorthogonalityReport> {
    let size = f.degrees();
    let p = f.p();
    let src = f.source().as_ref();
    let tol = f.tolerances();
    let gram: Vec<Vec<Block<T>>> = (0..size)
        .map(|k| (0..size).map(|l| src.moment(k, l)).collect::<std::result::Result<_, _>>())
        .collect::<std::result::Result<_, _>>()?;
    let s1: Vec<Vec<Block<T>>> = (0..size).map(|n| (0..=n).map(|k| f.s1(n, k)).collect()).collect();
    let s2t: Vec<Vec<Block<T>>> = (0..size)
        .map(|n| (0..=n).map(|k| f.s2(n, k).transpose()).collect())
        .collect();

    // rows[n][l] = ⟨P1_n, y^l I⟩, with a magnitude bound for float checks
    let mut rows = Vec::with_capacity(size);
    let mut row_scale = Vec::with_capacity(size);
    for n in 0..size {
        let mut r = Vec::with_capacity(size);
        let mut sc = Vec::with_capacity(size);
        for l in 0..size {
            let mut acc = Matrix::zeros(p, p);
            let mut bound = 0.0;
            for k in 0..=n {
                acc.add_assign(&s1[n][k].mul(&gram[k][l]));
                bound += s1[n][k].max_magnitude() * gram[k][l].max_magnitude() * p as f64;
            }
            r.push(acc);
            sc.push(bound);
        }
        rows.push(r);
        row_scale.push(sc);
    }

    let zero = Matrix::zeros(p, p);
    let mut cells = Vec::new();
    let mut push = |relation, n, m, got: &Matrix<T>, expected: &Matrix<T>, scale: f64| {
        cells.push(CheckCell {
            relation,
            n,
            m,
            passed: tol.close(got, expected, scale),
            residual: got.sub(expected).max_magnitude(),
        });
    };

    for n in 0..size {
        for m in 0..size {
            let mut acc = Matrix::zeros(p, p);
            let mut bound = 0.0;
            for l in 0..=m {
                acc.add_assign(&rows[n][l].mul(&s2t[m][l]));
                bound += row_scale[n][l] * s2t[m][l].max_magnitude() * p as f64;
            }
            let expected = if n == m { f.h[n].clone() } else { zero.clone() };
            push(Relation::Biorthogonal, n, m, &acc, &expected, bound);
        }
        for m in 0..=n {
            let expected = if m == n { &f.h[n] } else { &zero };
            push(Relation::FirstFamily, n, m, &rows[n][m], expected, row_scale[n][m]);

            let mut acc = Matrix::zeros(p, p);
            let mut bound = 0.0;
            for l in 0..=n {
                acc.add_assign(&gram[m][l].mul(&s2t[n][l]));
                bound += gram[m][l].max_magnitude() * s2t[n][l].max_magnitude() * p as f64;
            }
            push(Relation::SecondFamily, n, m, &acc, expected, bound);
        }
    }
    Ok(BiorthogonalityReport { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{hankel_source, lebesgue_moments, GramTable, HankelSource};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn s1(v: Rational) -> Block<Rational> {
        Matrix::scalar(1, v)
    }

    fn legendre(count: usize) -> Arc<dyn MomentSource<Rational>> {
        let src: HankelSource<Rational> =
            hankel_source(lebesgue_moments(&q(-1, 1), &q(1, 1), &s1(q(1, 1)), count)).unwrap();
        Arc::new(src)
    }

    #[test]
    fn legendre_pivots() {
        let f = factorize(legendre(8), 2, Tolerances::default()).unwrap();
        assert_eq!(f.hs(), &[s1(q(2, 1)), s1(q(2, 3)), s1(q(8, 45))]);
        assert_eq!(
            f.polynomial1(2).unwrap(),
            MatPoly::from_scalars(1, &[q(-1, 3), q(0, 1), q(1, 1)])
        );
        assert_eq!(f.polynomial1(0).unwrap(), MatPoly::identity(1));
        assert_eq!(f.polynomial1(3), Err(Error::DegreeOutOfRange { degree: 3, n_max: 2 }));
    }

    #[test]
    fn identity_gram_is_already_factored() {
        let f = factorize(Arc::new(GramTable::<Rational>::identity(2, 4)), 3, Tolerances::default()).unwrap();
        for n in 0..4 {
            assert_eq!(f.h(n).unwrap(), &Matrix::identity(2));
            assert_eq!(f.polynomial1(n).unwrap(), MatPoly::monomial(Matrix::identity(2), n));
            assert_eq!(f.polynomial2(n).unwrap(), MatPoly::monomial(Matrix::identity(2), n));
        }
        assert!(verify_biorthogonality(&f).unwrap().passed());
    }

    #[test]
    fn zero_first_moment_breaks_down_immediately() {
        let src = hankel_source(vec![Matrix::<Rational>::zeros(2, 2), Matrix::identity(2), Matrix::identity(2)])
            .unwrap();
        let err = factorize(Arc::new(src), 1, Tolerances::default()).unwrap_err();
        assert_eq!(err, Error::Breakdown { degree: 0 });
    }

    #[test]
    fn breakdown_keeps_earlier_degrees() {
        // m = (1, 1, 1): H_1 = 1 - 1 = 0
        let src = hankel_source(vec![s1(q(1, 1)); 3]).unwrap();
        let mut f = Factorization::empty(Arc::new(src), Tolerances::default());
        assert_eq!(f.extend_to(1), Err(Error::Breakdown { degree: 1 }));
        assert_eq!(f.degrees(), 1);
        assert_eq!(f.h(0).unwrap(), &s1(q(1, 1)));
    }

    #[test]
    fn pair_examples() {
        let src = legendre(8);
        let one = MatPoly::identity(1);
        assert_eq!(pair(src.as_ref(), &one, &one).unwrap(), s1(q(2, 1)));
        let x = MatPoly::from_scalars(1, &[q(0, 1), q(1, 1)]);
        assert_eq!(pair(src.as_ref(), &x, &x).unwrap(), s1(q(2, 3)));
        let p2 = MatPoly::from_scalars(1, &[q(-1, 3), q(0, 1), q(1, 1)]);
        assert_eq!(pair(src.as_ref(), &p2, &p2).unwrap(), s1(q(8, 45)));
    }

    #[test]
    fn legendre_biorthogonality_is_exact() {
        let f = factorize(legendre(10), 3, Tolerances::default()).unwrap();
        let report = verify_biorthogonality(&f).unwrap();
        assert!(report.passed());
        assert_eq!(report.cells.len(), 16 + 2 * 10);
    }

    #[test]
    fn corrupted_s1_entry_is_detected() {
        let mut f = factorize(legendre(10), 3, Tolerances::default()).unwrap();
        f.s1[2][1] = s1(q(1, 7));
        let report = verify_biorthogonality(&f).unwrap();
        assert!(!report.passed());
        assert!(report
            .failures()
            .any(|c| c.relation == Relation::Biorthogonal && c.n == 2 && c.m == 1));
        assert!(report.failures().all(|c| c.n == 2 || c.relation == Relation::SecondFamily));
    }

    #[test]
    fn nonsymmetric_two_by_two() {
        let a = Matrix::from_rows(vec![vec![q(2, 1), q(1, 1)], vec![q(0, 1), q(3, 1)]]);
        let b = Matrix::from_rows(vec![vec![q(1, 1), q(-1, 2)], vec![q(1, 3), q(1, 1)]]);
        let moments: Vec<_> = (0..8)
            .map(|r| a.scale(&q(1, r + 1)).add(&b.scale(&Scalar::pow(&q(-1, 1), r as usize))))
            .collect();
        let f = factorize(Arc::new(hankel_source(moments).unwrap()), 3, Tolerances::default()).unwrap();
        assert!(verify_biorthogonality(&f).unwrap().passed());
        let rebuilt = f.reconstruct_gram();
        for (k, row) in rebuilt.iter().enumerate() {
            for (l, block) in row.iter().enumerate() {
                assert_eq!(block, &f.source().moment(k, l).unwrap());
            }
        }
    }

    #[test]
    fn float_mode_matches_exact() {
        let src = hankel_source(lebesgue_moments(&-1.0, &1.0, &Matrix::scalar(1, 1.0), 12)).unwrap();
        let f = factorize(Arc::new(src), 4, Tolerances::default()).unwrap();
        assert!((f.h(2).unwrap()[(0, 0)] - 8.0 / 45.0).abs() < 1e-14);
        assert!(verify_biorthogonality(&f).unwrap().passed());
    }
}
