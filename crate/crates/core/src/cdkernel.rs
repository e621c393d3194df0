//! Christoffel–Darboux kernels `K_n(x,y) = Σ_{k≤n} P2_k(y)^T H_k^{-1} P1_k(x)`.

use rand::Rng;

use crate::error::Result;
use crate::gaussborel::Factorization;
use crate::linalg::{Block, Matrix};
use crate::matpoly::{MatKernel, MatPoly};
use crate::scalar::Scalar;

/// The `k`-th summand `P2_k(y)^T H_k^{-1} P1_k(x)`.
pub fn cd_term<T: Scalar>(f: &Factorization<T>, k: usize) -> Result<MatKernel<T>> {
    Ok(MatKernel::outer(&f.polynomial2(k)?, f.h_inv(k)?, &f.polynomial1(k)?))
}

/// `K_n` as an explicit coefficient grid.
pub fn cd_kernel<T: Scalar>(f: &Factorization<T>, n: usize) -> Result<MatKernel<T>> {
    let mut kernel = MatKernel::zero(f.p());
    for k in 0..=n {
        kernel = kernel.add(&cd_term(f, k)?);
    }
    Ok(kernel)
}

/// `K_{n-1}`, the empty sum for `n = 0`.
pub fn cd_kernel_before<T: Scalar>(f: &Factorization<T>, n: usize) -> Result<MatKernel<T>> {
    match n.checked_sub(1) {
        Some(prev) => cd_kernel(f, prev),
        None => Ok(MatKernel::zero(f.p())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproducingCheck {
    /// `⟨K_n(x,z), I y^l⟩ = I z^l`.
    Monomial { l: usize },
    /// `⟨K_n(x,z), Σ_j C_j P2_j(y)⟩ = (Σ_{j≤n} C_j P2_j(z))^T`.
    SecondFamilyCombination { trial: usize },
    /// `⟨Σ_j C_j P1_j(x), K_n(z,y)^T⟩ = Σ_{j≤n} C_j P1_j(z)`.
    FirstFamilyCombination { trial: usize },
}

#[derive(Debug, Clone)]
pub struct ReproducingCell {
    pub n: usize,
    pub check: ReproducingCheck,
    pub passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ReproducingReport {
    pub cells: Vec<ReproducingCell>,
}

impl ReproducingReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.passed)
    }
}

/// `⟨K(x,z), Q(y)⟩_u` as a polynomial in `z`: coefficient `b` is
/// `Σ_{a,l} c_{a,b} G_{a,l} q_l^T`.
fn pair_kernel_left<T: Scalar>(
    f: &Factorization<T>,
    kernel: &MatKernel<T>,
    q_poly: &MatPoly<T>,
) -> Result<(MatPoly<T>, f64)> {
    let p = f.p();
    let src = f.source();
    // Σ_l G_{a,l} q_l^T for each a
    let mut gq = Vec::with_capacity(kernel.x_len());
    let mut scale = 0.0f64;
    for a in 0..kernel.x_len() {
        let mut acc = Matrix::zeros(p, p);
        for (l, ql) in q_poly.coeffs().iter().enumerate() {
            let g = src.moment(a, l)?;
            scale = scale.max(g.max_magnitude() * ql.max_magnitude());
            acc.add_assign(&g.mul(&ql.transpose()));
        }
        gq.push(acc);
    }
    let coeffs = (0..kernel.y_len())
        .map(|b| {
            let mut acc = Matrix::zeros(p, p);
            for (a, v) in gq.iter().enumerate() {
                acc.add_assign(&kernel.coeff(a, b).mul(v));
            }
            acc
        })
        .collect();
    Ok((MatPoly::from_coeffs(p, coeffs), scale))
}

/// `⟨P(x), K(z,y)^T⟩_u` as a polynomial in `z`: coefficient `a` is
/// `Σ_{k,b} p_k G_{k,b} c_{a,b}`.
fn pair_kernel_right<T: Scalar>(
    f: &Factorization<T>,
    p_poly: &MatPoly<T>,
    kernel: &MatKernel<T>,
) -> Result<(MatPoly<T>, f64)> {
    let p = f.p();
    let src = f.source();
    let mut pg = Vec::with_capacity(kernel.y_len());
    let mut scale = 0.0f64;
    for b in 0..kernel.y_len() {
        let mut acc = Matrix::zeros(p, p);
        for (k, pk) in p_poly.coeffs().iter().enumerate() {
            let g = src.moment(k, b)?;
            scale = scale.max(g.max_magnitude() * pk.max_magnitude());
            acc.add_assign(&pk.mul(&g));
        }
        pg.push(acc);
    }
    let coeffs = (0..kernel.x_len())
        .map(|a| {
            let mut acc = Matrix::zeros(p, p);
            for (b, v) in pg.iter().enumerate() {
                acc.add_assign(&v.mul(&kernel.coeff(a, b)));
            }
            acc
        })
        .collect();
    Ok((MatPoly::from_coeffs(p, coeffs), scale))
}

fn poly_close<T: Scalar>(f: &Factorization<T>, a: &MatPoly<T>, b: &MatPoly<T>, scale: f64) -> bool {
    let len = a.coeffs().len().max(b.coeffs().len());
    let tol = f.tolerances();
    (0..len).all(|k| tol.close(&a.coeff(k), &b.coeff(k), scale))
}

fn random_block<T: Scalar, R: Rng>(p: usize, rng: &mut R) -> Block<T> {
    Matrix::from_fn(p, p, |_, _| T::from_ratio(rng.gen_range(-6..=6), rng.gen_range(1..=4)))
}

/// Checks the reproducing property of `K_n` on monomials `y^l`, `l ≤ n`, and
/// the projection identities on `trials` random block combinations of every
/// factorized polynomial (including degrees above `n`, which must vanish).
pub fn verify_reproducing<T: Scalar, R: Rng>(
    f: &Factorization<T>,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ReproducingReport> {
    let p = f.p();
    let kernel = cd_kernel(f, n)?;
    let mut cells = Vec::new();
    for l in 0..=n {
        let (got, scale) = pair_kernel_left(f, &kernel, &MatPoly::monomial(Matrix::identity(p), l))?;
        let expected = MatPoly::monomial(Matrix::identity(p), l);
        cells.push(ReproducingCell {
            n,
            check: ReproducingCheck::Monomial { l },
            passed: poly_close(f, &got, &expected, scale),
        });
    }

    let top = f.degrees();
    for trial in 0..trials {
        let cs: Vec<Block<T>> = (0..top).map(|_| random_block(p, rng)).collect();

        let mut combo2 = MatPoly::zero(p);
        let mut projected2 = MatPoly::zero(p);
        let mut combo1 = MatPoly::zero(p);
        let mut projected1 = MatPoly::zero(p);
        for (j, c) in cs.iter().enumerate() {
            let t2 = f.polynomial2(j)?.left_mul(c);
            let t1 = f.polynomial1(j)?.left_mul(c);
            combo2 = combo2.add(&t2);
            combo1 = combo1.add(&t1);
            if j <= n {
                projected2 = projected2.add(&t2);
                projected1 = projected1.add(&t1);
            }
        }

        let (got, scale) = pair_kernel_left(f, &kernel, &combo2)?;
        cells.push(ReproducingCell {
            n,
            check: ReproducingCheck::SecondFamilyCombination { trial },
            passed: poly_close(f, &got, &projected2.transpose(), scale),
        });

        let (got, scale) = pair_kernel_right(f, &combo1, &kernel)?;
        cells.push(ReproducingCell {
            n,
            check: ReproducingCheck::FirstFamilyCombination { trial },
            passed: poly_close(f, &got, &projected1, scale),
        });
    }
    Ok(ReproducingReport { cells })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::gaussborel::{factorize, Tolerances};
    use crate::moments::{hankel_source, lebesgue_moments, GramTable, MomentSource};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn s1(v: Rational) -> Block<Rational> {
        Matrix::scalar(1, v)
    }

    fn legendre(n_max: usize) -> Factorization<Rational> {
        let src: Arc<dyn MomentSource<Rational>> = Arc::new(
            hankel_source(lebesgue_moments(&q(-1, 1), &q(1, 1), &s1(q(1, 1)), 2 * n_max + 2)).unwrap(),
        );
        factorize(src, n_max, Tolerances::default()).unwrap()
    }

    #[test]
    fn legendre_kernels() {
        let f = legendre(3);
        assert!(cd_kernel(&f, 0).unwrap().coeff_eq(&MatKernel::monomial(s1(q(1, 2)), 0, 0)));
        let k1 = MatKernel::monomial(s1(q(1, 2)), 0, 0).add(&MatKernel::monomial(s1(q(3, 2)), 1, 1));
        assert!(cd_kernel(&f, 1).unwrap().coeff_eq(&k1));
        assert!(cd_kernel_before(&f, 0).unwrap().coeff_eq(&MatKernel::zero(1)));
    }

    #[test]
    fn identity_gram_kernel() {
        let f = factorize(Arc::new(GramTable::<Rational>::identity(2, 4)), 3, Tolerances::default()).unwrap();
        let mut expected = MatKernel::zero(2);
        for k in 0..=2 {
            expected = expected.add(&MatKernel::monomial(Matrix::identity(2), k, k));
        }
        assert!(cd_kernel(&f, 2).unwrap().coeff_eq(&expected));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(verify_reproducing(&f, 2, 3, &mut rng).unwrap().passed());
    }

    #[test]
    fn reproducing_on_legendre() {
        let f = legendre(4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 0..=4 {
            let report = verify_reproducing(&f, n, 4, &mut rng).unwrap();
            assert!(report.passed(), "n = {n}: {report:?}");
        }
        // ⟨K_1(x,z), 1⟩ = 1
        let k1 = cd_kernel(&f, 1).unwrap();
        let (got, _) = pair_kernel_left(&f, &k1, &MatPoly::identity(1)).unwrap();
        assert_eq!(got, MatPoly::identity(1));
    }

    #[test]
    fn recursion_and_symmetry() {
        let f = legendre(4);
        for n in 1..=4 {
            let diff = cd_kernel(&f, n).unwrap().sub(&cd_kernel(&f, n - 1).unwrap());
            assert!(diff.coeff_eq(&cd_term(&f, n).unwrap()));
            let k = cd_kernel(&f, n).unwrap();
            assert!(k.coeff_eq(&k.swap_transpose()));
        }
    }
}
