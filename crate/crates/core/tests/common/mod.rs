//! Shared fixtures: seeded problem generators and a dense-elimination
//! oracle that never touches the library's factorization.

#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use uvarov::linalg::{Block, Matrix};
use uvarov::matpoly::{MatPoly, Support};
use uvarov::moments::{
    diagonal_spec_expand, discrete_measure_source, discrete_spec_expand, functional_from_point_masses,
    hankel_source, lebesgue_moments, MomentSource, PointMass, UvarovSpec,
};
use uvarov::Scalar;

pub type Source<T> = Arc<dyn MomentSource<T>>;

pub fn q<T: Scalar>(n: i64, d: i64) -> T {
    T::from_ratio(n, d)
}

pub fn small<T: Scalar, R: Rng>(rng: &mut R, bound: i64) -> T {
    let den = *[1i64, 2, 4].choose(rng).unwrap();
    q(rng.gen_range(-bound..=bound), den)
}

pub fn random_block<T: Scalar, R: Rng>(rng: &mut R, p: usize, bound: i64) -> Block<T> {
    Matrix::from_fn(p, p, |_, _| small(rng, bound))
}

/// `I + A A^T / 4`, symmetric positive definite.
pub fn random_spd<T: Scalar, R: Rng>(rng: &mut R, p: usize) -> Block<T> {
    let a = random_block::<T, R>(rng, p, 2);
    Matrix::identity(p).add(&a.mul(&a.transpose()).scale(&q(1, 4)))
}

pub fn lebesgue<T: Scalar>(weight: Block<T>, n_max: usize) -> Source<T> {
    Arc::new(hankel_source(lebesgue_moments(&q(-1, 1), &q(1, 1), &weight, 2 * n_max + 2)).unwrap())
}

/// Positive definite weights at `count` distinct points of `[-1, 1]`;
/// quasidefinite through degree `count − 1`.
pub fn discrete<T: Scalar, R: Rng>(rng: &mut R, p: usize, count: usize) -> Source<T> {
    let mut nums: Vec<i64> = (-8..=8).collect();
    nums.shuffle(rng);
    let points = nums[..count].iter().map(|&n| q(n, 8)).collect();
    let weights = (0..count).map(|_| random_spd(rng, p)).collect();
    Arc::new(discrete_measure_source(p, points, weights).unwrap())
}

/// Random Hankel table with a dominant identity at `m_0`; generically
/// quasidefinite but not checked here.
pub fn random_hankel<T: Scalar, R: Rng>(rng: &mut R, p: usize, n_max: usize) -> Source<T> {
    let moments = (0..=2 * n_max + 2)
        .map(|k| {
            let b = random_block::<T, R>(rng, p, 3);
            if k == 0 {
                b.add(&Matrix::identity(p).scale(&q(5, 1)))
            } else {
                b
            }
        })
        .collect();
    Arc::new(hankel_source(moments).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    General,
    Diagonal,
    DiscreteX,
}

fn distinct_points<T: Scalar, R: Rng>(rng: &mut R, count: usize) -> Vec<T> {
    let mut nums: Vec<i64> = (-6..=6).collect();
    nums.shuffle(rng);
    nums[..count].iter().map(|&n| q(n, 4)).collect()
}

fn random_mults<R: Rng>(rng: &mut R, count: usize, max_kappa: usize) -> Vec<usize> {
    (0..count).map(|_| rng.gen_range(1..=max_kappa)).collect()
}

/// Random perturbation with `q ≤ 2` support points and `κ ≤ max_kappa`.
pub fn random_spec<T: Scalar, R: Rng>(
    rng: &mut R,
    kind: SpecKind,
    p: usize,
    max_kappa: usize,
    degree_bound: usize,
) -> UvarovSpec<T> {
    let count = rng.gen_range(1..=2);
    let points = distinct_points::<T, R>(rng, count);
    let mults = random_mults(rng, count, max_kappa);
    match kind {
        SpecKind::General => {
            // each β^{(j)}_m is a short sum of Dirac derivatives at random points
            let support = Support::new(points, mults.clone()).unwrap();
            let betas = mults
                .iter()
                .map(|&kappa| {
                    (0..kappa)
                        .map(|_| {
                            let terms: Vec<_> = (0..rng.gen_range(1..=2))
                                .map(|_| PointMass {
                                    point: small(rng, 4),
                                    order: rng.gen_range(0..=2),
                                    block: random_block(rng, p, 3),
                                })
                                .collect();
                            functional_from_point_masses(p, &terms, degree_bound).unwrap()
                        })
                        .collect()
                })
                .collect();
            UvarovSpec::general(p, support, betas).unwrap()
        }
        SpecKind::Diagonal => {
            let raw = mults
                .iter()
                .map(|&kappa| (0..kappa).map(|_| random_block(rng, p, 3)).collect())
                .collect();
            diagonal_spec_expand(p, points, mults, raw, degree_bound).unwrap()
        }
        SpecKind::DiscreteX => {
            let sy = Support::new(points, mults).unwrap();
            let x_count = rng.gen_range(1..=2);
            let sx = Support::new(distinct_points(rng, x_count), random_mults(rng, x_count, max_kappa)).unwrap();
            let couplings = Matrix::from_fn(sx.total() * p, sy.total() * p, |_, _| small(rng, 3));
            discrete_spec_expand(p, sx, sy, couplings, degree_bound).unwrap()
        }
    }
}

/// `G_{[size]}` assembled from a source.
pub fn dense_gram<T: Scalar>(src: &dyn MomentSource<T>, size: usize) -> Vec<Vec<T>> {
    let p = src.p();
    let mut g = vec![vec![T::zero(); size * p]; size * p];
    for k in 0..size {
        for l in 0..size {
            let b = src.moment(k, l).unwrap();
            for i in 0..p {
                for j in 0..p {
                    g[k * p + i][l * p + j] = b[(i, j)].clone();
                }
            }
        }
    }
    g
}

/// Solves `A X = B` by Gaussian elimination with largest-magnitude pivots;
/// `None` when a pivot is exactly zero (exact) or tiny (float).
pub fn dense_solve<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<T>> = a.iter().zip(b).map(|(ra, rb)| ra.iter().chain(rb).cloned().collect()).collect();
    let scale = a.iter().flatten().map(Scalar::magnitude).fold(0.0, f64::max);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| aug[i][col].magnitude().total_cmp(&aug[j][col].magnitude()))?;
        let mag = aug[pivot][col].magnitude();
        if aug[pivot][col].is_zero() || (!T::EXACT && mag <= 1e-13 * scale) {
            return None;
        }
        aug.swap(col, pivot);
        let inv = T::one() / aug[col][col].clone();
        for v in aug[col].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for row in 0..n {
            if row != col && !aug[row][col].is_zero() {
                let factor = aug[row][col].clone();
                for k in 0..n + m {
                    let delta = factor.clone() * aug[col][k].clone();
                    aug[row][k] = aug[row][k].clone() - delta;
                }
            }
        }
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn dense_det<T: Scalar>(a: &[Vec<T>]) -> T {
    let n = a.len();
    let mut a = a.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&i| !a[i][col].is_zero()) else {
            return T::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det = det * a[col][col].clone();
        for row in col + 1..n {
            let factor = a[row][col].clone() / a[col][col].clone();
            for k in col..n {
                let delta = factor.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - delta;
            }
        }
    }
    det
}

/// Degree-`n` monic biorthogonal pair and pivot straight from the linear
/// conditions `⟨P1_n, y^m⟩ = 0 = ⟨x^m, P2_n⟩` for `m < n`.
pub struct DenseDegree<T> {
    pub p1: MatPoly<T>,
    pub p2: MatPoly<T>,
    pub h: Block<T>,
}

pub fn dense_biorthogonal<T: Scalar>(src: &dyn MomentSource<T>, n: usize) -> Option<DenseDegree<T>> {
    let p = src.p();
    let g = dense_gram(src, n + 1);
    let np = n * p;
    let block_of = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| -> Vec<Vec<T>> {
        rows.map(|i| g[i][cols.clone()].to_vec()).collect()
    };
    let (a1, a2) = if n == 0 {
        (Vec::new(), Vec::new())
    } else {
        let gn = block_of(0..np, 0..np);
        let gt: Vec<Vec<T>> = (0..np).map(|i| (0..np).map(|j| gn[j][i].clone()).collect()).collect();
        // a G_{[n]} = −row  ⇔  G^T a^T = −row^T
        let row_t: Vec<Vec<T>> = (0..np).map(|i| (0..p).map(|r| -g[np + r][i].clone()).collect()).collect();
        let col: Vec<Vec<T>> = (0..np).map(|i| (0..p).map(|c| -g[i][np + c].clone()).collect()).collect();
        (dense_solve(&gt, &row_t)?, dense_solve(&gn, &col)?)
    };
    let mut c1 = Vec::with_capacity(n + 1);
    let mut c2 = Vec::with_capacity(n + 1);
    for k in 0..n {
        // a1 is np × p holding a^T; block k of a is (rows k·p.., cols) transposed
        c1.push(Matrix::from_fn(p, p, |i, j| a1[k * p + j][i].clone()));
        // q_k^T is block k of a2, so q_k is its transpose
        c2.push(Matrix::from_fn(p, p, |i, j| a2[k * p + j][i].clone()));
    }
    c1.push(Matrix::identity(p));
    c2.push(Matrix::identity(p));
    let p1 = MatPoly::from_coeffs(p, c1);
    let p2 = MatPoly::from_coeffs(p, c2);
    let h = uvarov::gaussborel::pair(src, &p1, &p2).ok()?;
    Some(DenseDegree { p1, p2, h })
}
