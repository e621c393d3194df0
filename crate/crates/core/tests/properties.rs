mod common;

use std::sync::Arc;

use common::*;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uvarov::cdkernel::cd_kernel;
use uvarov::gaussborel::{factorize, Factorization, Tolerances};
use uvarov::matpoly::{jet_row, kernel_double_jet, kernel_mixed_jet, MatKernel, MatPoly, Support};
use uvarov::uvarov::{coupling_matrix, oracle_transform, theta_star, transform, transform_structured};
use uvarov::{Error, Matrix, Rational, Scalar};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_poly(r: &mut ChaCha8Rng, p: usize, degree: usize) -> MatPoly<Rational> {
    MatPoly::from_coeffs(p, (0..=degree).map(|_| random_block(r, p, 4)).collect())
}

fn quasidefinite(src: Source<Rational>, n_max: usize) -> Option<Factorization<Rational>> {
    factorize(src, n_max, Tolerances::default()).ok()
}

fn random_base(r: &mut ChaCha8Rng, p: usize, n_max: usize) -> Source<Rational> {
    match rand::Rng::gen_range(r, 0..3) {
        0 => lebesgue(random_spd(r, p), n_max),
        1 => discrete(r, p, n_max + 2),
        _ => random_hankel(r, p, n_max),
    }
}

fn kind_of(i: u8) -> SpecKind {
    [SpecKind::General, SpecKind::Diagonal, SpecKind::DiscreteX][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derivatives_compose(seed in any::<u64>(), p in 1usize..=2, deg in 0usize..6, a in 0usize..4, b in 0usize..4) {
        let mut r = rng(seed);
        let poly = random_poly(&mut r, p, deg);
        prop_assert_eq!(poly.derivative(a).derivative(b), poly.derivative(a + b));
        // Taylor coefficients are derivatives over factorials at the point
        let x0: Rational = small(&mut r, 4);
        let fact: Rational = (1..=a as i64).map(Rational::from_i64).fold(Rational::from_i64(1), |acc, v| acc * v);
        prop_assert_eq!(poly.taylor_coeff(&x0, a), poly.derivative(a).eval(&x0).scale(&(Rational::from_i64(1) / fact)));
    }

    #[test]
    fn jets_are_linear(seed in any::<u64>(), p in 1usize..=2) {
        let mut r = rng(seed);
        let s = Support::new(vec![q(1, 2), q(-1, 1)], vec![2, 3]).unwrap();
        let a = random_poly(&mut r, p, 4);
        let b = random_poly(&mut r, p, 3);
        let c = random_block(&mut r, p, 3);
        let combo = a.add(&b.left_mul(&c));
        let expected = jet_row(&a, &s).add(&c.mul(&jet_row(&b, &s)));
        prop_assert_eq!(jet_row(&combo, &s), expected);
    }

    #[test]
    fn mixed_jet_on_one_support_is_double_jet(seed in any::<u64>(), p in 1usize..=2) {
        let mut r = rng(seed);
        let src = lebesgue(random_spd(&mut r, p), 4);
        let f = quasidefinite(src, 3).unwrap();
        let k = cd_kernel(&f, 3).unwrap();
        let s = Support::new(vec![q(0, 1), q(3, 4)], vec![2, 1]).unwrap();
        prop_assert_eq!(kernel_mixed_jet(&k, &s, &s), kernel_double_jet(&k, &s));
    }

    #[test]
    fn perturbation_pairing_matches_gram_entries(seed in any::<u64>(), p in 1usize..=2, kind in 0u8..3) {
        let mut r = rng(seed);
        let spec = random_spec::<Rational, _>(&mut r, kind_of(kind), p, 3, 10);
        for k in 0..4 {
            for l in 0..4 {
                let xk = MatPoly::monomial(Matrix::identity(p), k);
                let yl = MatPoly::monomial(Matrix::identity(p), l);
                prop_assert_eq!(spec.pairing(&xk, &yl).unwrap(), spec.gram_entry(k, l).unwrap());
            }
        }
        // bi-additivity with left and right block factors
        let a = random_poly(&mut r, p, 3);
        let b = random_poly(&mut r, p, 2);
        let c = random_poly(&mut r, p, 3);
        let m = random_block(&mut r, p, 3);
        let lhs = spec.pairing(&a.left_mul(&m).add(&b), &c).unwrap();
        let rhs = m.mul(&spec.pairing(&a, &c).unwrap()).add(&spec.pairing(&b, &c).unwrap());
        prop_assert_eq!(lhs, rhs);
        let lhs = spec.pairing(&a, &c.left_mul(&m)).unwrap();
        prop_assert_eq!(lhs, spec.pairing(&a, &c).unwrap().mul(&m.transpose()));
    }

    #[test]
    fn factorization_matches_dense_oracle(seed in any::<u64>(), p in 1usize..=3) {
        let mut r = rng(seed);
        let n_max = 5;
        let src = random_base(&mut r, p, n_max);
        let Some(f) = quasidefinite(src.clone(), n_max) else { return Ok(()); };
        let mut det_product = Rational::from_i64(1);
        for n in 0..=n_max {
            let dense = dense_biorthogonal(src.as_ref(), n).unwrap();
            prop_assert_eq!(&f.polynomial1(n).unwrap(), &dense.p1);
            prop_assert_eq!(&f.polynomial2(n).unwrap(), &dense.p2);
            prop_assert_eq!(f.h(n).unwrap(), &dense.h);
            det_product = det_product * f.h(n).unwrap().det();
            prop_assert_eq!(dense_det(&dense_gram(src.as_ref(), n + 1)), det_product.clone());
        }
        let table = f.reconstruct_gram();
        for (k, row) in table.iter().enumerate() {
            for (l, b) in row.iter().enumerate() {
                prop_assert_eq!(b, &src.moment(k, l).unwrap());
            }
        }
    }

    #[test]
    fn pivot_is_schur_complement(seed in any::<u64>(), p in 1usize..=2, k in 1usize..5) {
        let mut r = rng(seed);
        let src = random_base(&mut r, p, 5);
        let Some(f) = quasidefinite(src.clone(), k) else { return Ok(()); };
        let g = uvarov::gaussborel::gram_matrix(src.as_ref(), k + 1).unwrap();
        let kp = k * p;
        let a = g.submatrix(0, 0, kp, kp);
        let b = g.submatrix(0, kp, kp, p);
        let c = g.submatrix(kp, 0, p, kp);
        let d = g.submatrix(kp, kp, p, p);
        prop_assert_eq!(&theta_star(&a, &b, &c, &d, 0.0).unwrap(), f.h(k).unwrap());
    }

    #[test]
    fn theorem_matches_oracles(seed in any::<u64>(), p in 1usize..=2, kind in 0u8..3, n in 0usize..6) {
        let mut r = rng(seed);
        let src = random_base(&mut r, p, 6);
        let Some(f) = quasidefinite(src.clone(), n) else { return Ok(()); };
        let spec = Arc::new(random_spec::<Rational, _>(&mut r, kind_of(kind), p, 2, 2 * n + 4));
        let theorem = transform(&f, &spec, n);
        let oracle = oracle_transform(src.clone(), spec.clone(), n, Tolerances::default());
        match (&theorem, &oracle) {
            (Ok(t), Ok(o)) => {
                prop_assert_eq!(&t.p1_hat, &o.p1_hat);
                prop_assert_eq!(&t.p2_hat, &o.p2_hat);
                prop_assert_eq!(&t.h_hat, &o.h_hat);
                prop_assert_eq!(&transform_structured(&f, &spec, n).unwrap(), t);
                let perturbed = uvarov::moments::perturb_source(src.clone(), spec.clone()).unwrap();
                let dense = dense_biorthogonal(&perturbed, n).unwrap();
                prop_assert_eq!(&dense.p1, &t.p1_hat);
                prop_assert_eq!(&dense.h, &t.h_hat);
            }
            (Err(Error::CouplingSingular { .. }), Err(Error::Breakdown { degree })) => prop_assert!(*degree < n),
            (Ok(_), Err(Error::Breakdown { degree })) => prop_assert!(*degree <= n),
            other => prop_assert!(false, "unexpected pair {:?}", other),
        }
    }

    #[test]
    fn coupling_determinant_links_gram_determinants(seed in any::<u64>(), p in 1usize..=2, kind in 0u8..3, n in 1usize..6) {
        let mut r = rng(seed);
        let src = random_base(&mut r, p, 6);
        let Some(f) = quasidefinite(src.clone(), n) else { return Ok(()); };
        let spec = Arc::new(random_spec::<Rational, _>(&mut r, kind_of(kind), p, 2, 2 * n + 4));
        let perturbed = uvarov::moments::perturb_source(src.clone(), spec.clone()).unwrap();
        let det_hat = dense_det(&dense_gram(&perturbed, n));
        let det_base = dense_det(&dense_gram(src.as_ref(), n));
        let coupling = coupling_matrix(&f, &spec, n).unwrap().det();
        prop_assert_eq!(det_hat, det_base * coupling);
    }

    #[test]
    fn float_transform_tracks_rational(seed in any::<u64>(), kind in 0u8..3, n in 0usize..5) {
        let spec_r = random_spec::<Rational, _>(&mut rng(seed), kind_of(kind), 1, 2, 2 * n + 4);
        let spec_f = random_spec::<f64, _>(&mut rng(seed), kind_of(kind), 1, 2, 2 * n + 4);
        let fr = quasidefinite(lebesgue(Matrix::identity(1), n), n).unwrap();
        let ff = factorize(lebesgue::<f64>(Matrix::identity(1), n), n, Tolerances::default()).unwrap();
        if let (Ok(a), Ok(b)) = (transform(&fr, &spec_r, n), transform(&ff, &spec_f, n)) {
            for (ra, fb) in a.h_hat.entries().iter().zip(b.h_hat.entries()) {
                let exact = ra.to_f64().unwrap();
                prop_assert!((exact - fb).abs() <= 1e-6 * exact.abs().max(1.0), "{} vs {}", exact, fb);
            }
        }
    }
}

#[test]
fn identity_gram_kernel_is_diagonal_sum() {
    let src: Source<Rational> = Arc::new(uvarov::moments::GramTable::identity(2, 5));
    let f = factorize(src, 4, Tolerances::default()).unwrap();
    let mut expected = MatKernel::zero(2);
    for k in 0..=4 {
        expected = expected.add(&MatKernel::monomial(Matrix::identity(2), k, k));
    }
    assert!(cd_kernel(&f, 4).unwrap().coeff_eq(&expected));
    assert_eq!(f.source().p(), 2);
}

#[test]
fn dense_oracle_reproduces_legendre() {
    let src = lebesgue::<Rational>(Matrix::identity(1), 3);
    let d = dense_biorthogonal(src.as_ref(), 2).unwrap();
    assert_eq!(d.p1, MatPoly::from_scalars(1, &[q(-1, 3), q(0, 1), q(1, 1)]));
    assert_eq!(d.h, Matrix::scalar(1, q(8, 45)));
}
