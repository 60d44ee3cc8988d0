mod common;

use common::*;
use fractal_spectra::linalg::*;
use fractal_spectra::Error;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn generalized_residuals_on_random_pencil() {
    let mut r = rng(11);
    let q = random_real_sym(5, &mut r);
    let b: Vec<f64> = (0..5).map(|_| r.gen_range(0.2..3.0)).collect();
    let eig = generalized_sym_eig(&q, &b).unwrap();
    for (k, &lam) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(k);
        let res = &q * v + RMat::from_diagonal(&nalgebra::DVector::from_column_slice(&b)) * v * lam;
        assert!(res.norm() <= 1e-9);
    }
}

#[test]
fn generalized_rejects_bad_weights() {
    assert!(matches!(generalized_sym_eig(&RMat::identity(2, 2), &[1.0, 0.0]), Err(Error::NonPositiveWeight(_))));
}

#[test]
fn kernel_of_rank_one() {
    let a = CMat::from_element(2, 2, c(1.0, 0.0));
    let k = kernel_basis(&a, RANK_TOL);
    assert_eq!(k.dim(), 1);
    let v = k.basis.column(0);
    assert!((v[0] + v[1]).norm() < 1e-12 && (v[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
    assert_eq!(kernel_basis(&CMat::zeros(2, 3), RANK_TOL).dim(), 3);
    assert_eq!(kernel_basis(&CMat::identity(4, 4), RANK_TOL).dim(), 0);
}

#[test]
fn definiteness() {
    assert!(is_positive_definite(&CMat::identity(3, 3), 0.0).unwrap());
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
    assert!(!is_positive_definite(&d, 0.0).unwrap());
    let skew = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    assert!(matches!(is_positive_definite(&skew, 0.0), Err(Error::NotHermitian(_))));
}

#[test]
fn symmetric_storage_rejects_asymmetry() {
    let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.5, 0.0), c(1.0, 0.0)]);
    assert!(matches!(SymMatrix::try_from_matrix(m, 1e-12), Err(Error::NotSymmetric(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn eigen_reconstructs(k in 1usize..=12, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_real_sym(k, &mut r);
        let e = sym_eig(&a);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let lam = RMat::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let back = &e.vectors * lam * e.vectors.transpose();
        prop_assert!((back - &a).norm() <= 1e-9);
        prop_assert!((e.vectors.transpose() * &e.vectors - RMat::identity(k, k)).norm() <= 1e-10);
    }

    #[test]
    fn kernel_vectors_are_annihilated(m in 1usize..=6, n in 2usize..=8, seed in any::<u64>()) {
        let mut r = rng(seed);
        // Rank-deficient by construction: product through a thin middle.
        let inner = m.min(n) - m.min(n) / 2;
        let a = CMat::from_fn(m, inner, |_, _| random_complex(&mut r))
            * CMat::from_fn(inner, n, |_, _| random_complex(&mut r));
        let k = kernel_basis(&a, RANK_TOL);
        prop_assert_eq!(k.dim(), n - rank(&a, RANK_TOL));
        let smax = singular_values(&a)[0];
        prop_assert!((&a * &k.basis).norm() <= 1e-9 * smax.max(1.0));
        prop_assert!((k.basis.adjoint() * &k.basis - CMat::identity(k.dim(), k.dim())).norm() <= 1e-12);
    }

    #[test]
    fn generalized_is_b_orthonormal(k in 1usize..=10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_real_sym(k, &mut r);
        let b: Vec<f64> = (0..k).map(|_| r.gen_range(0.1..4.0)).collect();
        let e = generalized_sym_eig(&q, &b).unwrap();
        prop_assert_eq!(e.values.len(), k);
        let ib = RMat::from_diagonal(&nalgebra::DVector::from_vec(b));
        let g = e.vectors.transpose() * ib * &e.vectors;
        prop_assert!((g - RMat::identity(k, k)).norm() <= 1e-9);
    }
}
