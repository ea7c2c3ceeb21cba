//! Property-based invariants over randomized inputs.

use covdec::basis::FrobeniusBasis;
use covdec::covariance::{
    congruence_free_check, congruence_free_scale, diag_unitary, project_covariant,
    random_covariant_map, CovariantKind, ProjectionMode, TorusElement,
};
use covdec::linmap::{BasisTag, MapMatrix};
use covdec::mat::{self, CMat, C64};
use ndarray::Array1;
use proptest::prelude::*;

fn complex_entry() -> impl Strategy<Value = C64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| C64::new(re, im))
}

fn cmat(n: usize) -> impl Strategy<Value = CMat> {
    proptest::collection::vec(complex_entry(), n * n)
        .prop_map(move |v| CMat::from_shape_vec((n, n), v).unwrap())
}

fn torus(n: usize) -> impl Strategy<Value = TorusElement> {
    proptest::collection::vec(0.0f64..std::f64::consts::TAU, n).prop_map(TorusElement::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_round_trips(n in 2usize..=6, seed in 0u64..1000) {
        let basis = FrobeniusBasis::new(n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        use rand::SeedableRng;
        let a = mat::random_cmat(n, &mut rng);
        let back = basis.reconstruct(&basis.expand(&a).unwrap()).unwrap();
        prop_assert!(mat::max_abs(&(&back - &a)) < 1e-12);
    }

    #[test]
    fn transpose_conjugate_calculus(a in cmat(3), b in cmat(3)) {
        // conj(A) = (A^dagger)^T = (A^T)^dagger; (AB)^T = B^T A^T;
        // conj(AB) = conj(A) conj(B); (A^T)^T = A
        let t = mat::transpose(&a);
        prop_assert!(mat::max_abs(&(&mat::conj(&a) - &mat::transpose(&mat::dagger(&a)))) < 1e-13);
        prop_assert!(mat::max_abs(&(&mat::conj(&a) - &mat::dagger(&t))) < 1e-13);
        prop_assert!(mat::max_abs(
            &(&mat::transpose(&a.dot(&b)) - &mat::transpose(&b).dot(&t))
        ) < 1e-12);
        prop_assert!(mat::max_abs(
            &(&mat::conj(&a.dot(&b)) - &mat::conj(&a).dot(&mat::conj(&b)))
        ) < 1e-12);
        prop_assert!(mat::max_abs(&(&mat::transpose(&t) - &a)) < 1e-15);
    }

    #[test]
    fn cp_iff_transposed_cocp(c in cmat(4)) {
        let m = MapMatrix::new(2, BasisTag::Frobenius, mat::hermitize(&c)).unwrap();
        let lhs = m.is_cp(1e-9).unwrap();
        let rhs = m.compose_transpose().unwrap().is_cocp(1e-9).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn dual_is_involutive_and_pairs_traces(c in cmat(4)) {
        let m = MapMatrix::new(2, BasisTag::Frobenius, mat::hermitize(&c)).unwrap();
        let dd = m.dual_map().unwrap().dual_map().unwrap();
        prop_assert!(m.distance(&dd).unwrap() < 1e-12);
    }

    #[test]
    fn basis_conversion_is_isometric(c in cmat(4)) {
        let m = MapMatrix::new(2, BasisTag::Frobenius, c).unwrap();
        let back = m.to_canonical().unwrap().to_frobenius().unwrap();
        prop_assert!(m.distance(&back).unwrap() < 1e-12);
    }

    #[test]
    fn torus_action_is_a_representation(g in torus(3), h in torus(3)) {
        let lhs = diag_unitary(&g).dot(&diag_unitary(&h));
        let rhs = diag_unitary(&g.compose(&h));
        prop_assert!(mat::max_abs(&(&lhs - &rhs)) < 1e-12);
        // inverse really inverts
        let inv = diag_unitary(&g.inverse());
        prop_assert!(mat::max_abs(&(inv.dot(&diag_unitary(&g)) - mat::eye(3))) < 1e-13);
    }

    #[test]
    fn projector_is_idempotent_and_lands_on_covariant_maps(c in cmat(9)) {
        let m = MapMatrix::new(3, BasisTag::Frobenius, c).unwrap();
        let p = project_covariant(&m, ProjectionMode::ClosedForm).unwrap();
        let pp = project_covariant(&p, ProjectionMode::ClosedForm).unwrap();
        prop_assert!(p.distance(&pp).unwrap() < 1e-12);
        // commutes with the frame at a structured point
        let basis = FrobeniusBasis::new(3).unwrap();
        let g = TorusElement::distinct(3);
        let alpha = covdec::covariance::build_alpha(&g, &basis).unwrap();
        prop_assert!(mat::max_abs(&mat::commutator(p.coefficients(), &alpha)) < 1e-12);
    }

    #[test]
    fn covariant_samples_fix_under_projection(seed in 0u64..200) {
        let cert = random_covariant_map(CovariantKind::Decomposable, 2, seed).unwrap();
        let p = project_covariant(&cert.map, ProjectionMode::ClosedForm).unwrap();
        prop_assert!(p.distance(&cert.map).unwrap() < 1e-12);
    }

    #[test]
    fn scaled_sets_become_congruence_free(
        pts in proptest::collection::vec(complex_entry(), 1..6),
        frac in 0.01f64..0.99,
    ) {
        let z = C64::new(0.0, std::f64::consts::TAU);
        let tau = congruence_free_scale(&pts, z).unwrap();
        let t = if tau.is_infinite() { 1.0 } else { frac * tau };
        let scaled: Vec<C64> = pts.iter().map(|p| p * mat::scalar(t)).collect();
        prop_assert!(congruence_free_check(&scaled, z).unwrap());
    }

    #[test]
    fn operator_sum_reconstructs(c in cmat(4)) {
        let m = MapMatrix::new(2, BasisTag::Frobenius, mat::hermitize(&c)).unwrap();
        let os = m.to_operator_sum(1e-12).unwrap();
        let mut rng = {
            use rand::SeedableRng;
            rand_chacha::ChaCha8Rng::seed_from_u64(1)
        };
        let a = mat::random_cmat(2, &mut rng);
        let d = mat::max_abs(&(&os.apply(&a) - &m.apply(&a).unwrap()));
        prop_assert!(d < 1e-10);
        // orthonormal operator family
        for i in 0..os.len() {
            for j in 0..os.len() {
                let ip = mat::hs_inner(&os.operators[i], &os.operators[j]);
                let expected = if i == j { mat::ONE } else { mat::ZERO };
                prop_assert!((ip - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn expand_is_linear(a in cmat(3), b in cmat(3), s in -2.0f64..2.0) {
        let basis = FrobeniusBasis::new(3).unwrap();
        let va = basis.expand(&a).unwrap();
        let vb = basis.expand(&b).unwrap();
        let combo = &a + &b.mapv(|z| z * mat::scalar(s));
        let vc = basis.expand(&combo).unwrap();
        let expected: Array1<C64> = &va + &vb.mapv(|z| z * mat::scalar(s));
        let gap = vc
            .iter()
            .zip(expected.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        prop_assert!(gap < 1e-12);
    }
}
