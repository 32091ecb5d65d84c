//! Property tests for the structural invariants: dagger involution,
//! exponential and hyperbolic identities, Sylvester residuals, covariance
//! symmetry, and symmetry preservation along evolved trajectories.

use gausspace::linalg::{
    cr, dagger_symmetry_defect, det, generalized_dagger, generalized_dagger_full, inverse,
    matrix_cosh_sinh, matrix_exp, sylvester_solve, BlockMatrix2x2, CMatrix, CVector,
};
use gausspace::{
    drift_matrices, factory, lindblad_to_qme, propagate_with_drift, GaussianParams, LindbladSpec,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex_entry(scale: f64) -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(move |(re, im)| c(re * scale, im * scale))
}

fn cmatrix(n: usize, scale: f64) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(complex_entry(scale), n * n)
        .prop_map(move |v| CMatrix::from_vec(n, n, v))
}

fn symmetric_cmatrix(n: usize, scale: f64) -> impl Strategy<Value = CMatrix> {
    cmatrix(n, scale).prop_map(|m| (&m + m.transpose()) * cr(0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn dagger_is_involution(
        a in cmatrix(2, 2.0),
        b in cmatrix(2, 2.0),
        cc in cmatrix(2, 2.0),
        d in cmatrix(2, 2.0),
    ) {
        let x = BlockMatrix2x2::new(a, b, cc, d).unwrap();
        let twice = generalized_dagger(&generalized_dagger(&x));
        prop_assert!((twice.to_full() - x.to_full()).norm() < 1e-14);
    }

    #[test]
    fn dagger_is_antihomomorphism(x in cmatrix(4, 1.0), y in cmatrix(4, 1.0)) {
        // (X Y)^+ = Y^+ X^+, matching operator adjoints
        let lhs = generalized_dagger_full(&(&x * &y)).unwrap();
        let rhs = generalized_dagger_full(&y).unwrap() * generalized_dagger_full(&x).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn exp_times_exp_of_negative_is_identity(x in cmatrix(3, 1.0)) {
        // |X| <= ~4.2 here; the spec bound is |X| <= 5
        let e = matrix_exp(&x).unwrap();
        let e_inv = matrix_exp(&(-&x)).unwrap();
        let defect = (&e * &e_inv - CMatrix::identity(3, 3)).norm();
        prop_assert!(defect < 1e-10, "defect {defect}");
    }

    #[test]
    fn hyperbolic_pair_relation(xi in symmetric_cmatrix(2, 0.9)) {
        // |xi| <= ~2 after symmetrization
        let (mu, nu) = matrix_cosh_sinh(&xi).unwrap();
        let defect = (&mu * &mu - &nu * nu.conjugate() - CMatrix::identity(2, 2)).norm();
        prop_assert!(defect < 1e-10, "hyperbolic defect {defect}");
        // nu is symmetric and mu^{-1} nu is symmetric
        prop_assert!((&nu - nu.transpose()).norm() < 1e-12);
        let mu_inv_nu = inverse(&mu).unwrap() * &nu;
        prop_assert!((&mu_inv_nu - mu_inv_nu.transpose()).norm() < 1e-10);
    }

    #[test]
    fn sylvester_residual_small(e_raw in cmatrix(4, 1.0), rhs in cmatrix(4, 1.0)) {
        // shift the spectrum into the left half plane so the pencil is regular
        let shift = e_raw.norm() + 1.0;
        let e = &e_raw - CMatrix::identity(4, 4) * cr(shift);
        let edag = generalized_dagger_full(&e).unwrap();
        let s = sylvester_solve(&e, &edag, &rhs).unwrap();
        let residual = (&e * &s + &s * &edag - &rhs).norm();
        let tol = 1e-10 * (e.norm() + edag.norm() + rhs.norm()).max(1.0) * s.norm().max(1.0);
        prop_assert!(residual <= tol, "residual {residual}, tol {tol}");
    }

    #[test]
    fn covariance_has_exact_dagger_symmetry(
        n in cmatrix(2, 2.0),
        m in symmetric_cmatrix(2, 2.0),
        mp in symmetric_cmatrix(2, 2.0),
        a in proptest::collection::vec(complex_entry(1.0), 2),
        ap in proptest::collection::vec(complex_entry(1.0), 2),
    ) {
        let g = GaussianParams::new(
            cr(1.0),
            CVector::from_vec(a),
            CVector::from_vec(ap),
            n, m, mp,
        ).unwrap();
        prop_assert_eq!(g.covariance().symmetry_defect(), 0.0);
    }

    #[test]
    fn single_mode_covariance_determinant(
        n in complex_entry(2.0),
        m in complex_entry(2.0),
        mp in complex_entry(2.0),
    ) {
        let g = GaussianParams::new(
            cr(1.0),
            CVector::zeros(1),
            CVector::zeros(1),
            CMatrix::from_element(1, 1, n),
            CMatrix::from_element(1, 1, m),
            CMatrix::from_element(1, 1, mp),
        ).unwrap();
        let d = det(g.covariance().matrix()).unwrap();
        let expected = (cr(1.0) + n) * (cr(1.0) + n) - m * mp;
        prop_assert!((d - expected).norm() < 1e-12 * expected.norm().max(1.0));
    }

    #[test]
    fn hermitian_states_have_conjugate_first_moments(
        alpha in complex_entry(1.5),
        nb in 0.0..2.0f64,
    ) {
        let g = GaussianParams::new(
            cr(1.0),
            CVector::from_vec(vec![alpha]),
            CVector::from_vec(vec![alpha.conj()]),
            CMatrix::from_element(1, 1, cr(nb)),
            CMatrix::zeros(1, 1),
            CMatrix::zeros(1, 1),
        ).unwrap();
        let f = g.first_moments();
        prop_assert_eq!(f.adag[0], f.a[0].conj());
    }

    #[test]
    fn squeezed_thermal_zero_temperature_reduction(r in -1.2..1.2f64, phase in 0.0..6.28f64) {
        let xi = CMatrix::from_element(1, 1, c(r * phase.cos(), r * phase.sin()));
        let spec = factory::SqueezeSpec::hermitian(xi).unwrap();
        let th = factory::ThermalSpec::from_occupation(CMatrix::zeros(1, 1)).unwrap();
        let a = factory::squeezed_thermal(&spec, &th, CVector::zeros(1), CVector::zeros(1)).unwrap();
        let b = factory::squeezed_vacuum(CVector::zeros(1), CVector::zeros(1), &spec).unwrap();
        prop_assert!((a.n() - b.n()).norm() < 1e-12);
        prop_assert!((a.m() - b.m()).norm() < 1e-12);
        prop_assert!((a.m_plus() - b.m_plus()).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagation_preserves_dagger_symmetry_and_physicality(
        chi in 0.05..0.45f64,
        gamma in 0.5..1.5f64,
        r in -0.6..0.6f64,
        nb in 0.0..1.0f64,
        alpha in complex_entry(0.8),
        t in 0.0..8.0f64,
    ) {
        let q = lindblad_to_qme(
            &LindbladSpec::parametric_amplifier(cr(chi), gamma).unwrap(),
        );
        let squeeze = factory::SqueezeSpec::scalar(r);
        let th = factory::ThermalSpec::from_occupation(CMatrix::from_element(1, 1, cr(nb))).unwrap();
        let g0 = factory::squeezed_thermal(
            &squeeze,
            &th,
            CVector::from_vec(vec![alpha]),
            CVector::from_vec(vec![alpha.conj()]),
        ).unwrap();
        prop_assert!(g0.check_physical().is_physical());

        let drift = drift_matrices(&q).unwrap();
        let gt = propagate_with_drift(&drift, &g0, t).unwrap();
        // generalized Hermitian symmetry survives evolution
        let defect = dagger_symmetry_defect(gt.covariance().matrix()).unwrap();
        prop_assert!(defect < 1e-10, "dagger defect {defect}");
        // Lindblad evolution keeps a physical state physical
        let report = gt.check_physical();
        prop_assert!(report.is_physical(), "failures {:?}", report.failures());
        // the weight never moves in real time
        prop_assert_eq!(gt.omega(), g0.omega());
    }
}
