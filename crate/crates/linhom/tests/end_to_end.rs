//! Runs each model case through the public API: linear data, Nomizu
//! algebra, matrix realization, involution chain, and geodesics on the
//! terminal group.

use linhom::geodesics::{integrate, Direction, GeodesicState, KGroupMetric};
use linhom::nomizu::{
    homomorphism_residual, jacobi_residual, matrix_realization, run_chain, verify_reference_brackets, CaseDatum, ModelCase,
};
use std::f64::consts::FRAC_PI_2;

const CASES: [(ModelCase, usize); 4] = [
    (ModelCase::ParaKahler, 0),
    (ModelCase::PseudoKahler, 1),
    (ModelCase::ParaQuat, 0),
    (ModelCase::PseudoQuat, 1),
];

#[test]
fn every_case_reaches_an_incomplete_terminal_group() {
    for (case, s) in CASES {
        let datum = CaseDatum::new(case, 2, s, 1.0).unwrap();
        let l = datum.nomizu().unwrap();
        assert!(jacobi_residual(&l) < 1e-10, "{case:?}");
        assert_eq!(l.holonomy_dim(), if case.is_quat() { 3 } else { 1 }, "{case:?}");
        let brackets = verify_reference_brackets(&l, datum.reference(), 1e-10).unwrap();
        assert!(brackets.pass(), "{case:?}: {:?}", brackets.failing().collect::<Vec<_>>());

        let model = matrix_realization(case, 2, s, 1.0).unwrap();
        assert!(homomorphism_residual(&model.phi, &model.algebra) < 1e-9, "{case:?}");

        let chain = run_chain(&model).unwrap();
        assert!(chain.pass(1e-10), "{case:?}: {:?}", chain.terminal);
        assert_eq!(chain.steps.last().unwrap().dim_after, 2);

        let k = KGroupMetric::from_terminal(&chain.terminal).unwrap();
        let table = k.derive_connection().unwrap();
        let lemma = KGroupMetric::lemma().derive_connection().unwrap();
        let dev = table.iter().flatten().flatten().zip(lemma.iter().flatten().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "{case:?}: {table:?}");

        let (_, blow) = integrate(GeodesicState::new(0.0, 1.0), Direction::Forward, 3.0, 1e-12).unwrap();
        assert!(blow.detected && blow.t_low <= FRAC_PI_2 && FRAC_PI_2 <= blow.t_high);
    }
}

#[test]
fn realizations_scale_with_the_norm_of_xi() {
    for (case, s) in CASES {
        for g in [0.25, 4.0] {
            let model = matrix_realization(case, 2, s, g).unwrap();
            assert!(homomorphism_residual(&model.phi, &model.algebra) < 1e-9, "{case:?} g={g}");
            assert!(model.membership_residual < 1e-12);
        }
    }
}

#[test]
fn larger_dimensions_stay_consistent() {
    for (case, s, n) in [(ModelCase::PseudoKahler, 2, 4), (ModelCase::ParaKahler, 0, 5), (ModelCase::PseudoQuat, 2, 3), (ModelCase::ParaQuat, 0, 3)] {
        let datum = CaseDatum::new(case, n, s, 1.0).unwrap();
        let l = datum.nomizu().unwrap();
        assert!(jacobi_residual(&l) < 1e-10, "{case:?} n={n}");
        assert!(verify_reference_brackets(&l, datum.reference(), 1e-10).unwrap().pass());
        let chain = run_chain(&matrix_realization(case, n, s, 1.0).unwrap()).unwrap();
        assert!(chain.pass(1e-10), "{case:?} n={n}");
    }
}

#[test]
fn out_of_range_split_is_rejected() {
    assert!(matrix_realization(ModelCase::PseudoKahler, 2, 0, 1.0).is_err());
    assert!(matrix_realization(ModelCase::PseudoQuat, 3, 3, 1.0).is_err());
    assert!(matrix_realization(ModelCase::ParaQuat, 2, 0, -1.0).is_err());
}
