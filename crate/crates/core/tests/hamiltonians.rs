mod common;

use chaingate::hamiltonians::spin_operator;
use chaingate::linalg::{hermiticity_deviation, Pauli};
use chaingate::{build_control_generators, build_drift, Coupling, SpinChainSpec};
use common::{jacobi_eigenvalues, max_diff, real_embedding, reference_operators};
use proptest::prelude::*;

fn weights(spec: &SpinChainSpec) -> Vec<f64> {
    (1..=spec.n_qubits).map(|j| spec.leakage_weight(j)).collect()
}

#[test]
fn three_site_xxx_spectrum_in_field() {
    // Quartet at 1/2 and doublets at -1 and 0, each shifted by -Omega * M.
    let spec = SpinChainSpec::xxx(3).with_global_field(0.5);
    let h = build_drift(&spec).unwrap();
    let ev = jacobi_eigenvalues(real_embedding(&h));
    let pairs: Vec<f64> = ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    let expected = [-1.25, -0.75, -0.25, -0.25, 0.25, 0.25, 0.75, 1.25];
    for (a, b) in pairs.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{pairs:?}");
    }
}

#[test]
fn two_site_xxx_singlet_triplet() {
    let h = build_drift(&SpinChainSpec::xxx(2)).unwrap();
    let ev = jacobi_eigenvalues(real_embedding(&h));
    let expected = [-0.75, -0.75, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25];
    for (a, b) in ev.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{ev:?}");
    }
}

#[test]
fn drift_is_sum_of_spin_products() {
    let spec = SpinChainSpec::xxx(3);
    let h = build_drift(&spec).unwrap();
    let mut s = chaingate::Operator::zeros(8, 8);
    for i in 1..3 {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            s += spin_operator(3, i, p) * spin_operator(3, i + 1, p);
        }
    }
    assert!(max_diff(&h, &s) < 1e-15);
}

#[test]
fn leakage_weight_fixtures() {
    let spec = SpinChainSpec::xxx(3).with_leakage(Some(3.0));
    assert_eq!(spec.leakage_weight(1), 1.0);
    assert!((spec.leakage_weight(2) - 0.049787068367863944).abs() < 1e-17);
    assert!((spec.leakage_weight(3) - 6.14421235332821e-06).abs() < 1e-19);
    let spec = SpinChainSpec::xxx(3).with_leakage(Some(5.0));
    assert!((spec.leakage_weight(2) - 6.737946999085467e-03).abs() < 1e-18);
    assert!((spec.leakage_weight(3) - 2.061153622438558e-09).abs() < 1e-22);
    let local = SpinChainSpec::xxx(3);
    assert_eq!(weights(&local), vec![1.0, 0.0, 0.0]);
    let infinite = SpinChainSpec::xxx(3).with_leakage(Some(f64::INFINITY));
    assert_eq!(weights(&infinite), vec![1.0, 0.0, 0.0]);
    let global = SpinChainSpec::xxx(3).with_leakage(Some(0.0));
    assert_eq!(weights(&global), vec![1.0, 1.0, 1.0]);
}

#[test]
fn rejects_invalid_specs() {
    assert!(build_drift(&SpinChainSpec::xxx(1)).is_err());
    assert!(build_drift(&SpinChainSpec::xxx(11)).is_err());
    assert!(build_drift(&SpinChainSpec::xxx(3).with_leakage(Some(-1.0))).is_err());
    assert!(build_drift(&SpinChainSpec::xxx(3).with_global_field(f64::NAN)).is_err());
    let mut spec = SpinChainSpec::xxx(3);
    spec.actuator = 4;
    assert!(build_control_generators(&spec).is_err());
}

fn coupling_strategy() -> impl Strategy<Value = Coupling> {
    prop_oneof![
        Just(Coupling::Xxx),
        (-2.0..2.0f64).prop_map(|delta| Coupling::Xxz { delta }),
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(jx, jy, jz)| Coupling::Xyz { jx, jy, jz }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operators_match_reference(
        n in 2usize..=4,
        coupling in coupling_strategy(),
        omega in -2.0..2.0f64,
        mu in proptest::option::of(0.0..8.0f64),
    ) {
        let spec = SpinChainSpec::xxx(n).with_coupling(coupling).with_global_field(omega).with_leakage(mu);
        let h = build_drift(&spec).unwrap();
        let (cx, cy) = build_control_generators(&spec).unwrap();
        let w: Vec<f64> = (1..=n).map(|j| match mu {
            None => if j == 1 { 1.0 } else { 0.0 },
            Some(m) => (-m * ((j - 1) as f64).powi(2)).exp(),
        }).collect();
        let (h_ref, cx_ref, cy_ref) = reference_operators(n, coupling.exchange_constants(), omega, &w);
        prop_assert!(max_diff(&h, &h_ref) < 1e-14);
        prop_assert!(max_diff(&cx, &cx_ref) < 1e-14);
        prop_assert!(max_diff(&cy, &cy_ref) < 1e-14);
        prop_assert!(hermiticity_deviation(&h) < 1e-15);
        prop_assert!(hermiticity_deviation(&cx) < 1e-15);
        prop_assert!(hermiticity_deviation(&cy) < 1e-15);
    }

    #[test]
    fn spectrum_matches_jacobi(omega in -2.0..2.0f64, delta in -2.0..2.0f64) {
        let spec = SpinChainSpec::xxx(3).with_coupling(Coupling::Xxz { delta }).with_global_field(omega);
        let h = build_drift(&spec).unwrap();
        let mut ev: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let doubled = jacobi_eigenvalues(real_embedding(&h));
        for (k, e) in ev.iter().enumerate() {
            prop_assert!((e - doubled[2 * k]).abs() < 1e-10);
            prop_assert!((e - doubled[2 * k + 1]).abs() < 1e-10);
        }
    }
}
