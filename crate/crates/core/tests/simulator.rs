use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qcoref::circuit::{Angle, Circuit, Gate, GateKind, ParamSymbol};
use qcoref::sim::random::{random_circuit, random_params};
use qcoref::{dense_oracle, run, GrammarType, ParamStore};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn without_post_selection(c: &Circuit) -> Circuit {
    let gates: Vec<Gate> = c.gates.iter().filter(|g| g.kind != GateKind::PostSelect0).cloned().collect();
    Circuit::new(c.qubit_count, gates, (0..c.qubit_count).collect()).unwrap()
}

fn shifted(p: &ParamStore, by: f64) -> ParamStore {
    let mut out = p.clone();
    for (s, v) in p.iter() {
        out.set(s.clone(), v + by);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_matches_dense_oracle(seed in any::<u64>(), qubits in 1usize..=6, max_gates in 1usize..=30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, qubits, max_gates);
        let p = random_params(&mut rng, std::slice::from_ref(&c));
        let fast = run(&c, &p).unwrap();
        let slow = dense_oracle(&c, &p).unwrap();
        prop_assert!(fast.max_deviation(&slow) <= 1e-12);
    }

    #[test]
    fn unitary_without_post_selection(seed in any::<u64>(), qubits in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = without_post_selection(&random_circuit(&mut rng, qubits, 30));
        let p = random_params(&mut rng, std::slice::from_ref(&c));
        let sv = run(&c, &p).unwrap();
        prop_assert_eq!(sv.amplitudes.len(), 1 << qubits);
        prop_assert!((sv.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn post_selection_never_adds_norm(seed in any::<u64>(), qubits in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = without_post_selection(&random_circuit(&mut rng, qubits, 30));
        let p = random_params(&mut rng, std::slice::from_ref(&base));
        let mut previous = run(&base, &p).unwrap().norm_sqr();
        for k in 1..qubits {
            let mut gates = base.gates.clone();
            gates.extend((0..k).map(Gate::post_select));
            let c = Circuit::new(qubits, gates, (k..qubits).collect()).unwrap();
            let norm = run(&c, &p).unwrap().norm_sqr();
            prop_assert!(norm <= previous + 1e-12, "{} > {}", norm, previous);
            previous = norm;
        }
    }

    #[test]
    fn angles_are_four_pi_periodic(seed in any::<u64>(), qubits in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, qubits, 30);
        let p = random_params(&mut rng, std::slice::from_ref(&c));
        let a = run(&c, &p).unwrap();
        let b = run(&c, &shifted(&p, 4.0 * PI)).unwrap();
        prop_assert!(a.max_deviation(&b) <= 1e-12);
    }
}

#[test]
fn a_two_pi_shift_flips_the_sign_of_a_rotation() {
    let s = ParamSymbol::new("w", GrammarType::n(), 0);
    let c = Circuit::new(1, vec![Gate::rx(0, Angle::plus(s.clone()))], vec![0]).unwrap();
    let mut p = ParamStore::new(0);
    p.set(s, 0.7);
    let a = run(&c, &p).unwrap();
    let b = run(&c, &shifted(&p, 2.0 * PI)).unwrap();
    for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
        assert!((x + y).norm() < 1e-12);
    }
}

#[test]
fn post_selection_is_not_renormalized() {
    let s = ParamSymbol::new("w", GrammarType::n(), 0);
    let c = Circuit::new(2, vec![Gate::rx(0, Angle::plus(s.clone())), Gate::cnot(0, 1), Gate::post_select(0)], vec![1])
        .unwrap();
    let mut p = ParamStore::new(0);
    p.set(s, PI / 3.0);
    let sv = run(&c, &p).unwrap();
    let expected = (PI / 6.0).cos();
    assert!((sv.amplitudes[0] - Complex64::new(expected, 0.0)).norm() < 1e-12);
    assert!(sv.amplitudes[1].norm() < 1e-12);
}

#[test]
fn missing_parameters_are_reported() {
    let s = ParamSymbol::new("w", GrammarType::n(), 0);
    let c = Circuit::new(1, vec![Gate::rz(0, Angle::plus(s))], vec![0]).unwrap();
    assert!(run(&c, &ParamStore::new(0)).is_err());
}
