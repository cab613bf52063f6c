//! Random circuits for property checks and the `simcheck` suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{Angle, Circuit, Gate, ParamSymbol};
use crate::grammar::GrammarType;
use crate::params::ParamStore;

/// A valid circuit on `qubits` qubits with up to `max_gates` gates drawn from
/// the full gate set. Roughly half of the qubits end post-selected.
pub fn random_circuit<R: Rng>(rng: &mut R, qubits: usize, max_gates: usize) -> Circuit {
    assert!(qubits >= 1);
    let symbols: Vec<ParamSymbol> = (0..4).map(|i| ParamSymbol::new("r", GrammarType::n(), i)).collect();
    let mut active: Vec<usize> = (0..qubits).collect();
    let mut gates = Vec::new();
    let count = rng.gen_range(1..=max_gates.max(1));
    while gates.len() < count {
        let choice = rng.gen_range(0..10);
        if choice >= 5 && active.len() < 2 {
            continue;
        }
        let q = *active.choose(rng).unwrap();
        let gate = match choice {
            0 | 1 => Gate::h(q),
            2 => Gate::rx(q, angle(rng, &symbols)),
            3 => Gate::rz(q, angle(rng, &symbols)),
            4 if active.len() > 1 && rng.gen_bool(0.3) => {
                active.retain(|&x| x != q);
                Gate::post_select(q)
            }
            4 => Gate::rx(q, angle(rng, &symbols)),
            _ => {
                let pair: Vec<usize> = active.choose_multiple(rng, 2).copied().collect();
                if choice < 8 {
                    Gate::cnot(pair[0], pair[1])
                } else {
                    Gate::crz(pair[0], pair[1], angle(rng, &symbols))
                }
            }
        };
        gates.push(gate);
    }
    active.shuffle(rng);
    let keep = rng.gen_range(1..=active.len());
    for &q in &active[keep..] {
        gates.push(Gate::post_select(q));
    }
    let open = active[..keep].to_vec();
    Circuit::new(qubits, gates, open).expect("generator emits valid circuits")
}

fn angle<R: Rng>(rng: &mut R, symbols: &[ParamSymbol]) -> Angle {
    let mut a = Angle::plus(symbols.choose(rng).unwrap().clone());
    a.negated = rng.gen_bool(0.5);
    a
}

/// Uniform angles in `[0, 2π)` for every symbol used by `circuits`.
pub fn random_params<R: Rng>(rng: &mut R, circuits: &[Circuit]) -> ParamStore {
    let mut p = ParamStore::new(0);
    for c in circuits {
        for s in &c.symbols {
            if p.get(s).is_none() {
                p.set(s.clone(), rng.gen_range(0.0..std::f64::consts::TAU));
            }
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimcheckReport {
    pub circuits: usize,
    pub max_deviation: f64,
    /// Index of the circuit with the largest deviation.
    pub worst: usize,
}

/// Compares [`super::run`] with the dense oracle on `count` random circuits
/// of 1 to `max_qubits` qubits and up to `max_gates` gates.
pub fn simcheck(count: usize, max_qubits: usize, max_gates: usize, seed: u64) -> crate::error::Result<SimcheckReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = SimcheckReport { circuits: count, max_deviation: 0.0, worst: 0 };
    for i in 0..count {
        let qubits = rng.gen_range(1..=max_qubits.max(1));
        let c = random_circuit(&mut rng, qubits, max_gates);
        let params = random_params(&mut rng, std::slice::from_ref(&c));
        let fast = super::run(&c, &params)?;
        let slow = super::dense_oracle(&c, &params)?;
        let dev = fast.max_deviation(&slow);
        if dev > report.max_deviation || dev.is_nan() {
            report.max_deviation = dev;
            report.worst = i;
        }
    }
    Ok(report)
}
