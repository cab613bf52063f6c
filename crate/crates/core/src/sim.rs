//! Exact statevector simulation with post-selection.
//!
//! Gates act in place by stride arithmetic over the qubit axes. Qubits join
//! the state lazily, on the first gate that touches them, and leave it as
//! soon as they are post-selected, so the vector only ever spans the live
//! qubits. Post-selection does not renormalize.
//!
//! Amplitude ordering everywhere is big-endian: the first listed qubit is the
//! most significant bit of the index.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{Circuit, GateKind, ParamSymbol};
use crate::error::{Error, Result};
use crate::params::ParamStore;

pub mod oracle;
pub mod random;

pub use oracle::dense_oracle;

/// Default limit on simultaneously live qubits.
pub const DEFAULT_MAX_LIVE_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub live_qubits: Vec<usize>,
}

impl StateVector {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_deviation(&self, other: &StateVector) -> f64 {
        if self.amplitudes.len() != other.amplitudes.len() {
            return f64::INFINITY;
        }
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    H(usize),
    Rx { q: usize, slot: usize, sign: f64 },
    Rz { q: usize, slot: usize, sign: f64 },
    Crz { c: usize, t: usize, slot: usize, sign: f64 },
    Cnot { c: usize, t: usize },
    Post(usize),
}

/// A circuit with its parameters resolved to slots of an angle vector.
///
/// Built once per circuit; executing it for new angles skips all symbol
/// lookups, which is what the training loop needs.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    open: Vec<usize>,
    qubit_count: usize,
    peak_width: usize,
}

/// Maps parameter symbols to dense slots.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: Vec<ParamSymbol>,
    index: HashMap<ParamSymbol, usize>,
}

impl SymbolTable {
    pub fn new() -> Self {
        SymbolTable::default()
    }

    pub fn intern(&mut self, s: &ParamSymbol) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        self.symbols.push(s.clone());
        self.index.insert(s.clone(), self.symbols.len() - 1);
        self.symbols.len() - 1
    }

    pub fn get(&self, s: &ParamSymbol) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn symbols(&self) -> &[ParamSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl Program {
    /// Resolves symbols through `slot_of`, which may intern or look up.
    pub fn build(
        c: &Circuit,
        mut slot_of: impl FnMut(&ParamSymbol) -> Result<usize>,
        max_live: usize,
    ) -> Result<Program> {
        let mut ops = Vec::with_capacity(c.gates.len());
        for g in &c.gates {
            let q = &g.qubits;
            let op = match g.kind {
                GateKind::H => Op::H(q[0]),
                GateKind::Cnot => Op::Cnot { c: q[0], t: q[1] },
                GateKind::PostSelect0 => Op::Post(q[0]),
                kind => {
                    let angle = g.param.as_ref().expect("validated rotation");
                    let slot = slot_of(&angle.symbol)?;
                    let sign = angle.sign();
                    match kind {
                        GateKind::Rx => Op::Rx { q: q[0], slot, sign },
                        GateKind::Rz => Op::Rz { q: q[0], slot, sign },
                        _ => Op::Crz { c: q[0], t: q[1], slot, sign },
                    }
                }
            };
            ops.push(op);
        }
        let mut p = Program { ops, open: c.open_outputs.clone(), qubit_count: c.qubit_count, peak_width: 0 };
        p.peak_width = p.measure_width();
        if p.peak_width > max_live {
            return Err(Error::Capacity { what: "live qubits", needed: p.peak_width, cap: max_live });
        }
        Ok(p)
    }

    pub fn peak_width(&self) -> usize {
        self.peak_width
    }

    fn measure_width(&self) -> usize {
        let mut live = vec![false; self.qubit_count];
        let (mut width, mut peak) = (0usize, 0usize);
        for op in &self.ops {
            for q in op_qubits(op) {
                if !live[q] {
                    live[q] = true;
                    width += 1;
                }
            }
            peak = peak.max(width);
            if let Op::Post(q) = *op {
                live[q] = false;
                width -= 1;
            }
        }
        peak.max(width + self.open.iter().filter(|&&q| !live[q]).count())
    }

    pub fn execute(&self, angles: &[f64]) -> StateVector {
        let mut st = Live::new(self.qubit_count);
        for op in &self.ops {
            match *op {
                Op::H(q) => {
                    let k = st.axis(q);
                    apply_h(&mut st.amps, k);
                }
                Op::Rx { q, slot, sign } => {
                    let k = st.axis(q);
                    apply_rx(&mut st.amps, k, sign * angles[slot]);
                }
                Op::Rz { q, slot, sign } => {
                    let k = st.axis(q);
                    apply_rz(&mut st.amps, k, sign * angles[slot]);
                }
                Op::Crz { c, t, slot, sign } => {
                    let (kc, kt) = (st.axis(c), st.axis(t));
                    apply_crz(&mut st.amps, kc, kt, sign * angles[slot]);
                }
                Op::Cnot { c, t } => {
                    let (kc, kt) = (st.axis(c), st.axis(t));
                    apply_cnot(&mut st.amps, kc, kt);
                }
                Op::Post(q) => {
                    let k = st.axis(q);
                    st.post_select(k);
                }
            }
        }
        st.finish(&self.open)
    }
}

fn op_qubits(op: &Op) -> Vec<usize> {
    match *op {
        Op::H(q) | Op::Rx { q, .. } | Op::Rz { q, .. } | Op::Post(q) => vec![q],
        Op::Crz { c, t, .. } | Op::Cnot { c, t } => vec![c, t],
    }
}

/// State over the live qubits; `axes[k]` is the qubit on bit `k` (LSB first).
struct Live {
    amps: Vec<Complex64>,
    axes: Vec<usize>,
    axis_of: Vec<Option<usize>>,
}

impl Live {
    fn new(qubits: usize) -> Self {
        Live { amps: vec![Complex64::new(1.0, 0.0)], axes: Vec::new(), axis_of: vec![None; qubits] }
    }

    /// Bit position of `q`, adding it in |0⟩ as the new top bit if needed.
    fn axis(&mut self, q: usize) -> usize {
        if let Some(k) = self.axis_of[q] {
            return k;
        }
        let k = self.axes.len();
        self.amps.resize(self.amps.len() * 2, Complex64::new(0.0, 0.0));
        self.axes.push(q);
        self.axis_of[q] = Some(k);
        k
    }

    fn post_select(&mut self, k: usize) {
        let low = (1usize << k) - 1;
        let half = self.amps.len() / 2;
        for j in 0..half {
            let i = ((j & !low) << 1) | (j & low);
            self.amps[j] = self.amps[i];
        }
        self.amps.truncate(half);
        let q = self.axes.remove(k);
        self.axis_of[q] = None;
        for (pos, &other) in self.axes.iter().enumerate().skip(k) {
            self.axis_of[other] = Some(pos);
        }
    }

    fn finish(mut self, open: &[usize]) -> StateVector {
        for &q in open {
            self.axis(q);
        }
        let n = open.len();
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << n];
        // open[0] is the most significant bit of the output index
        let bits: Vec<usize> = open.iter().map(|&q| self.axis_of[q].expect("open qubit is live")).collect();
        for (i, &a) in self.amps.iter().enumerate() {
            let mut j = 0usize;
            for &b in &bits {
                j = (j << 1) | ((i >> b) & 1);
            }
            out[j] = a;
        }
        StateVector { amplitudes: out, live_qubits: open.to_vec() }
    }
}

fn apply_h(v: &mut [Complex64], k: usize) {
    let stride = 1usize << k;
    for base in (0..v.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let (a, b) = (v[i], v[i + stride]);
            v[i] = (a + b) * FRAC_1_SQRT_2;
            v[i + stride] = (a - b) * FRAC_1_SQRT_2;
        }
    }
}

fn apply_rx(v: &mut [Complex64], k: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let mis = Complex64::new(0.0, -s);
    let stride = 1usize << k;
    for base in (0..v.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let (a, b) = (v[i], v[i + stride]);
            v[i] = a * c + b * mis;
            v[i + stride] = a * mis + b * c;
        }
    }
}

fn apply_rz(v: &mut [Complex64], k: usize, theta: f64) {
    let lo = Complex64::from_polar(1.0, -theta / 2.0);
    let hi = lo.conj();
    for (i, a) in v.iter_mut().enumerate() {
        *a *= if (i >> k) & 1 == 0 { lo } else { hi };
    }
}

fn apply_crz(v: &mut [Complex64], kc: usize, kt: usize, theta: f64) {
    let lo = Complex64::from_polar(1.0, -theta / 2.0);
    let hi = lo.conj();
    for (i, a) in v.iter_mut().enumerate() {
        if (i >> kc) & 1 == 1 {
            *a *= if (i >> kt) & 1 == 0 { lo } else { hi };
        }
    }
}

fn apply_cnot(v: &mut [Complex64], kc: usize, kt: usize) {
    let (cm, tm) = (1usize << kc, 1usize << kt);
    for i in 0..v.len() {
        if i & cm != 0 && i & tm == 0 {
            v.swap(i, i | tm);
        }
    }
}

/// Simulates `c` from |0…0⟩ and returns the unnormalized amplitudes on its
/// open outputs.
pub fn run(c: &Circuit, params: &ParamStore) -> Result<StateVector> {
    run_with_cap(c, params, DEFAULT_MAX_LIVE_QUBITS)
}

pub fn run_with_cap(c: &Circuit, params: &ParamStore, max_live: usize) -> Result<StateVector> {
    let mut angles = Vec::new();
    let mut slots: HashMap<ParamSymbol, usize> = HashMap::new();
    let program = Program::build(
        c,
        |s| {
            if let Some(&i) = slots.get(s) {
                return Ok(i);
            }
            let value = params.get(s).ok_or_else(|| Error::MissingSymbol(s.to_string()))?;
            angles.push(value);
            slots.insert(s.clone(), angles.len() - 1);
            Ok(angles.len() - 1)
        },
        max_live,
    )?;
    Ok(program.execute(&angles))
}

/// Runs every circuit; order is preserved and the first failure is reported
/// with its index.
pub fn run_batch(circuits: &[Circuit], params: &ParamStore) -> Result<Vec<StateVector>> {
    let results: Vec<Result<StateVector>> = circuits.par_iter().map(|c| run(c, params)).collect();
    results.into_iter().enumerate().map(|(i, r)| r.map_err(|e| e.with_context(format!("circuit {i}")))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Angle, Gate};
    use crate::grammar::GrammarType;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sym(i: u16) -> ParamSymbol {
        ParamSymbol::new("w", GrammarType::n(), i)
    }

    fn store(values: &[f64]) -> ParamStore {
        let mut p = ParamStore::new(0);
        for (i, &v) in values.iter().enumerate() {
            p.set(sym(i as u16), v);
        }
        p
    }

    #[test]
    fn empty_circuit_is_ket_zero() {
        let c = Circuit::new(1, vec![], vec![0]).unwrap();
        let sv = run(&c, &ParamStore::new(0)).unwrap();
        assert_eq!(sv.amplitudes, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    }

    #[test]
    fn hadamard_then_post_select_is_a_scalar() {
        let c = Circuit::new(1, vec![Gate::h(0), Gate::post_select(0)], vec![]).unwrap();
        let sv = run(&c, &ParamStore::new(0)).unwrap();
        assert_eq!(sv.amplitudes.len(), 1);
        assert!((sv.amplitudes[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn cnot_truth_table_big_endian() {
        // X on q0 via H RZ(pi) H, up to phase; use Rx(pi) = -iX
        let c = Circuit::new(2, vec![Gate::rx(0, Angle::plus(sym(0))), Gate::cnot(0, 1)], vec![0, 1]).unwrap();
        let sv = run(&c, &store(&[PI])).unwrap();
        assert!((sv.amplitudes[3].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_symbol_is_named() {
        let c = Circuit::new(1, vec![Gate::rz(0, Angle::plus(sym(7)))], vec![0]).unwrap();
        match run(&c, &ParamStore::new(0)) {
            Err(Error::MissingSymbol(s)) => assert_eq!(s, "w[n]7"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn live_width_cap() {
        let gates: Vec<Gate> = (0..5).map(Gate::h).collect();
        let c = Circuit::new(5, gates, (0..5).collect()).unwrap();
        assert!(matches!(run_with_cap(&c, &ParamStore::new(0), 4), Err(Error::Capacity { needed: 5, .. })));
    }

    #[test]
    fn lazy_allocation_keeps_width_small() {
        let mut gates = Vec::new();
        for q in 0..10 {
            gates.push(Gate::h(q));
            if q > 0 {
                gates.push(Gate::cnot(q, q - 1));
                gates.push(Gate::post_select(q - 1));
            }
        }
        let c = Circuit::new(10, gates, vec![9]).unwrap();
        let p = Program::build(&c, |_| unreachable!(), 24).unwrap();
        assert_eq!(p.peak_width(), 2);
    }

    #[test]
    fn batch_matches_single_runs_and_reports_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let circuits: Vec<Circuit> = (0..8).map(|_| random::random_circuit(&mut rng, 4, 20)).collect();
        let params = random::random_params(&mut rng, &circuits);
        let batch = run_batch(&circuits, &params).unwrap();
        for (c, sv) in circuits.iter().zip(&batch) {
            assert_eq!(&run(c, &params).unwrap(), sv);
        }
        let (a, b) = circuits.split_at(3);
        let mut halves = run_batch(a, &params).unwrap();
        halves.extend(run_batch(b, &params).unwrap());
        assert_eq!(halves, batch);

        let mut bad = circuits.clone();
        bad[5] = Circuit::new(1, vec![Gate::rz(0, Angle::plus(ParamSymbol::new("zz", GrammarType::n(), 0)))], vec![0])
            .unwrap();
        let err = run_batch(&bad, &params).unwrap_err().to_string();
        assert!(err.starts_with("circuit 5"), "{err}");
    }
}
