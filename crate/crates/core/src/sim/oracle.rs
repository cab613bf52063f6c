//! Dense reference simulator used to cross-check [`super::run`].
//!
//! Every gate, post-selections included, becomes a full `2^n x 2^n` matrix
//! assembled from explicit Kronecker products with qubit 0 as the leftmost
//! factor. It shares no code with the in-place kernel.

use num_complex::Complex64;

use super::StateVector;
use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use crate::params::ParamStore;

pub const ORACLE_MAX_QUBITS: usize = 12;

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    dim: usize,
    data: Vec<C>,
}

impl Dense {
    fn from_rows(rows: &[[C; 2]; 2]) -> Dense {
        Dense { dim: 2, data: vec![rows[0][0], rows[0][1], rows[1][0], rows[1][1]] }
    }

    fn identity(dim: usize) -> Dense {
        let mut data = vec![C::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C::new(1.0, 0.0);
        }
        Dense { dim, data }
    }

    fn kron(&self, other: &Dense) -> Dense {
        let dim = self.dim * other.dim;
        let mut data = vec![C::new(0.0, 0.0); dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.data[i * self.dim + j];
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        data[(i * other.dim + k) * dim + (j * other.dim + l)] = a * other.data[k * other.dim + l];
                    }
                }
            }
        }
        Dense { dim, data }
    }

    fn add(&self, other: &Dense) -> Dense {
        Dense { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    fn apply(&self, v: &[C]) -> Vec<C> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.data[i * self.dim + j] * v[j]).sum()).collect()
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn hadamard() -> Dense {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Dense::from_rows(&[[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
}

fn rx(theta: f64) -> Dense {
    let (s, co) = (theta / 2.0).sin_cos();
    Dense::from_rows(&[[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
}

fn rz(theta: f64) -> Dense {
    let e = C::from_polar(1.0, theta / 2.0);
    Dense::from_rows(&[[e.conj(), c(0.0, 0.0)], [c(0.0, 0.0), e]])
}

fn pauli_x() -> Dense {
    Dense::from_rows(&[[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
}

fn proj(bit: usize) -> Dense {
    let mut m = Dense::from_rows(&[[c(0.0, 0.0); 2]; 2]);
    m.data[bit * 2 + bit] = c(1.0, 0.0);
    m
}

/// `I ⊗ … ⊗ m ⊗ … ⊗ I` with `m` in slot `q`.
fn embed(n: usize, q: usize, m: &Dense) -> Dense {
    let mut out = Dense::identity(1);
    for k in 0..n {
        out = out.kron(if k == q { m } else { &I2 });
    }
    out
}

static I2: std::sync::LazyLock<Dense> = std::sync::LazyLock::new(|| Dense::identity(2));

/// `|0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ u_t`.
fn controlled(n: usize, control: usize, target: usize, u: &Dense) -> Dense {
    let mut off = Dense::identity(1);
    let mut on = Dense::identity(1);
    for k in 0..n {
        let (a, b) = if k == control {
            (proj(0), proj(1))
        } else if k == target {
            (Dense::identity(2), u.clone())
        } else {
            (Dense::identity(2), Dense::identity(2))
        };
        off = off.kron(&a);
        on = on.kron(&b);
    }
    off.add(&on)
}

/// Reference evaluation of `c` by dense matrix products.
pub fn dense_oracle(circuit: &Circuit, params: &ParamStore) -> Result<StateVector> {
    let n = circuit.qubit_count;
    if n > ORACLE_MAX_QUBITS {
        return Err(Error::Capacity { what: "oracle qubits", needed: n, cap: ORACLE_MAX_QUBITS });
    }
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    for g in &circuit.gates {
        let theta = match &g.param {
            Some(a) => {
                let value = params.get(&a.symbol).ok_or_else(|| Error::MissingSymbol(a.symbol.to_string()))?;
                a.sign() * value
            }
            None => 0.0,
        };
        let q = &g.qubits;
        let m = match g.kind {
            GateKind::H => embed(n, q[0], &hadamard()),
            GateKind::Rx => embed(n, q[0], &rx(theta)),
            GateKind::Rz => embed(n, q[0], &rz(theta)),
            GateKind::PostSelect0 => embed(n, q[0], &proj(0)),
            GateKind::Cnot => controlled(n, q[0], q[1], &pauli_x()),
            GateKind::Crz => controlled(n, q[0], q[1], &rz(theta)),
        };
        v = m.apply(&v);
    }

    // read off the entries with every post-selected qubit at 0
    let selected: Vec<usize> = circuit.post_selected().collect();
    let open = &circuit.open_outputs;
    let mut out = vec![c(0.0, 0.0); 1 << open.len()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let mut bits = vec![0usize; n];
        for (j, &q) in open.iter().enumerate() {
            bits[q] = (idx >> (open.len() - 1 - j)) & 1;
        }
        debug_assert!(selected.iter().all(|&q| bits[q] == 0));
        let full = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b);
        *slot = v[full];
    }
    Ok(StateVector { amplitudes: out, live_qubits: open.clone() })
}
