//! Diagram evaluation by direct tensor contraction.
//!
//! Serves as the semantic reference for rewrites: every word box becomes the
//! tensor of its compiled block (conjugated for effects), cups and plain wires
//! become shared indices, and a merge node is the three-legged copy tensor.
//! Contraction is greedy and bounded in intermediate rank.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::compile::word_state_gates;
use crate::diagram::{Diagram, Port, WordBox};
use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::sim::dense_oracle;

pub const MAX_TENSOR_RANK: usize = 12;

type C = Complex64;

#[derive(Debug, Clone)]
struct Tensor {
    labels: Vec<usize>,
    /// Big-endian over `labels`.
    data: Vec<C>,
}

impl Tensor {
    fn rank(&self) -> usize {
        self.labels.len()
    }
}

fn bit(index: usize, pos: usize, rank: usize) -> usize {
    (index >> (rank - 1 - pos)) & 1
}

fn contract_pair(a: &Tensor, b: &Tensor) -> Tensor {
    let shared: Vec<usize> = a.labels.iter().copied().filter(|l| b.labels.contains(l)).collect();
    let free: Vec<usize> = a.labels.iter().chain(&b.labels).copied().filter(|l| !shared.contains(l)).collect();
    // for each operand position: (is_shared, position within free or shared)
    let locate = |labels: &[usize]| -> Vec<(bool, usize)> {
        labels
            .iter()
            .map(|l| match shared.iter().position(|s| s == l) {
                Some(p) => (true, p),
                None => (false, free.iter().position(|f| f == l).unwrap()),
            })
            .collect()
    };
    let (la, lb) = (locate(&a.labels), locate(&b.labels));
    let (rf, rs) = (free.len(), shared.len());
    let index_of = |loc: &[(bool, usize)], r: usize, s: usize| {
        loc.iter().fold(0usize, |acc, &(is_shared, p)| {
            let v = if is_shared { bit(s, p, rs) } else { bit(r, p, rf) };
            (acc << 1) | v
        })
    };
    let data = (0..1usize << rf)
        .map(|r| (0..1usize << rs).map(|s| a.data[index_of(&la, r, s)] * b.data[index_of(&lb, r, s)]).sum())
        .collect();
    Tensor { labels: free, data }
}

fn permute(t: &Tensor, order: &[usize]) -> Vec<C> {
    let rank = t.rank();
    let pos: Vec<usize> = order.iter().map(|l| t.labels.iter().position(|x| x == l).unwrap()).collect();
    (0..1usize << rank)
        .map(|target| {
            let mut src = 0usize;
            for (j, &p) in pos.iter().enumerate() {
                src |= bit(target, j, rank) << (rank - 1 - p);
            }
            t.data[src]
        })
        .collect()
}

/// Amplitudes of a word block over its legs, big-endian.
pub fn word_tensor(word: &WordBox, params: &ParamStore) -> Result<Vec<C>> {
    let k = word.legs().len();
    let qubits: Vec<usize> = (0..k).collect();
    let (gates, _) = word_state_gates(word, &qubits)?;
    let c = Circuit::new(k, gates, qubits)?;
    let amps = dense_oracle(&c, params)?.amplitudes;
    Ok(if word.is_state() { amps } else { amps.iter().map(|a| a.conj()).collect() })
}

/// The tensor a diagram denotes, big-endian over its open outputs.
pub fn contract_diagram(d: &Diagram, params: &ParamStore) -> Result<Vec<C>> {
    d.check_wiring()?;
    let mut label_of: HashMap<Port, usize> = HashMap::new();
    for (i, w) in d.wires.iter().enumerate() {
        label_of.insert(w.a, i);
        label_of.insert(w.b, i);
    }
    let out_labels: Vec<usize> = (0..d.outputs.len()).map(|j| d.wires.len() + j).collect();
    for (&p, &l) in d.outputs.iter().zip(&out_labels) {
        label_of.insert(p, l);
    }

    let mut tensors = Vec::with_capacity(d.boxes.len() + d.merges);
    for (bx, word) in d.boxes.iter().enumerate() {
        let labels: Vec<usize> = (0..word.legs().len()).map(|l| label_of[&Port::leg(bx, l)]).collect();
        let mut unique = labels.clone();
        unique.sort_unstable();
        unique.dedup();
        if unique.len() != labels.len() {
            return Err(Error::Diagram(format!("box b{bx} is wired to itself")));
        }
        tensors.push(Tensor { labels, data: word_tensor(word, params)? });
    }
    for m in 0..d.merges {
        let labels = vec![
            label_of[&Port::MergeIn { merge: m, slot: 0 }],
            label_of[&Port::MergeIn { merge: m, slot: 1 }],
            label_of[&Port::MergeOut { merge: m }],
        ];
        let mut data = vec![C::new(0.0, 0.0); 8];
        data[0] = C::new(1.0, 0.0);
        data[7] = C::new(1.0, 0.0);
        tensors.push(Tensor { labels, data });
    }

    let mut acc = Tensor { labels: Vec::new(), data: vec![C::new(1.0, 0.0)] };
    while !tensors.is_empty() {
        // cheapest connected pair first, else fold the next tensor in
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..tensors.len() {
            for j in i + 1..tensors.len() {
                let shared = tensors[i].labels.iter().filter(|l| tensors[j].labels.contains(l)).count();
                if shared == 0 {
                    continue;
                }
                let rank = tensors[i].rank() + tensors[j].rank() - 2 * shared;
                if best.is_none_or(|(_, _, r)| rank < r) {
                    best = Some((i, j, rank));
                }
            }
        }
        match best {
            Some((i, j, rank)) => {
                if rank > MAX_TENSOR_RANK {
                    return Err(Error::Capacity { what: "tensor rank", needed: rank, cap: MAX_TENSOR_RANK });
                }
                let b = tensors.remove(j);
                let a = tensors.remove(i);
                tensors.push(contract_pair(&a, &b));
            }
            None => {
                let t = tensors.remove(0);
                let rank = acc.rank() + t.rank();
                if rank > MAX_TENSOR_RANK {
                    return Err(Error::Capacity { what: "tensor rank", needed: rank, cap: MAX_TENSOR_RANK });
                }
                acc = contract_pair(&acc, &t);
            }
        }
    }
    Ok(permute(&acc, &out_labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(labels: &[usize], data: &[f64]) -> Tensor {
        Tensor { labels: labels.to_vec(), data: data.iter().map(|&x| C::new(x, 0.0)).collect() }
    }

    #[test]
    fn matrix_product_by_contraction() {
        // A[i,j] B[j,k]
        let a = t(&[0, 1], &[1.0, 2.0, 3.0, 4.0]);
        let b = t(&[1, 2], &[5.0, 6.0, 7.0, 8.0]);
        let c = contract_pair(&a, &b);
        assert_eq!(c.labels, vec![0, 2]);
        let re: Vec<f64> = c.data.iter().map(|z| z.re).collect();
        assert_eq!(re, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn permute_transposes() {
        let a = t(&[0, 1], &[1.0, 2.0, 3.0, 4.0]);
        let re: Vec<f64> = permute(&a, &[1, 0]).iter().map(|z| z.re).collect();
        assert_eq!(re, [1.0, 3.0, 2.0, 4.0]);
    }
}
