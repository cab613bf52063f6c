//! Qubit-saving rewrites of discourse diagrams.
//!
//! Determiners are identity wires and disappear. One-legged word states that
//! feed a cup into a larger word are bent into effects on that word's leg,
//! which frees the two qubits the cup would have used. Both rewrites
//! preserve the denoted tensor up to a global scalar; [`semantic_check`]
//! measures that.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::circuit::ParamSymbol;
use crate::compile::word_state_gates;
use crate::diagram::{Diagram, Orientation, Port, Pos, Wire};
use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::contract_diagram;

fn renumber_after_removal(p: Port, removed: usize) -> Port {
    match p {
        Port::Leg { bx, leg } if bx > removed => Port::Leg { bx: bx - 1, leg },
        other => other,
    }
}

fn drop_one(d: &mut Diagram, det: usize) -> Result<()> {
    let out_leg = Port::leg(det, 0);
    let in_leg = Port::leg(det, 1);
    let (in_wire, w_in) = d
        .wire_at(in_leg)
        .map(|(i, w)| (i, *w))
        .ok_or_else(|| Error::Diagram(format!("determiner `{}` has no noun to attach to", d.boxes[det].surface)))?;
    let noun_side = w_in.other(in_leg).unwrap();
    let out_wire = d.wire_at(out_leg).map(|(i, w)| (i, *w));

    match out_wire {
        Some((i, w)) => {
            let target = w.other(out_leg).unwrap();
            let states = [noun_side, target]
                .iter()
                .filter(|p| matches!(p, Port::Leg { bx, .. } if d.boxes[*bx].is_state()))
                .count();
            let (hi, lo) = if i > in_wire { (i, in_wire) } else { (in_wire, i) };
            d.wires.remove(hi);
            d.wires.remove(lo);
            d.wires.push(Wire { a: target, b: noun_side, cup: states == 2 });
        }
        None => {
            let slot = d
                .outputs
                .iter()
                .position(|&o| o == out_leg)
                .ok_or_else(|| Error::Diagram(format!("determiner output {out_leg} is dangling")))?;
            d.outputs[slot] = noun_side;
            d.wires.remove(in_wire);
        }
    }

    d.boxes.remove(det);
    for w in &mut d.wires {
        w.a = renumber_after_removal(w.a, det);
        w.b = renumber_after_removal(w.b, det);
    }
    for o in &mut d.outputs {
        *o = renumber_after_removal(*o, det);
    }
    Ok(())
}

/// Replaces every determiner by a plain connection between its neighbours.
pub fn drop_determiners(d: &Diagram) -> Result<Diagram> {
    let mut out = d.clone();
    while let Some(det) = out.boxes.iter().position(|b| b.is_determiner()) {
        let b = &out.boxes[det];
        if b.legs().len() != 2 || b.legs()[0].adjoint != 0 || b.legs()[1].adjoint != -1 {
            return Err(Error::Diagram(format!("determiner `{}` is not typed n/n", b.surface)));
        }
        drop_one(&mut out, det)?;
    }
    Ok(out)
}

fn bendable(d: &Diagram, bx: usize) -> Option<usize> {
    let b = &d.boxes[bx];
    if !b.is_state() || b.legs().len() != 1 || matches!(b.pos, Some(Pos::Noun) | Some(Pos::Determiner)) {
        return None;
    }
    let (i, w) = d.wire_at(Port::leg(bx, 0))?;
    if !w.cup {
        return None;
    }
    match w.other(Port::leg(bx, 0))? {
        Port::Leg { bx: other, .. } if d.boxes[other].is_state() && d.boxes[other].legs().len() >= 2 => Some(i),
        _ => None,
    }
}

/// Bends one-legged non-noun states into effects, right to left, until no
/// such cup remains. Every step removes one cup.
pub fn remove_cups(d: &Diagram) -> Diagram {
    let mut out = d.clone();
    loop {
        let found = (0..out.boxes.len()).rev().find_map(|bx| bendable(&out, bx).map(|w| (bx, w)));
        let Some((bx, w)) = found else {
            return out;
        };
        out.boxes[bx].orientation = Orientation::Effect;
        out.wires[w].cup = false;
    }
}

/// `drop_determiners` followed by `remove_cups`.
pub fn rewrite(d: &Diagram) -> Result<Diagram> {
    Ok(remove_cups(&drop_determiners(d)?))
}

fn symbols_by_orientation(d: &Diagram) -> Result<(BTreeSet<ParamSymbol>, BTreeSet<ParamSymbol>)> {
    let (mut states, mut effects) = (BTreeSet::new(), BTreeSet::new());
    for b in &d.boxes {
        let qubits: Vec<usize> = (0..b.legs().len()).collect();
        let (_, syms) = word_state_gates(b, &qubits)?;
        if b.is_state() {
            states.extend(syms);
        } else {
            effects.extend(syms);
        }
    }
    Ok((states, effects))
}

/// Largest amplitude gap between the two diagrams after normalizing both and
/// fitting one complex scalar by least squares.
///
/// An effect obtained by bending a state denotes the transpose of that state,
/// while its compiled form is the dagger. Since every rotation here satisfies
/// `conj(G(θ)) = G(-θ)`, symbols that are states in `before` and effects in
/// `after` are evaluated at `-θ` on the `after` side.
pub fn semantic_check(before: &Diagram, after: &Diagram, params: &ParamStore) -> Result<f64> {
    let (before_states, _) = symbols_by_orientation(before)?;
    let (after_states, after_effects) = symbols_by_orientation(after)?;
    if let Some(s) = after_states.intersection(&after_effects).next() {
        return Err(Error::Invalid(format!("symbol {s} is used by both a state and an effect")));
    }
    let mut bent = params.clone();
    for s in after_effects.intersection(&before_states) {
        let v = params.get(s).ok_or_else(|| Error::MissingSymbol(s.to_string()))?;
        bent.set(s.clone(), -v);
    }
    let a = contract_diagram(before, params)?;
    let b = contract_diagram(after, &bent)?;
    Ok(scalar_distance(&a, &b))
}

/// `max |â - λ b̂|` for unit vectors `â`, `b̂` and the least-squares `λ`.
pub fn scalar_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a == b {
        return 0.0;
    }
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    let lambda: Complex64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum::<Complex64>() / (na * nb);
    a.iter().zip(b).map(|(x, y)| (x / na - lambda * y / nb).norm()).fold(0.0, f64::max)
}
