//! Diagram to circuit translation with the single-layer IQP ansatz.
//!
//! Each atomic wire gets one qubit. A word on one qubit is prepared by
//! `RX, RZ, RX`; a word on `k >= 2` qubits by a Hadamard on each qubit
//! followed by a chain of controlled-RZ rotations. Effects are daggers of
//! states followed by post-selection, cups are Bell effects and the sentence
//! merge is a CNOT with its target post-selected.
//!
//! Gates are emitted in an order that consumes qubits as early as possible,
//! which keeps the number of simultaneously live qubits small.

use std::collections::HashMap;

use crate::circuit::{Angle, Circuit, Gate, ParamSymbol};
use crate::data::Entry;
use crate::diagram::{Diagram, Port, Pos, WordBox};
use crate::error::{Error, Result};
use crate::grammar::{Atom, GrammarType};
use crate::parser::{parse_sentence, tokenize, Lexicon};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileOptions {
    pub qubits_n: usize,
    pub qubits_s: usize,
    /// IQP layers for words on two or more qubits.
    pub layers: usize,
    /// Close each multi-qubit word block with a Hadamard on every qubit.
    pub closing_hadamards: bool,
    /// Maximum number of qubits in the compiled circuit.
    pub max_qubits: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { qubits_n: 1, qubits_s: 1, layers: 1, closing_hadamards: true, max_qubits: 20 }
    }
}

impl CompileOptions {
    fn validate(&self) -> Result<()> {
        if self.qubits_n != 1 || self.qubits_s != 1 {
            return Err(Error::Invalid("only one qubit per atomic type is supported".into()));
        }
        if self.layers == 0 {
            return Err(Error::Invalid("at least one ansatz layer is required".into()));
        }
        Ok(())
    }

    pub fn qubits_for(&self, atom: Atom) -> usize {
        match atom {
            Atom::N => self.qubits_n,
            Atom::S => self.qubits_s,
        }
    }
}

fn symbol(word: &WordBox, index: usize) -> ParamSymbol {
    ParamSymbol::new(&word.surface, word.gtype.clone(), index as u16)
}

/// Gates preparing `word` on fresh qubits, and the symbols they use.
///
/// Determiners carry no parameters: they are prepared as the (unnormalized)
/// identity wire, a Bell pair.
pub fn word_state_gates(word: &WordBox, qubits: &[usize]) -> Result<(Vec<Gate>, Vec<ParamSymbol>)> {
    word_state_gates_layered(word, qubits, 1, true)
}

/// Multi-qubit words get `layers` rounds of Hadamards and a CRZ chain,
/// then one more round of Hadamards when `closing` is set.
pub fn word_state_gates_layered(
    word: &WordBox,
    qubits: &[usize],
    layers: usize,
    closing: bool,
) -> Result<(Vec<Gate>, Vec<ParamSymbol>)> {
    match qubits {
        [] => Err(Error::Invalid(format!("word `{}` needs at least one qubit", word.surface))),
        [q0, q1] if word.is_determiner() => Ok((vec![Gate::h(*q0), Gate::cnot(*q0, *q1)], Vec::new())),
        &[q] => {
            let syms: Vec<ParamSymbol> = (0..3).map(|i| symbol(word, i)).collect();
            let gates = vec![
                Gate::rx(q, Angle::plus(syms[0].clone())),
                Gate::rz(q, Angle::plus(syms[1].clone())),
                Gate::rx(q, Angle::plus(syms[2].clone())),
            ];
            Ok((gates, syms))
        }
        qs => {
            let mut gates = Vec::new();
            let mut syms = Vec::new();
            for _ in 0..layers {
                gates.extend(qs.iter().map(|&q| Gate::h(q)));
                for pair in qs.windows(2) {
                    let s = symbol(word, syms.len());
                    gates.push(Gate::crz(pair[0], pair[1], Angle::plus(s.clone())));
                    syms.push(s);
                }
            }
            if closing {
                gates.extend(qs.iter().map(|&q| Gate::h(q)));
            }
            Ok((gates, syms))
        }
    }
}

/// The dagger of the word state, then post-selection of every qubit.
pub fn effect_gates(word: &WordBox, qubits: &[usize]) -> Result<Vec<Gate>> {
    effect_gates_layered(word, qubits, 1, true)
}

pub fn effect_gates_layered(word: &WordBox, qubits: &[usize], layers: usize, closing: bool) -> Result<Vec<Gate>> {
    let (state, _) = word_state_gates_layered(word, qubits, layers, closing)?;
    let mut gates = state.iter().rev().map(Gate::dagger).collect::<Result<Vec<_>>>()?;
    gates.extend(qubits.iter().map(|&q| Gate::post_select(q)));
    Ok(gates)
}

/// Bell effect on two qubits, up to a factor of `1/sqrt(2)`.
pub fn cup_gates(q1: usize, q2: usize) -> Result<Vec<Gate>> {
    if q1 == q2 {
        return Err(Error::Invalid(format!("cup on a single qubit {q1}")));
    }
    Ok(vec![Gate::cnot(q1, q2), Gate::h(q1), Gate::post_select(q1), Gate::post_select(q2)])
}

/// Frobenius multiplication of two sentence qubits; `q1` stays open.
pub fn merge_gates(q1: usize, q2: usize) -> Result<Vec<Gate>> {
    if q1 == q2 {
        return Err(Error::Invalid(format!("merge on a single qubit {q1}")));
    }
    Ok(vec![Gate::cnot(q1, q2), Gate::post_select(q2)])
}

struct Emitter<'a> {
    d: &'a Diagram,
    opts: &'a CompileOptions,
    qubit_of: HashMap<Port, usize>,
    next_qubit: usize,
    gates: Vec<Gate>,
    cup_done: Vec<bool>,
    effect_done: Vec<bool>,
    merge_done: Vec<bool>,
}

impl Emitter<'_> {
    fn prepare(&mut self, bx: usize) -> Result<()> {
        let word = &self.d.boxes[bx];
        let mut qubits = Vec::with_capacity(word.legs().len());
        for leg in 0..word.legs().len() {
            qubits.push(self.next_qubit);
            self.qubit_of.insert(Port::leg(bx, leg), self.next_qubit);
            self.next_qubit += 1;
        }
        let (gates, _) = word_state_gates_layered(word, &qubits, self.opts.layers, self.opts.closing_hadamards)?;
        self.gates.extend(gates);
        Ok(())
    }

    /// Qubit carried into `p` by whatever feeds it.
    fn incoming(&self, p: Port) -> Option<usize> {
        let src = self.d.partner(p)?;
        self.qubit_of.get(&src).copied()
    }

    fn flush(&mut self) -> Result<()> {
        loop {
            let mut progressed = false;
            for (i, w) in self.d.wires.iter().enumerate() {
                if !w.cup || self.cup_done[i] {
                    continue;
                }
                if let (Some(&a), Some(&b)) = (self.qubit_of.get(&w.a), self.qubit_of.get(&w.b)) {
                    self.gates.extend(cup_gates(a, b)?);
                    self.cup_done[i] = true;
                    progressed = true;
                }
            }
            for (bx, word) in self.d.boxes.iter().enumerate() {
                if word.is_state() || self.effect_done[bx] {
                    continue;
                }
                let inputs: Option<Vec<usize>> =
                    (0..word.legs().len()).map(|l| self.incoming(Port::leg(bx, l))).collect();
                if let Some(qs) = inputs {
                    self.gates.extend(effect_gates_layered(word, &qs, self.opts.layers, self.opts.closing_hadamards)?);
                    self.effect_done[bx] = true;
                    progressed = true;
                }
            }
            for m in 0..self.d.merges {
                if self.merge_done[m] {
                    continue;
                }
                let left = self.incoming(Port::MergeIn { merge: m, slot: 0 });
                let right = self.incoming(Port::MergeIn { merge: m, slot: 1 });
                if let (Some(l), Some(r)) = (left, right) {
                    self.gates.extend(merge_gates(l, r)?);
                    self.qubit_of.insert(Port::MergeOut { merge: m }, l);
                    self.merge_done[m] = true;
                    progressed = true;
                }
            }
            if !progressed {
                return Ok(());
            }
        }
    }
}

/// Compiles a well-typed diagram.
pub fn compile_diagram(d: &Diagram, opts: &CompileOptions) -> Result<Circuit> {
    opts.validate()?;
    d.check_wiring()?;
    let needed = d.state_legs();
    if needed > opts.max_qubits {
        return Err(Error::Capacity { what: "compiled circuit qubits", needed, cap: opts.max_qubits });
    }
    let mut e = Emitter {
        d,
        opts,
        qubit_of: HashMap::new(),
        next_qubit: 0,
        gates: Vec::new(),
        cup_done: vec![false; d.wires.len()],
        effect_done: vec![false; d.boxes.len()],
        merge_done: vec![false; d.merges],
    };
    for bx in 0..d.boxes.len() {
        if d.boxes[bx].is_state() {
            e.prepare(bx)?;
            e.flush()?;
        }
    }
    if d.boxes.iter().all(|b| !b.is_state()) {
        e.flush()?;
    }
    let pending = e.cup_done.iter().enumerate().any(|(i, &done)| d.wires[i].cup && !done)
        || e.effect_done.iter().enumerate().any(|(i, &done)| !d.boxes[i].is_state() && !done)
        || e.merge_done.iter().any(|&done| !done);
    if pending {
        return Err(Error::Diagram("diagram has a cycle through effects or merges".into()));
    }
    let open = d
        .outputs
        .iter()
        .map(|p| e.qubit_of.get(p).copied().ok_or_else(|| Error::Diagram(format!("open output {p} has no qubit"))))
        .collect::<Result<Vec<_>>>()?;
    Circuit::new(e.next_qubit, e.gates, open)
}

/// Bag-of-words circuit: one qubit per word prepared by the one-qubit block,
/// folded left to right by Frobenius merges; the last qubit stays open.
pub fn compile_bow_words<S: AsRef<str>>(words: &[S]) -> Result<Circuit> {
    if words.is_empty() {
        return Err(Error::Invalid("bag of words is empty".into()));
    }
    let mut gates = Vec::new();
    for (q, w) in words.iter().enumerate() {
        let word = bow_word(w.as_ref())?;
        gates.extend(word_state_gates(&word, &[q])?.0);
        if q > 0 {
            gates.push(Gate::cnot(q, q - 1));
            gates.push(Gate::post_select(q - 1));
        }
    }
    Circuit::new(words.len(), gates, vec![words.len() - 1])
}

/// Content words of an entry, with the pronoun replaced by the candidate noun.
pub fn bow_words(entry: &Entry, lex: &Lexicon) -> Result<Vec<String>> {
    let mut words = Vec::new();
    let pronoun = entry.pronoun.to_lowercase();
    for sentence in [&entry.s1, &entry.s2] {
        let d = parse_sentence(&tokenize(sentence), lex)?;
        for b in &d.boxes {
            match b.pos {
                Some(Pos::Determiner) => {}
                Some(Pos::Pronoun) if b.surface == pronoun => words.push(entry.noun.to_lowercase()),
                _ => words.push(b.surface.clone()),
            }
        }
    }
    Ok(words)
}

pub fn compile_bow(entry: &Entry, lex: &Lexicon) -> Result<Circuit> {
    compile_bow_words(&bow_words(entry, lex)?)
}

/// A word as seen by the bag-of-words model: one wire regardless of type.
fn bow_word(surface: &str) -> Result<WordBox> {
    crate::diagram::make_word(surface, GrammarType::n())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::diagram::make_word;

    fn word(s: &str, t: &str) -> WordBox {
        make_word(s, t.parse().unwrap()).unwrap()
    }

    fn rendered(gates: &[Gate]) -> Vec<String> {
        gates.iter().map(|g| g.to_string()).collect()
    }

    #[test]
    fn one_qubit_block_has_three_rotations() {
        let (g, s) = word_state_gates(&word("books", "n"), &[4]).unwrap();
        assert_eq!(rendered(&g), ["RX 4 +books[n]0", "RZ 4 +books[n]1", "RX 4 +books[n]2"]);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn multi_qubit_blocks() {
        let (g, s) = word_state_gates(&word("students", "!2n"), &[0, 1]).unwrap();
        assert_eq!(rendered(&g), ["H 0", "H 1", "CRZ 0 1 +students[!2n]0", "H 0", "H 1"]);
        assert_eq!(s.len(), 1);
        let (g, _) = word_state_gates_layered(&word("students", "!2n"), &[0, 1], 1, false).unwrap();
        assert_eq!(rendered(&g), ["H 0", "H 1", "CRZ 0 1 +students[!2n]0"]);
        let (g, s) = word_state_gates(&word("read", "(n\\s)/n"), &[2, 3, 4]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(g.iter().filter(|g| g.kind == GateKind::Crz).count(), 2);
        assert!(word_state_gates(&word("read", "(n\\s)/n"), &[]).is_err());
    }

    #[test]
    fn layers_repeat_the_block() {
        let (_, s) = word_state_gates_layered(&word("read", "(n\\s)/n"), &[0, 1, 2], 2, true).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[3].index, 3);
    }

    #[test]
    fn determiner_is_a_parameterless_bell_pair() {
        let the = word("the", "n/n").with_pos(Pos::Determiner);
        let (g, s) = word_state_gates(&the, &[0, 1]).unwrap();
        assert_eq!(rendered(&g), ["H 0", "CNOT 0 1"]);
        assert!(s.is_empty());
    }

    #[test]
    fn effect_is_reversed_and_negated() {
        let g = effect_gates(&word("learning", "n"), &[7]).unwrap();
        assert_eq!(rendered(&g), ["RX 7 -learning[n]2", "RZ 7 -learning[n]1", "RX 7 -learning[n]0", "POSTSELECT0 7"]);
        let g = effect_gates(&word("they", "n\\n"), &[0, 1]).unwrap();
        assert_eq!(
            rendered(&g),
            ["H 1", "H 0", "CRZ 0 1 -they[n\\n]0", "H 1", "H 0", "POSTSELECT0 0", "POSTSELECT0 1"]
        );
    }

    #[test]
    fn cup_and_merge_shapes() {
        assert_eq!(rendered(&cup_gates(0, 1).unwrap()), ["CNOT 0 1", "H 0", "POSTSELECT0 0", "POSTSELECT0 1"]);
        assert!(cup_gates(2, 2).is_err());
        assert_eq!(rendered(&merge_gates(3, 5).unwrap()), ["CNOT 3 5", "POSTSELECT0 5"]);
        assert!(merge_gates(1, 1).is_err());
    }

    #[test]
    fn single_word_circuit() {
        let c = compile_diagram(&Diagram::word(word("books", "n")), &CompileOptions::default()).unwrap();
        assert_eq!(c.qubit_count, 1);
        assert_eq!(c.gates.len(), 3);
        assert_eq!(c.post_selected().count(), 0);
        assert_eq!(c.open_outputs, [0]);
    }

    #[test]
    fn capacity_is_enforced() {
        let opts = CompileOptions { max_qubits: 2, ..Default::default() };
        let d = Diagram::word(word("read", "(n\\s)/n"));
        assert!(matches!(compile_diagram(&d, &opts), Err(Error::Capacity { needed: 3, cap: 2, .. })));
        let opts = CompileOptions { qubits_n: 2, ..Default::default() };
        assert!(compile_diagram(&d, &opts).is_err());
    }

    #[test]
    fn bag_of_words_shape() {
        let words = ["students", "read", "books", "students", "were", "learning"];
        let c = compile_bow_words(&words).unwrap();
        assert_eq!(c.qubit_count, 6);
        assert_eq!(c.symbols.len(), 15); // "students" occurs twice and shares its block
        let rotations = c.gates.iter().filter(|g| g.kind.is_rotation()).count();
        assert_eq!(rotations, 18);
        assert_eq!(c.gates.iter().filter(|g| g.kind == GateKind::Cnot).count(), 5);
        assert_eq!(c.open_outputs, [5]);
        assert_eq!(c.post_selected().count(), 5);

        let distinct = compile_bow_words(&["students", "read", "books", "they", "were", "learning"]).unwrap();
        assert_eq!(distinct.symbols.len(), 18);

        let one = compile_bow_words(&["books"]).unwrap();
        assert_eq!(one.gates.iter().filter(|g| g.kind == GateKind::Cnot).count(), 0);
        assert_eq!(compile_bow_words(&words).unwrap(), c);
    }
}
