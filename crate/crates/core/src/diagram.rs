//! Typed string diagrams stored as port graphs.
//!
//! Boxes are words, each with one leg per simple type in its unfolded
//! grammatical type. Wires join two ports; a wire flagged as a cup is a
//! grammatical contraction between two word states. Merge nodes are the
//! Frobenius multiplication joining two sentence wires into one.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Atom, GrammarType, SimpleType};

/// Part of speech of a lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pos {
    Noun,
    Adjective,
    Verb,
    Copula,
    Pronoun,
    Determiner,
    /// Complement of a copula: predicate adjective or gerund phrase.
    Predicate,
}

impl Pos {
    pub const ALL: [Pos; 7] =
        [Pos::Noun, Pos::Adjective, Pos::Verb, Pos::Copula, Pos::Pronoun, Pos::Determiner, Pos::Predicate];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Adjective => "adjective",
            Pos::Verb => "verb",
            Pos::Copula => "copula",
            Pos::Pronoun => "pronoun",
            Pos::Determiner => "determiner",
            Pos::Predicate => "predicate",
        }
    }

    pub fn parse(s: &str) -> Option<Pos> {
        Pos::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Prepares its legs.
    State,
    /// Dagger of the state: consumes its legs.
    Effect,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordBox {
    pub surface: String,
    pub gtype: GrammarType,
    pub pos: Option<Pos>,
    pub orientation: Orientation,
    legs: Vec<SimpleType>,
}

/// Builds a word state of the given type.
pub fn make_word(surface: &str, gtype: GrammarType) -> Result<WordBox> {
    gtype.validate()?;
    let legs = gtype.unfold();
    Ok(WordBox { surface: surface.to_string(), gtype, pos: None, orientation: Orientation::State, legs })
}

impl WordBox {
    pub fn with_pos(mut self, pos: Pos) -> Self {
        self.pos = Some(pos);
        self
    }

    pub fn legs(&self) -> &[SimpleType] {
        &self.legs
    }

    /// Adjoint legs: the arguments the word consumes grammatically.
    pub fn in_arity(&self) -> usize {
        self.legs.iter().filter(|l| l.adjoint != 0).count()
    }

    pub fn out_arity(&self) -> usize {
        self.legs.iter().filter(|l| l.adjoint == 0).count()
    }

    pub fn is_state(&self) -> bool {
        self.orientation == Orientation::State
    }

    pub fn is_determiner(&self) -> bool {
        self.pos == Some(Pos::Determiner)
    }

    /// Re-type the box, e.g. promote a noun to `!2n`; legs are re-derived.
    pub(crate) fn retype(&mut self, gtype: GrammarType) -> Result<()> {
        gtype.validate()?;
        self.legs = gtype.unfold();
        self.gtype = gtype;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    Leg { bx: usize, leg: usize },
    MergeIn { merge: usize, slot: u8 },
    MergeOut { merge: usize },
}

impl Port {
    pub fn leg(bx: usize, leg: usize) -> Port {
        Port::Leg { bx, leg }
    }

    fn shifted(self, boxes: usize, merges: usize) -> Port {
        match self {
            Port::Leg { bx, leg } => Port::Leg { bx: bx + boxes, leg },
            Port::MergeIn { merge, slot } => Port::MergeIn { merge: merge + merges, slot },
            Port::MergeOut { merge } => Port::MergeOut { merge: merge + merges },
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::Leg { bx, leg } => write!(f, "b{bx}.{leg}"),
            Port::MergeIn { merge, slot } => write!(f, "m{merge}.in{slot}"),
            Port::MergeOut { merge } => write!(f, "m{merge}.out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Wire {
    pub a: Port,
    pub b: Port,
    /// Grammatical contraction between two word states.
    pub cup: bool,
}

impl Wire {
    pub fn other(&self, p: Port) -> Option<Port> {
        if self.a == p {
            Some(self.b)
        } else if self.b == p {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagram {
    pub boxes: Vec<WordBox>,
    pub wires: Vec<Wire>,
    pub merges: usize,
    pub outputs: Vec<Port>,
}

impl Diagram {
    pub fn empty() -> Self {
        Diagram::default()
    }

    /// A single word with every leg left open.
    pub fn word(w: WordBox) -> Self {
        let outputs = (0..w.legs.len()).map(|l| Port::leg(0, l)).collect();
        Diagram { boxes: vec![w], wires: Vec::new(), merges: 0, outputs }
    }

    /// Disjoint union; `other`'s indices are shifted past ours.
    pub fn juxtapose(mut self, other: Diagram) -> Diagram {
        let (nb, nm) = (self.boxes.len(), self.merges);
        self.boxes.extend(other.boxes);
        self.wires.extend(other.wires.into_iter().map(|w| Wire {
            a: w.a.shifted(nb, nm),
            b: w.b.shifted(nb, nm),
            cup: w.cup,
        }));
        self.merges += other.merges;
        self.outputs.extend(other.outputs.into_iter().map(|p| p.shifted(nb, nm)));
        self
    }

    pub fn port_type(&self, p: Port) -> Result<SimpleType> {
        match p {
            Port::Leg { bx, leg } => {
                let b = self.boxes.get(bx).ok_or(Error::Index { what: "boxes", index: bx, len: self.boxes.len() })?;
                b.legs.get(leg).copied().ok_or(Error::Index { what: "legs", index: leg, len: b.legs.len() })
            }
            Port::MergeIn { merge, .. } | Port::MergeOut { merge } => {
                if merge >= self.merges {
                    return Err(Error::Index { what: "merges", index: merge, len: self.merges });
                }
                Ok(SimpleType::plain(Atom::S))
            }
        }
    }

    pub fn wire_at(&self, p: Port) -> Option<(usize, &Wire)> {
        self.wires.iter().enumerate().find(|(_, w)| w.a == p || w.b == p)
    }

    pub fn partner(&self, p: Port) -> Option<Port> {
        self.wire_at(p).and_then(|(_, w)| w.other(p))
    }

    /// Contracts two open outputs with a cup.
    pub fn add_cup(&mut self, a: Port, b: Port) -> Result<()> {
        for p in [a, b] {
            let idx = self
                .outputs
                .iter()
                .position(|&o| o == p)
                .ok_or_else(|| Error::Composition(format!("port {p} is not an open output")))?;
            self.outputs.remove(idx);
        }
        self.wires.push(Wire { a, b, cup: true });
        Ok(())
    }

    /// Joins two open sentence outputs through a new merge node whose output
    /// is appended to the open outputs.
    pub(crate) fn add_merge(&mut self, left: Port, right: Port) -> Result<usize> {
        let m = self.merges;
        self.merges += 1;
        for (slot, p) in [left, right].into_iter().enumerate() {
            let ty = self.port_type(p)?;
            if ty != SimpleType::plain(Atom::S) {
                return Err(Error::Composition(format!("cannot merge {p} of type {ty}")));
            }
            let idx = self
                .outputs
                .iter()
                .position(|&o| o == p)
                .ok_or_else(|| Error::Composition(format!("port {p} is not an open output")))?;
            self.outputs.remove(idx);
            self.wires.push(Wire { a: p, b: Port::MergeIn { merge: m, slot: slot as u8 }, cup: false });
        }
        self.outputs.push(Port::MergeOut { merge: m });
        Ok(m)
    }

    /// The single open output of sentence type, if the diagram has one.
    pub fn sentence_output(&self) -> Option<Port> {
        let mut found = None;
        for &p in &self.outputs {
            if self.port_type(p).ok() == Some(SimpleType::plain(Atom::S)) {
                if found.is_some() {
                    return None;
                }
                found = Some(p);
            }
        }
        found
    }

    /// Number of legs prepared by word states; the qubit count of the
    /// compiled circuit at one qubit per atom.
    pub fn state_legs(&self) -> usize {
        self.boxes.iter().filter(|b| b.is_state()).map(|b| b.legs.len()).sum()
    }

    pub fn cup_count(&self) -> usize {
        self.wires.iter().filter(|w| w.cup).count()
    }

    /// Checks port usage and wire typing; returns the types of the open outputs.
    pub fn check_wiring(&self) -> Result<Vec<SimpleType>> {
        let mut uses: HashMap<Port, usize> = HashMap::new();
        for w in &self.wires {
            *uses.entry(w.a).or_default() += 1;
            *uses.entry(w.b).or_default() += 1;
        }
        for &o in &self.outputs {
            *uses.entry(o).or_default() += 1;
        }
        let mut all_ports = Vec::new();
        for (bx, b) in self.boxes.iter().enumerate() {
            all_ports.extend((0..b.legs.len()).map(|leg| Port::leg(bx, leg)));
        }
        for m in 0..self.merges {
            all_ports.push(Port::MergeIn { merge: m, slot: 0 });
            all_ports.push(Port::MergeIn { merge: m, slot: 1 });
            all_ports.push(Port::MergeOut { merge: m });
        }
        for p in &all_ports {
            match uses.get(p).copied().unwrap_or(0) {
                1 => {}
                0 => return Err(Error::Diagram(format!("port {p} is not connected"))),
                k => return Err(Error::Diagram(format!("port {p} is connected {k} times"))),
            }
        }
        if uses.len() != all_ports.len() {
            let stray = uses.keys().find(|p| !all_ports.contains(p)).unwrap();
            return Err(Error::Diagram(format!("port {stray} does not exist")));
        }

        for w in &self.wires {
            self.check_wire(w)?;
        }

        let mut out = Vec::with_capacity(self.outputs.len());
        for &p in &self.outputs {
            if let Port::Leg { bx, .. } = p {
                if !self.boxes[bx].is_state() {
                    return Err(Error::Diagram(format!("effect leg {p} left open")));
                }
            }
            if let Port::MergeIn { .. } = p {
                return Err(Error::Diagram(format!("merge input {p} left open")));
            }
            out.push(self.port_type(p)?);
        }
        Ok(out)
    }

    fn check_wire(&self, w: &Wire) -> Result<()> {
        let (ta, tb) = (self.port_type(w.a)?, self.port_type(w.b)?);
        let mismatch =
            || Error::Typing { wire: format!("{} -- {}", w.a, w.b), left: ta.to_string(), right: tb.to_string() };
        match (w.a, w.b) {
            (Port::Leg { bx: x, .. }, Port::Leg { bx: y, .. }) => {
                if !ta.contracts_with(tb) {
                    return Err(mismatch());
                }
                let states = [x, y].iter().filter(|&&b| self.boxes[b].is_state()).count();
                let ok = if w.cup { states == 2 } else { states == 1 };
                if !ok {
                    return Err(Error::Diagram(format!(
                        "wire {} -- {} joins {} states but is{} a cup",
                        w.a,
                        w.b,
                        states,
                        if w.cup { "" } else { " not" }
                    )));
                }
            }
            (a, b) => {
                if w.cup {
                    return Err(Error::Diagram(format!("cup {a} -- {b} touches a merge node")));
                }
                if ta != tb {
                    return Err(mismatch());
                }
                let into_merge = matches!(a, Port::MergeIn { .. }) ^ matches!(b, Port::MergeIn { .. });
                if !into_merge {
                    return Err(Error::Diagram(format!("wire {a} -- {b} must feed a merge input")));
                }
                for p in [a, b] {
                    if let Port::Leg { bx, .. } = p {
                        if !self.boxes[bx].is_state() {
                            return Err(Error::Diagram(format!("effect leg {p} feeds a merge")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Accepts iff the wiring is well typed and the composite reduces to `s`
    /// (or to nothing, for the empty diagram).
    pub fn check_types(&self) -> Result<()> {
        let out = self.check_wiring()?;
        match out.as_slice() {
            [] => Ok(()),
            [t] if *t == SimpleType::plain(Atom::S) => Ok(()),
            _ => Err(Error::Diagram(format!(
                "diagram reduces to [{}], expected s",
                out.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Line-oriented debug form: one box, wire or output per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, b) in self.boxes.iter().enumerate() {
            let pos = b.pos.map(Pos::as_str).unwrap_or("-");
            let orient = if b.is_state() { "state" } else { "effect" };
            let legs: Vec<String> = b.legs.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(s, "box b{i} {orient} {pos} {} [{}] {:?}", b.gtype, legs.join(" "), b.surface);
        }
        for m in 0..self.merges {
            let _ = writeln!(s, "merge m{m}");
        }
        for w in &self.wires {
            let kind = if w.cup { "cup" } else { "wire" };
            let _ = writeln!(s, "{kind} {} {}", w.a, w.b);
        }
        for o in &self.outputs {
            let _ = writeln!(s, "out {o}");
        }
        s
    }
}

/// Joins two closed sentence diagrams through a merge node.
///
/// Each input must have exactly one open output, of type `s`.
pub fn merge_sentences(d1: Diagram, d2: Diagram) -> Result<Diagram> {
    for (name, d) in [("first", &d1), ("second", &d2)] {
        if d.outputs.len() != 1 || d.sentence_output().is_none() {
            return Err(Error::Composition(format!(
                "{name} diagram must have exactly one open s output, has {} open outputs",
                d.outputs.len()
            )));
        }
    }
    let (left, nb, nm) = (d1.outputs[0], d1.boxes.len(), d1.merges);
    let right = d2.outputs[0].shifted(nb, nm);
    let mut d = d1.juxtapose(d2);
    d.add_merge(left, right)?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(s: &str) -> GrammarType {
        s.parse().unwrap()
    }

    fn svo(subj: &str, verb: &str, obj: &str) -> Diagram {
        let d = Diagram::word(make_word(subj, ty("n")).unwrap())
            .juxtapose(Diagram::word(make_word(verb, ty("(n\\s)/n")).unwrap()))
            .juxtapose(Diagram::word(make_word(obj, ty("n")).unwrap()));
        let mut d = d;
        d.add_cup(Port::leg(0, 0), Port::leg(1, 0)).unwrap();
        d.add_cup(Port::leg(1, 2), Port::leg(2, 0)).unwrap();
        d
    }

    #[test]
    fn word_arities() {
        let books = make_word("books", ty("n")).unwrap();
        assert_eq!((books.in_arity(), books.out_arity()), (0, 1));
        let read = make_word("read", ty("(n\\s)/n")).unwrap();
        assert_eq!((read.in_arity(), read.out_arity()), (2, 1));
        assert_eq!(read.legs().len(), 3);
        let students = make_word("the students", ty("!2n")).unwrap();
        assert_eq!((students.in_arity(), students.out_arity()), (0, 2));
        let they = make_word("they", ty("n\\n")).unwrap();
        assert_eq!((they.in_arity(), they.out_arity()), (1, 1));
    }

    #[test]
    fn make_word_rejects_invalid_type() {
        let nested = GrammarType::Bang(Box::new(GrammarType::Bang(Box::new(GrammarType::n()), 2)), 2);
        assert!(matches!(make_word("x", nested), Err(Error::Type(_))));
    }

    #[test]
    fn svo_reduces_to_s() {
        let d = svo("students", "read", "books");
        d.check_types().unwrap();
        assert_eq!(d.outputs, vec![Port::leg(1, 1)]);
    }

    #[test]
    fn cup_between_n_and_s_is_a_typing_error() {
        let mut d =
            Diagram::word(make_word("a", ty("n")).unwrap()).juxtapose(Diagram::word(make_word("b", ty("s")).unwrap()));
        d.wires.push(Wire { a: Port::leg(0, 0), b: Port::leg(1, 0), cup: true });
        d.outputs.clear();
        match d.check_types() {
            Err(Error::Typing { left, right, .. }) => assert_eq!((left.as_str(), right.as_str()), ("n", "s")),
            other => panic!("expected typing error, got {other:?}"),
        }
    }

    #[test]
    fn empty_diagram_is_well_typed() {
        let d = Diagram::empty();
        assert!(d.check_wiring().unwrap().is_empty());
        d.check_types().unwrap();
    }

    #[test]
    fn dangling_port_is_reported() {
        let mut d = svo("a", "b", "c");
        d.outputs.clear();
        assert!(matches!(d.check_wiring(), Err(Error::Diagram(_))));
    }

    #[test]
    fn merge_two_sentences() {
        let d = merge_sentences(svo("a", "b", "c"), svo("d", "e", "f")).unwrap();
        d.check_types().unwrap();
        assert_eq!(d.outputs, vec![Port::MergeOut { merge: 0 }]);
        assert_eq!(d.merges, 1);
        assert_eq!(d.boxes.len(), 6);
    }

    #[test]
    fn merge_rejects_extra_outputs() {
        let two_open = Diagram::word(make_word("they", ty("n\\s")).unwrap());
        assert!(merge_sentences(two_open, svo("a", "b", "c")).is_err());
        let noun = Diagram::word(make_word("books", ty("n")).unwrap());
        assert!(merge_sentences(svo("a", "b", "c"), noun).is_err());
    }

    #[test]
    fn render_lists_every_element() {
        let d = svo("students", "read", "books");
        let r = d.render();
        assert_eq!(r.lines().count(), 3 + 2 + 1);
        assert!(r.contains("box b1 state - (n\\s)/n [nr s nl] \"read\""));
        assert!(r.contains("cup b1.2 b2.0"));
    }
}
