//! Gate-level circuit representation with symbolic rotation angles.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::grammar::GrammarType;

/// A trainable angle: the `index`-th parameter of a word used at a given type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamSymbol {
    pub word: String,
    pub gtype: GrammarType,
    pub index: u16,
}

impl ParamSymbol {
    pub fn new(word: &str, gtype: GrammarType, index: u16) -> Self {
        ParamSymbol { word: word.to_string(), gtype, index }
    }
}

impl fmt::Display for ParamSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]{}", self.word.replace(' ', "_"), self.gtype, self.index)
    }
}

/// A symbol with a sign; daggers negate every angle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Angle {
    pub symbol: ParamSymbol,
    pub negated: bool,
}

impl Angle {
    pub fn plus(symbol: ParamSymbol) -> Self {
        Angle { symbol, negated: false }
    }

    pub fn flipped(&self) -> Self {
        Angle { symbol: self.symbol.clone(), negated: !self.negated }
    }

    pub fn sign(&self) -> f64 {
        if self.negated {
            -1.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.negated { '-' } else { '+' }, self.symbol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    Rx,
    Rz,
    /// Controlled RZ: control first, target second.
    Crz,
    /// Control first, target second.
    Cnot,
    /// Project onto |0⟩ and discard the qubit.
    PostSelect0,
}

impl GateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::Crz => "CRZ",
            GateKind::Cnot => "CNOT",
            GateKind::PostSelect0 => "POSTSELECT0",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Crz | GateKind::Cnot => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Rz | GateKind::Crz)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param: Option<Angle>,
}

impl Gate {
    pub fn h(q: usize) -> Gate {
        Gate { kind: GateKind::H, qubits: vec![q], param: None }
    }

    pub fn rx(q: usize, angle: Angle) -> Gate {
        Gate { kind: GateKind::Rx, qubits: vec![q], param: Some(angle) }
    }

    pub fn rz(q: usize, angle: Angle) -> Gate {
        Gate { kind: GateKind::Rz, qubits: vec![q], param: Some(angle) }
    }

    pub fn crz(control: usize, target: usize, angle: Angle) -> Gate {
        Gate { kind: GateKind::Crz, qubits: vec![control, target], param: Some(angle) }
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate { kind: GateKind::Cnot, qubits: vec![control, target], param: None }
    }

    pub fn post_select(q: usize) -> Gate {
        Gate { kind: GateKind::PostSelect0, qubits: vec![q], param: None }
    }

    /// The inverse gate. Post-selection has none.
    pub fn dagger(&self) -> Result<Gate> {
        if self.kind == GateKind::PostSelect0 {
            return Err(Error::Circuit("post-selection has no dagger".into()));
        }
        Ok(Gate { kind: self.kind, qubits: self.qubits.clone(), param: self.param.as_ref().map(Angle::flipped) })
    }

    fn validate(&self) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::Circuit(format!("{} takes {} qubits", self.kind.as_str(), self.kind.arity())));
        }
        if self.kind.arity() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::Circuit(format!("{} on a single qubit {}", self.kind.as_str(), self.qubits[0])));
        }
        if self.kind.is_rotation() != self.param.is_some() {
            return Err(Error::Circuit(format!("{} has a wrong parameter", self.kind.as_str())));
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        if let Some(a) = &self.param {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub qubit_count: usize,
    pub gates: Vec<Gate>,
    pub open_outputs: Vec<usize>,
    pub symbols: BTreeSet<ParamSymbol>,
}

impl Circuit {
    /// Validates the gate list: indices in range, nothing touches a qubit
    /// after it is post-selected, open outputs are never post-selected, and
    /// every qubit ends either open or post-selected.
    pub fn new(qubit_count: usize, gates: Vec<Gate>, open_outputs: Vec<usize>) -> Result<Circuit> {
        let mut selected = vec![false; qubit_count];
        for (i, g) in gates.iter().enumerate() {
            g.validate()?;
            for &q in &g.qubits {
                if q >= qubit_count {
                    return Err(Error::Circuit(format!("gate {i} ({g}) uses qubit {q} of {qubit_count}")));
                }
                if selected[q] {
                    return Err(Error::Circuit(format!("gate {i} ({g}) acts after post-selection of {q}")));
                }
            }
            if g.kind == GateKind::PostSelect0 {
                selected[g.qubits[0]] = true;
            }
        }
        let mut seen = HashSet::new();
        for &q in &open_outputs {
            if q >= qubit_count || selected[q] || !seen.insert(q) {
                return Err(Error::Circuit(format!("invalid open output {q}")));
            }
        }
        if let Some(q) = (0..qubit_count).find(|&q| !selected[q] && !seen.contains(&q)) {
            return Err(Error::Circuit(format!("qubit {q} is neither open nor post-selected")));
        }
        let symbols = gates.iter().filter_map(|g| g.param.as_ref()).map(|a| a.symbol.clone()).collect();
        Ok(Circuit { qubit_count, gates, open_outputs, symbols })
    }

    pub fn post_selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.gates.iter().filter(|g| g.kind == GateKind::PostSelect0).map(|g| g.qubits[0])
    }

    /// Debug form, one gate per line after a header.
    pub fn render(&self) -> String {
        let open: Vec<String> = self.open_outputs.iter().map(|q| q.to_string()).collect();
        let mut s = format!("# qubits {} open [{}]\n", self.qubit_count, open.join(" "));
        for g in &self.gates {
            let _ = writeln!(s, "{g}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(i: u16) -> Angle {
        Angle::plus(ParamSymbol::new("books", GrammarType::n(), i))
    }

    #[test]
    fn render_format() {
        let c = Circuit::new(
            2,
            vec![Gate::rx(0, sym(0)), Gate::rz(0, sym(1).flipped()), Gate::cnot(0, 1), Gate::post_select(1)],
            vec![0],
        )
        .unwrap();
        assert_eq!(c.render(), "# qubits 2 open [0]\nRX 0 +books[n]0\nRZ 0 -books[n]1\nCNOT 0 1\nPOSTSELECT0 1\n");
        assert_eq!(c.symbols.len(), 2);
    }

    #[test]
    fn rejects_gates_after_post_selection() {
        let r = Circuit::new(1, vec![Gate::post_select(0), Gate::h(0)], vec![]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_open_post_selected_and_dangling() {
        assert!(Circuit::new(1, vec![Gate::post_select(0)], vec![0]).is_err());
        assert!(Circuit::new(2, vec![], vec![0]).is_err());
        assert!(Circuit::new(2, vec![Gate::cnot(1, 1)], vec![0, 1]).is_err());
        assert!(Circuit::new(1, vec![Gate::h(3)], vec![0]).is_err());
    }

    #[test]
    fn rotations_need_exactly_one_symbol() {
        let bad = Gate { kind: GateKind::Rx, qubits: vec![0], param: None };
        assert!(Circuit::new(1, vec![bad], vec![0]).is_err());
        let bad = Gate { kind: GateKind::H, qubits: vec![0], param: Some(sym(0)) };
        assert!(Circuit::new(1, vec![bad], vec![0]).is_err());
    }
}
