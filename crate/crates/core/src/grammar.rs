//! Categorial types for words and their pregroup unfolding into legs.
//!
//! A type is built from the atoms `n` and `s` with the Lambek connectives
//! `A\B`, `A/B`, `A.B` and the bounded copy modality `!kA`. Unfolding turns a
//! type into the ordered list of simple types (atom plus adjoint order) that
//! become the legs of a word box.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default copy bound. Two copies suffice for one in-sentence use and one pronoun.
pub const DEFAULT_BANG_BOUND: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    N,
    S,
}

impl Atom {
    pub fn as_str(self) -> &'static str {
        match self {
            Atom::N => "n",
            Atom::S => "s",
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GrammarType {
    Atomic(Atom),
    /// `left/right`: seeks `right` on its right.
    Over(Box<GrammarType>, Box<GrammarType>),
    /// `left\right`: seeks `left` on its left.
    Under(Box<GrammarType>, Box<GrammarType>),
    Prod(Box<GrammarType>, Box<GrammarType>),
    Bang(Box<GrammarType>, u8),
}

/// A pregroup simple type: an atom with an adjoint order.
///
/// Order `0` is the plain atom, `-1` its left adjoint and `+1` its right
/// adjoint. Two legs contract when they share an atom and their orders differ
/// by exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimpleType {
    pub atom: Atom,
    pub adjoint: i8,
}

impl SimpleType {
    pub fn plain(atom: Atom) -> Self {
        SimpleType { atom, adjoint: 0 }
    }

    pub fn contracts_with(self, other: SimpleType) -> bool {
        self.atom == other.atom && (self.adjoint - other.adjoint).abs() == 1
    }

    /// Whether `self` placed left of `right` reduces by a cup (`x^l x` or `x x^r`).
    pub fn reduces_left_of(self, right: SimpleType) -> bool {
        self.atom == right.atom && right.adjoint == self.adjoint + 1
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.atom)?;
        match self.adjoint {
            0 => Ok(()),
            z if z < 0 => f.write_str(&"l".repeat((-z) as usize)),
            z => f.write_str(&"r".repeat(z as usize)),
        }
    }
}

impl GrammarType {
    pub fn n() -> Self {
        GrammarType::Atomic(Atom::N)
    }

    pub fn s() -> Self {
        GrammarType::Atomic(Atom::S)
    }

    pub fn over(left: GrammarType, right: GrammarType) -> Self {
        GrammarType::Over(Box::new(left), Box::new(right))
    }

    pub fn under(left: GrammarType, right: GrammarType) -> Self {
        GrammarType::Under(Box::new(left), Box::new(right))
    }

    pub fn prod(left: GrammarType, right: GrammarType) -> Self {
        GrammarType::Prod(Box::new(left), Box::new(right))
    }

    /// `!kA`; fails on `k = 0` or a nested modality.
    pub fn bang(inner: GrammarType, bound: u8) -> Result<Self> {
        let t = GrammarType::Bang(Box::new(inner), bound);
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_inner(false)
    }

    fn validate_inner(&self, under_bang: bool) -> Result<()> {
        match self {
            GrammarType::Atomic(_) => Ok(()),
            GrammarType::Over(a, b) | GrammarType::Under(a, b) | GrammarType::Prod(a, b) => {
                a.validate_inner(under_bang)?;
                b.validate_inner(under_bang)
            }
            GrammarType::Bang(inner, k) => {
                if *k == 0 {
                    return Err(Error::Type(format!("copy bound must be >= 1 in {self}")));
                }
                if under_bang {
                    return Err(Error::Type(format!("nested copy modality in {self}")));
                }
                inner.validate_inner(true)
            }
        }
    }

    /// Pregroup unfolding. `!kA` is projected onto its `k`-th tensor layer.
    pub fn unfold(&self) -> Vec<SimpleType> {
        match self {
            GrammarType::Atomic(a) => vec![SimpleType::plain(*a)],
            GrammarType::Over(a, b) => {
                let mut legs = a.unfold();
                legs.extend(shift_adjoint(b.unfold(), -1));
                legs
            }
            GrammarType::Under(a, b) => {
                let mut legs = shift_adjoint(a.unfold(), 1);
                legs.extend(b.unfold());
                legs
            }
            GrammarType::Prod(a, b) => {
                let mut legs = a.unfold();
                legs.extend(b.unfold());
                legs
            }
            GrammarType::Bang(inner, k) => {
                let one = inner.unfold();
                (0..*k).flat_map(|_| one.iter().copied()).collect()
            }
        }
    }

    pub fn leg_count(&self) -> usize {
        self.unfold().len()
    }

    fn is_compound(&self) -> bool {
        matches!(self, GrammarType::Over(..) | GrammarType::Under(..) | GrammarType::Prod(..))
    }
}

/// Adjoint of a sequence: reversed, each order shifted by `delta`.
fn shift_adjoint(legs: Vec<SimpleType>, delta: i8) -> Vec<SimpleType> {
    legs.into_iter().rev().map(|t| SimpleType { atom: t.atom, adjoint: t.adjoint + delta }).collect()
}

impl fmt::Display for GrammarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(f: &mut fmt::Formatter<'_>, t: &GrammarType) -> fmt::Result {
            if t.is_compound() {
                write!(f, "({t})")
            } else {
                write!(f, "{t}")
            }
        }
        match self {
            GrammarType::Atomic(a) => write!(f, "{a}"),
            GrammarType::Over(a, b) => {
                operand(f, a)?;
                f.write_str("/")?;
                operand(f, b)
            }
            GrammarType::Under(a, b) => {
                operand(f, a)?;
                f.write_str("\\")?;
                operand(f, b)
            }
            GrammarType::Prod(a, b) => {
                operand(f, a)?;
                f.write_str(".")?;
                operand(f, b)
            }
            GrammarType::Bang(inner, k) => {
                write!(f, "!{k}")?;
                operand(f, inner)
            }
        }
    }
}

impl FromStr for GrammarType {
    type Err = Error;

    /// Binary connectives associate to the left; `!` binds tighter than any of
    /// them and takes an optional bound (`!n` means `!2n`).
    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = TypeParser { chars: &chars, pos: 0, src: s };
        let t = p.expr()?;
        if p.pos != chars.len() {
            return Err(p.error("trailing input"));
        }
        t.validate()?;
        Ok(t)
    }
}

struct TypeParser<'a> {
    chars: &'a [char],
    pos: usize,
    src: &'a str,
}

impl TypeParser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Type(format!("{what} at offset {} in type `{}`", self.pos, self.src))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<GrammarType> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek() {
            let build: fn(GrammarType, GrammarType) -> GrammarType = match op {
                '/' => GrammarType::over,
                '\\' => GrammarType::under,
                '.' => GrammarType::prod,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = build(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<GrammarType> {
        match self.peek() {
            Some('!') => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let bound = if start == self.pos {
                    DEFAULT_BANG_BOUND
                } else {
                    let digits: String = self.chars[start..self.pos].iter().collect();
                    digits.parse().map_err(|_| self.error("bad copy bound"))?
                };
                let inner = self.unary()?;
                Ok(GrammarType::Bang(Box::new(inner), bound))
            }
            Some('(') => {
                self.pos += 1;
                let t = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(t)
            }
            Some('n') => {
                self.pos += 1;
                Ok(GrammarType::n())
            }
            Some('s') => {
                self.pos += 1;
                Ok(GrammarType::s())
            }
            Some(_) => Err(self.error("unknown atom")),
            None => Err(self.error("unexpected end")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str) -> GrammarType {
        s.parse().unwrap()
    }

    #[test]
    fn transitive_verb_unfolds_to_three_legs() {
        let legs = t("(n\\s)/n").unfold();
        let shown: Vec<String> = legs.iter().map(|l| l.to_string()).collect();
        assert_eq!(shown, ["nr", "s", "nl"]);
    }

    #[test]
    fn copied_noun_projects_to_two_legs() {
        assert_eq!(t("!2n").leg_count(), 2);
        assert_eq!(t("!n"), t("!2n"));
        assert_eq!(t("!3n").leg_count(), 3);
    }

    #[test]
    fn rejects_zero_bound_and_nesting() {
        assert!("!0n".parse::<GrammarType>().is_err());
        assert!("!2!2n".parse::<GrammarType>().is_err());
        assert!(GrammarType::bang(GrammarType::n(), 0).is_err());
        assert!("x".parse::<GrammarType>().is_err());
        assert!("(n/n".parse::<GrammarType>().is_err());
    }

    #[test]
    fn left_associative_connectives() {
        assert_eq!(t("n\\s/n"), t("(n\\s)/n"));
    }

    #[test]
    fn reduction_rules() {
        let n = SimpleType::plain(Atom::N);
        let nl = SimpleType { atom: Atom::N, adjoint: -1 };
        let nr = SimpleType { atom: Atom::N, adjoint: 1 };
        assert!(nl.reduces_left_of(n));
        assert!(n.reduces_left_of(nr));
        assert!(!nr.reduces_left_of(n));
        assert!(!n.contracts_with(SimpleType::plain(Atom::S)));
    }

    fn arb_type() -> impl Strategy<Value = GrammarType> {
        let leaf = prop_oneof![Just(GrammarType::n()), Just(GrammarType::s())];
        let inner = leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| GrammarType::over(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| GrammarType::under(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| GrammarType::prod(a, b)),
            ]
        });
        (inner, 0u8..3).prop_map(|(t, k)| if k == 0 { t } else { GrammarType::Bang(Box::new(t), k) })
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(ty in arb_type()) {
            let back: GrammarType = ty.to_string().parse().unwrap();
            prop_assert_eq!(back, ty);
        }
    }
}
