//! Lexicalized parser for the discourse template grammar.
//!
//! Sentences follow `NP VERB NP` or `NP COPULA PREDICATE`, where a noun
//! phrase is `[determiner] [adjective] noun` or a pronoun. Multi-word lexicon
//! keys (phrasal verbs, gerund phrases) are matched longest-first. Once every
//! token group has a type, a left-to-right pregroup reduction places the cups.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::diagram::{make_word, Diagram, Port, Pos, WordBox};
use crate::error::{Error, Result};
use crate::grammar::{Atom, GrammarType, SimpleType, DEFAULT_BANG_BOUND};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, BTreeMap<Pos, GrammarType>>,
    words: HashSet<String>,
    longest: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    /// Adds `surface` under `pos`. A second, different type for the same
    /// surface and part of speech is rejected.
    pub fn insert(&mut self, surface: &str, pos: Pos, gtype: GrammarType) -> Result<()> {
        gtype.validate()?;
        let key = normalize(surface);
        if key.is_empty() {
            return Err(Error::Invalid("empty lexicon key".into()));
        }
        let slot = self.entries.entry(key.clone()).or_default();
        if let Some(existing) = slot.get(&pos) {
            if *existing != gtype {
                return Err(Error::Invalid(format!("`{key}` already typed {existing} as {pos}, refusing {gtype}")));
            }
            return Ok(());
        }
        slot.insert(pos, gtype);
        let parts: Vec<&str> = key.split(' ').collect();
        self.longest = self.longest.max(parts.len());
        self.words.extend(parts.into_iter().map(str::to_string));
        Ok(())
    }

    pub fn get(&self, surface: &str, pos: Pos) -> Option<&GrammarType> {
        self.entries.get(surface).and_then(|m| m.get(&pos))
    }

    pub fn contains_word(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Pos, &GrammarType)> {
        self.entries.iter().flat_map(|(k, m)| m.iter().map(move |(p, t)| (k.as_str(), *p, t)))
    }

    pub fn merge(&mut self, other: &Lexicon) -> Result<()> {
        for (k, p, t) in other.iter() {
            self.insert(k, p, t.clone())?;
        }
        Ok(())
    }

    /// Parses `surface<TAB>pos<TAB>type` rows; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let schema = |message: String| Error::Schema { line: line_no, message };
            if cols.len() != 3 {
                return Err(schema(format!("expected 3 tab-separated columns, got {}", cols.len())));
            }
            let pos =
                Pos::parse(cols[1].trim()).ok_or_else(|| schema(format!("unknown part of speech `{}`", cols[1])))?;
            let gtype: GrammarType = cols[2].trim().parse().map_err(|e: Error| schema(e.to_string()))?;
            lex.insert(cols[0], pos, gtype).map_err(|e| schema(e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Lexicon::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (k, p, t) in self.iter() {
            let _ = writeln!(s, "{k}\t{p}\t{t}");
        }
        s
    }
}

/// The type the template grammar assigns to each part of speech.
pub fn standard_type(pos: Pos) -> GrammarType {
    let n = GrammarType::n;
    let verb = || GrammarType::over(GrammarType::under(n(), GrammarType::s()), n());
    match pos {
        Pos::Noun | Pos::Predicate => n(),
        Pos::Adjective | Pos::Determiner => GrammarType::over(n(), n()),
        Pos::Verb | Pos::Copula => verb(),
        Pos::Pronoun => GrammarType::under(n(), n()),
    }
}

fn normalize(s: &str) -> String {
    tokenize(s).join(" ")
}

/// Lower-cases and splits on whitespace, dropping sentence punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| matches!(c, '.' | ',' | '!' | '?' | ';' | ':' | '"')).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Opt(Pos),
    Req(Pos),
}

const NP_FULL: [Slot; 3] = [Slot::Opt(Pos::Determiner), Slot::Opt(Pos::Adjective), Slot::Req(Pos::Noun)];
const NP_PRONOUN: [Slot; 1] = [Slot::Req(Pos::Pronoun)];

fn patterns() -> Vec<Vec<Slot>> {
    let mut out = Vec::new();
    for subj in [&NP_FULL[..], &NP_PRONOUN[..]] {
        for obj in [&NP_FULL[..], &NP_PRONOUN[..]] {
            let mut p = subj.to_vec();
            p.push(Slot::Req(Pos::Verb));
            p.extend_from_slice(obj);
            out.push(p);
        }
        let mut p = subj.to_vec();
        p.push(Slot::Req(Pos::Copula));
        p.push(Slot::Req(Pos::Predicate));
        out.push(p);
    }
    out
}

struct Matched {
    surface: String,
    pos: Pos,
    gtype: GrammarType,
}

struct Matcher<'a> {
    tokens: &'a [String],
    lex: &'a Lexicon,
    furthest: usize,
    expected: Vec<Pos>,
}

impl Matcher<'_> {
    fn note_failure(&mut self, at: usize, pos: Pos) {
        if at > self.furthest {
            self.furthest = at;
            self.expected.clear();
        }
        if at == self.furthest && !self.expected.contains(&pos) {
            self.expected.push(pos);
        }
    }

    fn run(&mut self, at: usize, slots: &[Slot], acc: &mut Vec<Matched>) -> bool {
        let Some((&slot, rest)) = slots.split_first() else {
            return at == self.tokens.len();
        };
        let (pos, optional) = match slot {
            Slot::Opt(p) => (p, true),
            Slot::Req(p) => (p, false),
        };
        let max_len = self.lex.longest.min(self.tokens.len().saturating_sub(at));
        for len in (1..=max_len).rev() {
            let surface = self.tokens[at..at + len].join(" ");
            if let Some(gtype) = self.lex.get(&surface, pos) {
                acc.push(Matched { surface, pos, gtype: gtype.clone() });
                if self.run(at + len, rest, acc) {
                    return true;
                }
                acc.pop();
            }
        }
        self.note_failure(at, pos);
        optional && self.run(at, rest, acc)
    }
}

fn match_tokens(tokens: &[String], lex: &Lexicon) -> Result<Vec<Matched>> {
    if let Some(oov) = tokens.iter().find(|t| !lex.contains_word(t)) {
        return Err(Error::Oov(oov.clone()));
    }
    let mut m = Matcher { tokens, lex, furthest: 0, expected: Vec::new() };
    for pattern in patterns() {
        let mut acc = Vec::new();
        if m.run(0, &pattern, &mut acc) {
            return Ok(acc);
        }
    }
    let expected: Vec<&str> = m.expected.iter().map(|p| p.as_str()).collect();
    let message = match tokens.get(m.furthest) {
        Some(tok) => format!("`{tok}` does not fit; expected {}", expected.join(" or ")),
        None if expected.is_empty() => "unexpected end of sentence".to_string(),
        None => format!("unexpected end of sentence; expected {}", expected.join(" or ")),
    };
    Err(Error::Parse { position: m.furthest, message })
}

/// Parses one sentence of the template grammar into a typed diagram.
///
/// The result reduces to `s`, except that a pronoun's argument leg is left
/// open for the discourse wiring.
pub fn parse_sentence<S: AsRef<str>>(tokens: &[S], lex: &Lexicon) -> Result<Diagram> {
    let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let matched = match_tokens(&tokens, lex)?;

    let mut d = Diagram::empty();
    for m in &matched {
        let w = make_word(&m.surface, m.gtype.clone())?.with_pos(m.pos);
        d = d.juxtapose(Diagram::word(w));
    }

    // pregroup reduction over the open legs, left to right
    let legs: Vec<(Port, SimpleType)> = d.outputs.iter().map(|&p| Ok((p, d.port_type(p)?))).collect::<Result<_>>()?;
    let mut stack: Vec<(Port, SimpleType)> = Vec::new();
    let mut cups = Vec::new();
    for (port, ty) in legs {
        match stack.last() {
            Some(&(top, top_ty)) if top_ty.reduces_left_of(ty) => {
                stack.pop();
                cups.push((top, port));
            }
            _ => stack.push((port, ty)),
        }
    }
    for (a, b) in cups {
        d.add_cup(a, b)?;
    }

    let residual_ok = stack.iter().filter(|(_, t)| *t == SimpleType::plain(Atom::S)).count() == 1
        && stack.iter().all(|&(p, t)| {
            t == SimpleType::plain(Atom::S)
                || matches!(p, Port::Leg { bx, .. } if d.boxes[bx].pos == Some(Pos::Pronoun) && t.adjoint != 0)
        });
    if !residual_ok {
        let shown: Vec<String> = stack.iter().map(|(_, t)| t.to_string()).collect();
        return Err(Error::Parse {
            position: tokens.len(),
            message: format!("sentence reduces to [{}], not s", shown.join(" ")),
        });
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDiscourse {
    pub s1: Diagram,
    pub s2: Diagram,
    /// Box indices of the noun heads of `s1`, in order.
    pub referents: Vec<usize>,
    /// Box index of the pronoun in `s2`.
    pub pronoun: usize,
}

impl ParsedDiscourse {
    pub fn referent_surfaces(&self) -> Vec<&str> {
        self.referents.iter().map(|&i| self.s1.boxes[i].surface.as_str()).collect()
    }

    pub fn pronoun_surface(&self) -> &str {
        &self.s2.boxes[self.pronoun].surface
    }
}

pub fn parse_discourse<S: AsRef<str>>(s1: &[S], s2: &[S], lex: &Lexicon) -> Result<ParsedDiscourse> {
    let d1 = parse_sentence(s1, lex)?;
    let d2 = parse_sentence(s2, lex)?;
    if d1.outputs.len() != 1 {
        return Err(Error::Parse {
            position: 0,
            message: "first sentence must not contain an unresolved pronoun".into(),
        });
    }
    let referents: Vec<usize> = noun_heads(&d1);
    if referents.is_empty() {
        return Err(Error::Parse { position: 0, message: "first sentence has no noun".into() });
    }
    let pronoun = d2
        .outputs
        .iter()
        .find_map(|&p| match p {
            Port::Leg { bx, .. } if d2.boxes[bx].pos == Some(Pos::Pronoun) => Some(bx),
            _ => None,
        })
        .ok_or(Error::Parse { position: 0, message: "second sentence has no pronoun".into() })?;
    Ok(ParsedDiscourse { s1: d1, s2: d2, referents, pronoun })
}

fn noun_heads(d: &Diagram) -> Vec<usize> {
    d.boxes.iter().enumerate().filter(|(_, b)| b.pos == Some(Pos::Noun)).map(|(i, _)| i).collect()
}

/// Noun heads of a sentence eligible as antecedents, in surface order.
pub fn extract_mentions<S: AsRef<str>>(tokens: &[S], lex: &Lexicon) -> Result<Vec<String>> {
    let d = parse_sentence(tokens, lex)?;
    Ok(noun_heads(&d).into_iter().map(|i| d.boxes[i].surface.clone()).collect())
}

/// Wires the pronoun of `s2` to referent `candidate` of `s1`.
///
/// The candidate noun is promoted to a two-copy type: its first leg keeps its
/// grammatical role, the second crosses into the pronoun's argument. The two
/// sentence wires are then joined by a merge node.
pub fn wire_discourse(pd: &ParsedDiscourse, candidate: usize) -> Result<Diagram> {
    let &noun = pd.referents.get(candidate).ok_or(Error::Index {
        what: "referents",
        index: candidate,
        len: pd.referents.len(),
    })?;
    let mut d1 = pd.s1.clone();
    let copied = promote(&d1.boxes[noun])?;
    let new_legs = copied.legs().len() - d1.boxes[noun].legs().len();
    d1.boxes[noun] = copied;
    let first_new = d1.boxes[noun].legs().len() - new_legs;
    d1.outputs.extend((first_new..first_new + new_legs).map(|l| Port::leg(noun, l)));
    let s1_out = d1.sentence_output().ok_or_else(|| Error::Composition("s1 has no s output".into()))?;

    let nb = d1.boxes.len();
    let mut d = d1.juxtapose(pd.s2.clone());
    let pronoun_box = nb + pd.pronoun;
    let pronoun_in = d
        .outputs
        .iter()
        .copied()
        .find(|&p| matches!(p, Port::Leg { bx, .. } if bx == pronoun_box))
        .ok_or_else(|| Error::Composition("pronoun has no open argument".into()))?;
    d.add_cup(Port::leg(noun, first_new), pronoun_in)?;

    let s2_out = d
        .outputs
        .iter()
        .copied()
        .find(|&p| {
            matches!(p, Port::Leg { bx, .. } if bx >= nb) && d.port_type(p).ok() == Some(SimpleType::plain(Atom::S))
        })
        .ok_or_else(|| Error::Composition("s2 has no s output".into()))?;
    d.add_merge(s1_out, s2_out)?;
    Ok(d)
}

fn promote(noun: &WordBox) -> Result<WordBox> {
    let mut b = noun.clone();
    b.retype(GrammarType::bang(noun.gtype.clone(), DEFAULT_BANG_BOUND)?)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicon {
        Lexicon::parse(
            "the\tdeterminer\tn/n\n\
             students\tnoun\tn\n\
             books\tnoun\tn\n\
             read\tverb\t(n\\s)/n\n\
             read through\tverb\t(n\\s)/n\n\
             they\tpronoun\tn\\n\n\
             were\tcopula\t(n\\s)/n\n\
             learning\tpredicate\tn\n\
             interesting\tpredicate\tn\n\
             interesting\tadjective\tn/n\n\
             seeking new insights\tpredicate\tn\n",
        )
        .unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn parses_transitive_sentence() {
        let d = parse_sentence(&toks("The students read the books."), &lex()).unwrap();
        let words: Vec<&str> = d.boxes.iter().map(|b| b.surface.as_str()).collect();
        assert_eq!(words, ["the", "students", "read", "the", "books"]);
        assert_eq!(d.cup_count(), 4);
        d.check_types().unwrap();
    }

    #[test]
    fn pronoun_argument_stays_open() {
        let d = parse_sentence(&toks("They were learning."), &lex()).unwrap();
        assert_eq!(d.outputs.len(), 2);
        let open: Vec<String> = d.outputs.iter().map(|&p| d.port_type(p).unwrap().to_string()).collect();
        assert_eq!(open, ["nr", "s"]);
        assert_eq!(d.boxes[0].pos, Some(Pos::Pronoun));
        assert_eq!((d.boxes[0].in_arity(), d.boxes[0].out_arity()), (1, 1));
    }

    #[test]
    fn multi_word_units_match_longest_first() {
        let d = parse_sentence(&toks("The students read through the books"), &lex()).unwrap();
        assert!(d.boxes.iter().any(|b| b.surface == "read through"));
        let d = parse_sentence(&toks("They were seeking new insights"), &lex()).unwrap();
        assert_eq!(d.boxes.last().unwrap().surface, "seeking new insights");
    }

    #[test]
    fn same_word_typed_by_position() {
        let d = parse_sentence(&toks("The interesting books read the students"), &lex()).unwrap();
        assert_eq!(d.boxes[1].pos, Some(Pos::Adjective));
        let d = parse_sentence(&toks("They were interesting"), &lex()).unwrap();
        assert_eq!(d.boxes[2].pos, Some(Pos::Predicate));
    }

    #[test]
    fn incomplete_sentence_is_a_parse_error() {
        match parse_sentence(&toks("students read the"), &lex()) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_token_is_named() {
        match parse_sentence(&toks("The students devoured the books"), &lex()) {
            Err(Error::Oov(t)) => assert_eq!(t, "devoured"),
            other => panic!("expected OOV, got {other:?}"),
        }
    }

    #[test]
    fn parsing_is_deterministic() {
        let a = parse_sentence(&toks("The students read the books"), &lex()).unwrap();
        let b = parse_sentence(&toks("The students read the books"), &lex()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mentions_in_order() {
        let m = extract_mentions(&toks("The students read the books"), &lex()).unwrap();
        assert_eq!(m, ["students", "books"]);
        let m = extract_mentions(&toks("The students were learning"), &lex()).unwrap();
        assert_eq!(m, ["students"]);
    }

    #[test]
    fn wiring_to_subject_and_object() {
        let lex = lex();
        let pd = parse_discourse(&toks("The students read the books"), &toks("They were learning"), &lex).unwrap();
        assert_eq!(pd.referent_surfaces(), ["students", "books"]);

        let subj = wire_discourse(&pd, 0).unwrap();
        subj.check_types().unwrap();
        assert_eq!(subj.merges, 1);
        assert_eq!(subj.outputs, vec![Port::MergeOut { merge: 0 }]);
        assert_eq!(subj.boxes[1].legs().len(), 2);
        assert_eq!(subj.boxes[4].legs().len(), 1);

        let obj = wire_discourse(&pd, 1).unwrap();
        obj.check_types().unwrap();
        assert_eq!(obj.boxes[1].legs().len(), 1);
        assert_eq!(obj.boxes[4].legs().len(), 2);
        assert_eq!(obj.boxes[4].gtype.to_string(), "!2n");

        // identical apart from the copied box and the crossing cup
        assert_eq!(subj.boxes.len(), obj.boxes.len());
        let differing: Vec<usize> = (0..subj.boxes.len()).filter(|&i| subj.boxes[i] != obj.boxes[i]).collect();
        assert_eq!(differing, [1, 4]);
        let only_subj: Vec<_> = subj.wires.iter().filter(|w| !obj.wires.contains(w)).collect();
        assert_eq!(only_subj.len(), 1);
    }

    #[test]
    fn candidate_out_of_range() {
        let lex = lex();
        let pd = parse_discourse(&toks("The students read the books"), &toks("They were learning"), &lex).unwrap();
        assert!(matches!(wire_discourse(&pd, 5), Err(Error::Index { index: 5, len: 2, .. })));
    }

    #[test]
    fn lexicon_rejects_conflicting_types_and_bad_rows() {
        let mut l = lex();
        assert!(l.insert("books", Pos::Noun, "s".parse().unwrap()).is_err());
        assert!(l.insert("books", Pos::Noun, GrammarType::n()).is_ok());
        assert!(matches!(Lexicon::parse("a\tnoun\n"), Err(Error::Schema { line: 1, .. })));
        assert!(matches!(Lexicon::parse("# c\na\tthing\tn\n"), Err(Error::Schema { line: 2, .. })));
        let round = Lexicon::parse(&l.to_tsv()).unwrap();
        assert_eq!(round, l);
    }
}
