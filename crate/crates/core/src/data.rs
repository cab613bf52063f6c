//! Dataset entries, the template expander, sampling, splits and TSV I/O.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagram::Pos;
use crate::error::{Error, Result};
use crate::parser::{standard_type, tokenize, Lexicon};

pub const TSV_HEADER: &str = "s1\ts2\tpronoun\tnoun\tlabel";

/// Bundled assets.
pub mod assets {
    pub const LEXICON: &str = include_str!("../assets/lexicon.tsv");
    pub const TEMPLATES: &str = include_str!("../assets/templates.txt");
    pub const DATASET: &str = include_str!("../assets/dataset.tsv");
    pub const EXAMPLES: &str = include_str!("../assets/examples.tsv");
}

/// A sentence pair with one pronoun and one candidate antecedent.
/// `label` is 1 when the pronoun refers to `noun`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entry {
    pub s1: String,
    pub s2: String,
    pub pronoun: String,
    pub noun: String,
    pub label: u8,
}

impl Entry {
    pub fn new(s1: &str, s2: &str, pronoun: &str, noun: &str, label: u8) -> Result<Entry> {
        let e = Entry {
            s1: s1.to_string(),
            s2: s2.to_string(),
            pronoun: pronoun.to_string(),
            noun: noun.to_string(),
            label,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.label > 1 {
            return Err(Error::Invalid(format!("label must be 0 or 1, got {}", self.label)));
        }
        if !contains_phrase(&tokenize(&self.s2), &self.pronoun) {
            return Err(Error::Invalid(format!("pronoun `{}` does not occur in `{}`", self.pronoun, self.s2)));
        }
        if !contains_phrase(&tokenize(&self.s1), &self.noun) {
            return Err(Error::Invalid(format!("noun `{}` does not occur in `{}`", self.noun, self.s1)));
        }
        Ok(())
    }

    pub fn is_coreferent(&self) -> bool {
        self.label == 1
    }

    /// One-hot gold label: `[1, 0]` coreferent, `[0, 1]` not.
    pub fn gold(&self) -> [f64; 2] {
        if self.is_coreferent() {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = String> {
        tokenize(&self.s1).into_iter().chain(tokenize(&self.s2))
    }
}

fn contains_phrase(tokens: &[String], phrase: &str) -> bool {
    let p = tokenize(phrase);
    !p.is_empty() && tokens.windows(p.len()).any(|w| w == p.as_slice())
}

pub fn to_tsv(entries: &[Entry]) -> String {
    let mut s = String::from(TSV_HEADER);
    s.push('\n');
    for e in entries {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", e.s1, e.s2, e.pronoun, e.noun, e.label);
    }
    s
}

/// Strict reader: exact header, five columns, labels 0 or 1.
pub fn parse_tsv(text: &str) -> Result<Vec<Entry>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == TSV_HEADER => {}
        Some((_, h)) => return Err(Error::Schema { line: 1, message: format!("bad header `{h}`") }),
        None => return Err(Error::Schema { line: 1, message: "missing header".into() }),
    }
    let mut out = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let schema = |message: String| Error::Schema { line, message };
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != 5 {
            return Err(schema(format!("expected 5 columns, found {}", cols.len())));
        }
        let label = match cols[4] {
            "0" => 0,
            "1" => 1,
            other => return Err(schema(format!("label must be 0 or 1, got `{other}`"))),
        };
        let e = Entry::new(cols[0], cols[1], cols[2], cols[3], label).map_err(|e| schema(e.to_string()))?;
        out.push(e);
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Entry>> {
    parse_tsv(&std::fs::read_to_string(path)?)
}

pub fn save(path: &Path, entries: &[Entry]) -> Result<()> {
    std::fs::write(path, to_tsv(entries))?;
    Ok(())
}

/// Hex SHA-256 of `bytes`, used to fingerprint datasets in manifests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

/// The bundled 400-entry balanced dataset.
pub fn bundled_dataset() -> Vec<Entry> {
    parse_tsv(assets::DATASET).expect("bundled dataset is valid")
}

pub fn bundled_lexicon() -> Lexicon {
    Lexicon::parse(assets::LEXICON).expect("bundled lexicon is valid")
}

pub fn bundled_templates() -> Vec<TemplateSpec> {
    TemplateSpec::parse_many(assets::TEMPLATES).expect("bundled templates are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlotKind {
    Verb,
    PhrasalVerb,
    VerbPhrase,
    Adjective,
    PredicateAdjective,
    GerundPhrase,
}

impl SlotKind {
    pub const ALL: [SlotKind; 6] = [
        SlotKind::Verb,
        SlotKind::PhrasalVerb,
        SlotKind::VerbPhrase,
        SlotKind::Adjective,
        SlotKind::PredicateAdjective,
        SlotKind::GerundPhrase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotKind::Verb => "verb",
            SlotKind::PhrasalVerb => "phrasal-verb",
            SlotKind::VerbPhrase => "verb-phrase",
            SlotKind::Adjective => "adjective",
            SlotKind::PredicateAdjective => "predicate-adjective",
            SlotKind::GerundPhrase => "gerund-phrase",
        }
    }

    pub fn parse(s: &str) -> Option<SlotKind> {
        SlotKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn pos(self) -> Pos {
        match self {
            SlotKind::Verb | SlotKind::PhrasalVerb | SlotKind::VerbPhrase => Pos::Verb,
            SlotKind::Adjective => Pos::Adjective,
            SlotKind::PredicateAdjective | SlotKind::GerundPhrase => Pos::Predicate,
        }
    }

    fn takes_referent(self) -> bool {
        self.pos() != Pos::Verb
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filler {
    pub text: String,
    /// The noun this filler attaches to or supports; `None` for verbs.
    pub referent: Option<String>,
}

/// Slot lexicons for one base pair of nouns.
///
/// Text format, one section per slot kind; columns are tab separated:
///
/// ```text
/// [pair]
/// noun1    storm
/// noun2    flight
/// pronoun  It
/// copula   was
/// [verb]
/// delayed  *
/// [gerund-phrase]
/// full of passengers  flight
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSpec {
    pub noun1: String,
    pub noun2: String,
    pub pronoun: String,
    pub copula: String,
    pub slots: Vec<(SlotKind, Vec<Filler>)>,
}

impl TemplateSpec {
    pub fn parse(text: &str) -> Result<TemplateSpec> {
        let mut all = Self::parse_many(text)?;
        if all.len() != 1 {
            return Err(Error::Template(format!("expected one [pair] section, found {}", all.len())));
        }
        Ok(all.remove(0))
    }

    /// Reads consecutive specs, each starting at a `[pair]` section.
    pub fn parse_many(text: &str) -> Result<Vec<TemplateSpec>> {
        enum Section {
            None,
            Pair,
            Slot(SlotKind),
        }
        type Partial = (HashMap<String, String>, Vec<(SlotKind, Vec<Filler>)>);
        let mut specs: Vec<Partial> = Vec::new();
        let mut section = Section::None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let row = raw.trim_end_matches('\r');
            if row.trim().is_empty() || row.starts_with('#') {
                continue;
            }
            let schema = |message: String| Error::Schema { line, message };
            if let Some(name) = row.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                section = if name == "pair" {
                    specs.push((HashMap::new(), Vec::new()));
                    Section::Pair
                } else {
                    let kind = SlotKind::parse(name).ok_or_else(|| schema(format!("unknown section [{name}]")))?;
                    let spec = specs.last_mut().ok_or_else(|| schema("slot section before [pair]".into()))?;
                    if spec.1.iter().any(|(k, _)| *k == kind) {
                        return Err(schema(format!("section [{name}] repeated")));
                    }
                    spec.1.push((kind, Vec::new()));
                    Section::Slot(kind)
                };
                continue;
            }
            let (key, value) = row
                .split_once('\t')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| schema("expected two tab-separated columns".into()))?;
            if key.is_empty() || value.is_empty() || value.contains('\t') {
                return Err(schema("expected two non-empty columns".into()));
            }
            let spec = specs.last_mut().ok_or_else(|| schema("row before any section".into()))?;
            match section {
                Section::None => return Err(schema("row before any section".into())),
                Section::Pair => {
                    spec.0.insert(key.to_string(), value.to_string());
                }
                Section::Slot(kind) => {
                    let referent = match (kind.takes_referent(), value) {
                        (false, "*") => None,
                        (false, other) => return Err(schema(format!("verbs take `*` as referent, got `{other}`"))),
                        (true, "*") => return Err(schema(format!("{} fillers need a referent", kind.as_str()))),
                        (true, noun) => Some(noun.to_string()),
                    };
                    spec.1.last_mut().unwrap().1.push(Filler { text: key.to_string(), referent });
                }
            }
        }
        specs
            .into_iter()
            .map(|(pair, slots)| {
                let get =
                    |k: &str| pair.get(k).cloned().ok_or_else(|| Error::Template(format!("[pair] is missing `{k}`")));
                let spec = TemplateSpec {
                    noun1: get("noun1")?,
                    noun2: get("noun2")?,
                    pronoun: get("pronoun")?,
                    copula: get("copula")?,
                    slots,
                };
                spec.validate()?;
                Ok(spec)
            })
            .collect()
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.noun1, self.noun2)
    }

    pub fn fillers(&self, kind: SlotKind) -> &[Filler] {
        self.slots.iter().find(|(k, _)| *k == kind).map(|(_, f)| f.as_slice()).unwrap_or(&[])
    }

    fn of_pos(&self, pos: Pos) -> impl Iterator<Item = &Filler> {
        self.slots.iter().filter(move |(k, _)| k.pos() == pos).flat_map(|(_, f)| f.iter())
    }

    fn for_referent(&self, pos: Pos, noun: &str) -> Vec<&str> {
        self.of_pos(pos).filter(|f| f.referent.as_deref() == Some(noun)).map(|f| f.text.as_str()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.name();
        if self.noun1 == self.noun2 {
            return Err(Error::Template(format!("{name}: the two nouns must differ")));
        }
        for (kind, fillers) in &self.slots {
            if fillers.is_empty() {
                return Err(Error::Template(format!("{name}: slot lexicon [{}] is empty", kind.as_str())));
            }
            for f in fillers {
                if let Some(r) = &f.referent {
                    if r != &self.noun1 && r != &self.noun2 {
                        return Err(Error::Template(format!("{name}: `{}` refers to unknown noun `{r}`", f.text)));
                    }
                }
            }
        }
        for pos in [Pos::Verb, Pos::Adjective, Pos::Predicate] {
            let mut seen = BTreeSet::new();
            if let Some(dup) = self.of_pos(pos).find(|f| !seen.insert(f.text.as_str())) {
                return Err(Error::Template(format!("{name}: `{}` listed twice as {pos}", dup.text)));
            }
        }
        if self.of_pos(Pos::Verb).next().is_none() {
            return Err(Error::Template(format!("{name}: no verb fillers")));
        }
        for noun in [&self.noun1, &self.noun2] {
            if self.for_referent(Pos::Adjective, noun).is_empty() {
                return Err(Error::Template(format!("{name}: no adjective for `{noun}`")));
            }
            if self.for_referent(Pos::Predicate, noun).is_empty() {
                return Err(Error::Template(format!("{name}: no predicate supporting `{noun}`")));
            }
        }
        Ok(())
    }

    /// Lexicon entries covering every word the expansion can produce.
    pub fn lexicon(&self) -> Result<Lexicon> {
        let mut lex = Lexicon::new();
        lex.insert("the", Pos::Determiner, standard_type(Pos::Determiner))?;
        lex.insert(&self.noun1, Pos::Noun, standard_type(Pos::Noun))?;
        lex.insert(&self.noun2, Pos::Noun, standard_type(Pos::Noun))?;
        lex.insert(&self.pronoun, Pos::Pronoun, standard_type(Pos::Pronoun))?;
        lex.insert(&self.copula, Pos::Copula, standard_type(Pos::Copula))?;
        for (kind, fillers) in &self.slots {
            for f in fillers {
                lex.insert(&f.text, kind.pos(), standard_type(kind.pos()))?;
            }
        }
        Ok(lex)
    }
}

/// A structural pattern: adjective on either noun, and the supported noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub adjective1: bool,
    pub adjective2: bool,
    pub supports_noun1: bool,
}

impl Pattern {
    pub fn all() -> [Pattern; 8] {
        let mut out = [Pattern { adjective1: false, adjective2: false, supports_noun1: false }; 8];
        for (i, p) in out.iter_mut().enumerate() {
            p.adjective1 = i & 4 != 0;
            p.adjective2 = i & 2 != 0;
            p.supports_noun1 = i & 1 == 0;
        }
        out
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Every entry of the 8 structural patterns, in a fixed order. Each filled
/// pattern yields two entries, one per candidate, with opposite labels.
pub fn expand(spec: &TemplateSpec) -> Result<Vec<Entry>> {
    spec.validate()?;
    let verbs: Vec<&str> = spec.of_pos(Pos::Verb).map(|f| f.text.as_str()).collect();
    let adjectives = |noun: &str, used: bool| -> Vec<Option<&str>> {
        if used {
            spec.for_referent(Pos::Adjective, noun).into_iter().map(Some).collect()
        } else {
            vec![None]
        }
    };
    let np = |adj: Option<&str>, noun: &str| match adj {
        Some(a) => format!("the {a} {noun}"),
        None => format!("the {noun}"),
    };
    let mut out = Vec::new();
    for pattern in Pattern::all() {
        let supported = if pattern.supports_noun1 { &spec.noun1 } else { &spec.noun2 };
        for a1 in adjectives(&spec.noun1, pattern.adjective1) {
            for &verb in &verbs {
                for a2 in adjectives(&spec.noun2, pattern.adjective2) {
                    let s1 = format!("{} {verb} {}.", capitalize(&np(a1, &spec.noun1)), np(a2, &spec.noun2));
                    for pred in spec.for_referent(Pos::Predicate, supported) {
                        let s2 = format!("{} {} {pred}.", capitalize(&spec.pronoun), spec.copula);
                        for noun in [&spec.noun1, &spec.noun2] {
                            let label = u8::from(noun == supported);
                            out.push(Entry::new(&s1, &s2, &capitalize(&spec.pronoun), noun, label)?);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A label-balanced sample of `n` entries, in their original order.
pub fn sample_balanced(entries: &[Entry], n: usize, seed: u64) -> Result<Vec<Entry>> {
    sample_leaning(entries, n, seed, None)
}

/// Like [`sample_balanced`], but an odd `n` gives its extra entry to label
/// `lean` when that label has room.
fn sample_leaning(entries: &[Entry], n: usize, seed: u64, lean: Option<u8>) -> Result<Vec<Entry>> {
    if n > entries.len() {
        return Err(Error::Invalid(format!("cannot sample {n} of {} entries", entries.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].label == 1).collect();
    let mut neg: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].label == 0).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let (mut want_pos, mut want_neg) = (n / 2, n / 2);
    if n % 2 == 1 {
        let extra_pos = match lean {
            Some(1) if pos.len() > n / 2 => true,
            Some(0) if neg.len() > n / 2 => false,
            _ => pos.len() > neg.len(),
        };
        if extra_pos {
            want_pos += 1;
        } else {
            want_neg += 1;
        }
    }
    if want_pos > pos.len() || want_neg > neg.len() {
        return Err(Error::Invalid(format!(
            "cannot balance {n} entries from {} positive and {} negative",
            pos.len(),
            neg.len()
        )));
    }
    let mut chosen: Vec<usize> = pos[..want_pos].iter().chain(&neg[..want_neg]).copied().collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| entries[i].clone()).collect())
}

/// `n` split as evenly as possible over `parts`, earlier parts larger.
pub fn even_counts(n: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| n / parts + usize::from(i < n % parts)).collect()
}

/// Expands each spec and draws a balanced sample of `counts[i]` entries from
/// spec `i`; spec `i` is sampled with seed `seed + i`. Odd counts lean toward
/// whichever label is short so far, keeping the whole set balanced too.
pub fn generate(specs: &[TemplateSpec], counts: &[usize], seed: u64) -> Result<Vec<Entry>> {
    if specs.len() != counts.len() {
        return Err(Error::Invalid(format!("{} templates but {} counts", specs.len(), counts.len())));
    }
    let mut out: Vec<Entry> = Vec::new();
    for (i, (spec, &n)) in specs.iter().zip(counts).enumerate() {
        let pool = expand(spec)?;
        let pos = out.iter().filter(|e| e.label == 1).count();
        let lean = Some(u8::from(2 * pos < out.len()));
        out.extend(sample_leaning(&pool, n, seed + i as u64, lean).map_err(|e| e.with_context(spec.name()))?);
    }
    Ok(out)
}

/// The union of the specs' lexicons.
pub fn lexicon_for(specs: &[TemplateSpec]) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    for spec in specs {
        lex.merge(&spec.lexicon()?)?;
    }
    Ok(lex)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Entry>,
    pub val: Vec<Entry>,
    pub test: Vec<Entry>,
    /// Share of distinct test tokens that also occur in training.
    pub vocab_overlap: f64,
}

/// Splits by sentence pair: entries sharing `(s1, s2)` land in one part.
pub fn split(entries: &[Entry], fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(0.0..=1.0).contains(f)) || (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("split fractions {fractions:?} must be in [0, 1] and sum to 1")));
    }
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut groups: HashMap<(&str, &str), Vec<&Entry>> = HashMap::new();
    for e in entries {
        let key = (e.s1.as_str(), e.s2.as_str());
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(&key).unwrap().push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n = entries.len();
    let t_train = (ft * n as f64).round() as usize;
    let t_val = ((fv * n as f64).round() as usize).min(n - t_train);
    let targets = [t_train, t_val, n - t_train - t_val];
    let mut parts: [Vec<Entry>; 3] = Default::default();
    for key in order {
        let g = &groups[&key];
        let k = (0..3).max_by_key(|&k| (targets[k] as i64 - parts[k].len() as i64, std::cmp::Reverse(k))).unwrap();
        parts[k].extend(g.iter().map(|&e| e.clone()));
    }
    let [train, val, test] = parts;
    let vocab_overlap = vocabulary_overlap(&train, &test);
    Ok(Split { train, val, test, vocab_overlap })
}

pub fn vocabulary(entries: &[Entry]) -> BTreeSet<String> {
    entries.iter().flat_map(Entry::tokens).collect()
}

/// Fraction of distinct `test` tokens seen in `train`; 1 for an empty test set.
pub fn vocabulary_overlap(train: &[Entry], test: &[Entry]) -> f64 {
    let seen = vocabulary(train);
    let test_vocab = vocabulary(test);
    if test_vocab.is_empty() {
        return 1.0;
    }
    test_vocab.iter().filter(|t| seen.contains(*t)).count() as f64 / test_vocab.len() as f64
}
