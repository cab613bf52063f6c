//! From dataset entries to circuits, for both model families.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::compile::{compile_bow, compile_diagram, CompileOptions};
use crate::data::Entry;
use crate::error::{Error, Result};
use crate::parser::{parse_discourse, tokenize, wire_discourse, Lexicon, ParsedDiscourse};
use crate::rewrite::rewrite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Typed discourse diagrams with the pronoun wired to the candidate.
    Sllm,
    /// One qubit per word, merged without structure.
    BagOfWords,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Sllm => "sllm",
            Model::BagOfWords => "bow",
        }
    }

    pub fn parse(s: &str) -> Option<Model> {
        match s {
            "sllm" => Some(Model::Sllm),
            "bow" => Some(Model::BagOfWords),
            _ => None,
        }
    }

    pub fn compile(self, entry: &Entry, lex: &Lexicon) -> Result<Circuit> {
        match self {
            Model::Sllm => {
                let pd = parse_discourse(&tokenize(&entry.s1), &tokenize(&entry.s2), lex)?;
                let candidate = candidate_index(&pd, &entry.noun)?;
                compile_candidate(&pd, candidate, &CompileOptions::default())
            }
            Model::BagOfWords => compile_bow(entry, lex),
        }
    }
}

/// Position of `noun` among the referents of the first sentence.
pub fn candidate_index(pd: &ParsedDiscourse, noun: &str) -> Result<usize> {
    let key = tokenize(noun).join(" ");
    pd.referent_surfaces()
        .iter()
        .position(|s| *s == key)
        .ok_or_else(|| Error::Invalid(format!("`{noun}` is not a noun of the first sentence")))
}

/// Wire, rewrite and compile the reading where the pronoun refers to
/// referent `candidate`.
pub fn compile_candidate(pd: &ParsedDiscourse, candidate: usize, opts: &CompileOptions) -> Result<Circuit> {
    let d = rewrite(&wire_discourse(pd, candidate)?)?;
    compile_diagram(&d, opts)
}
