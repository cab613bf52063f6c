//! End-to-end resolution, the classical/quantum combiner and their files.

use rayon::prelude::*;
use std::collections::HashMap;

use serde::Serialize;

use crate::compile::CompileOptions;
use crate::data::Entry;
use crate::error::{Error, Result};
use crate::model::compile_candidate;
use crate::params::ParamStore;
use crate::parser::{parse_discourse, tokenize, Lexicon};
use crate::train::{predict_circuits, OovPolicy, DEFAULT_EPSILON};

pub const EMPTY: &str = "EMPTY";

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    /// `None` stands for an empty answer.
    pub referent: Option<String>,
    pub candidates: Vec<String>,
    /// Coreference probability per candidate, in mention order.
    pub scores: Vec<f64>,
}

/// Splits a two-sentence discourse at sentence-final punctuation.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        current.push(ch);
        if matches!(ch, '.' | '!' | '?') {
            if !current.trim().trim_matches(|c| matches!(c, '.' | '!' | '?')).is_empty() {
                out.push(current.trim().to_string());
            }
            current.clear();
        }
    }
    if !current.trim().is_empty() {
        out.push(current.trim().to_string());
    }
    out
}

/// Scores every noun of the first sentence as the pronoun's antecedent and
/// returns the best one; ties go to the earlier mention.
pub fn resolve(id: &str, text: &str, params: &ParamStore, lex: &Lexicon, oov: OovPolicy) -> Result<Prediction> {
    let sentences = split_sentences(text);
    if sentences.len() != 2 {
        return Err(Error::Parse {
            position: 0,
            message: format!("expected two sentences, found {}", sentences.len()),
        });
    }
    let pd = parse_discourse(&tokenize(&sentences[0]), &tokenize(&sentences[1]), lex)
        .map_err(|e| e.with_context(format!("discourse {id}")))?;
    let candidates: Vec<String> = pd.referent_surfaces().iter().map(|s| s.to_string()).collect();
    let circuits = (0..candidates.len())
        .map(|i| compile_candidate(&pd, i, &CompileOptions::default()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.with_context(format!("discourse {id}")))?;
    let scores: Vec<f64> = predict_circuits(&circuits, params, oov, DEFAULT_EPSILON)
        .map_err(|e| e.with_context(format!("discourse {id}")))?
        .iter()
        .map(|d| d[0])
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(Prediction { id: id.to_string(), referent: Some(candidates[best].clone()), candidates, scores })
}

/// [`resolve`] over `(id, text)` pairs in parallel; output keeps input order.
pub fn resolve_all(
    items: &[(String, String)],
    params: &ParamStore,
    lex: &Lexicon,
    oov: OovPolicy,
) -> Result<Vec<Prediction>> {
    items.par_iter().map(|(id, text)| resolve(id, text, params, lex, oov)).collect()
}

/// One discourse per distinct sentence pair, with the gold referent taken
/// from the positive entry. Ids are 1-based positions.
pub fn discourses(entries: &[Entry]) -> Vec<(String, String, Option<String>)> {
    let mut order: Vec<(String, String, Option<String>)> = Vec::new();
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    for e in entries {
        let key = (e.s1.clone(), e.s2.clone());
        let i = *index.entry(key).or_insert_with(|| {
            order.push((format!("{} {}", e.s1, e.s2), (order.len() + 1).to_string(), None));
            order.len() - 1
        });
        if e.label == 1 {
            order[i].2 = Some(tokenize(&e.noun).join(" "));
        }
    }
    order.into_iter().map(|(text, id, gold)| (id, text, gold)).collect()
}

/// The gold referent of each discourse in `preds`, whose ids come from
/// [`discourses`]. A pair seen only with negative entries still has a gold
/// answer when it has two candidates: the one not labelled wrong.
pub fn gold_referents(entries: &[Entry], preds: &[Prediction]) -> Vec<(String, Option<String>)> {
    let mut wrong: HashMap<String, Vec<String>> = HashMap::new();
    let mut gold: HashMap<String, String> = HashMap::new();
    // Same numbering as `discourses`: first appearance of the sentence pair.
    let mut ids: HashMap<(&str, &str), String> = HashMap::new();
    for e in entries {
        let next = (ids.len() + 1).to_string();
        ids.entry((&e.s1, &e.s2)).or_insert(next);
    }
    for e in entries {
        let id = ids[&(e.s1.as_str(), e.s2.as_str())].clone();
        let noun = tokenize(&e.noun).join(" ");
        if e.label == 1 {
            gold.insert(id, noun);
        } else {
            wrong.entry(id).or_default().push(noun);
        }
    }
    preds
        .iter()
        .map(|p| {
            let known = gold.get(&p.id).cloned().or_else(|| {
                let wrong = wrong.get(&p.id)?;
                let rest: Vec<&String> = p.candidates.iter().filter(|c| !wrong.contains(c)).collect();
                (p.candidates.len() == 2 && rest.len() == 1).then(|| rest[0].clone())
            });
            (p.id.clone(), known)
        })
        .collect()
}

/// Referent-level scores: a prediction counts when it names the gold
/// referent; empty answers lower recall but not precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferentMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub count: usize,
    pub empty: usize,
}

impl ReferentMetrics {
    pub fn of<'a>(predicted: impl IntoIterator<Item = Option<&'a str>>, gold: &[&str]) -> ReferentMetrics {
        let (mut tp, mut answered, mut n) = (0usize, 0usize, 0usize);
        for (p, g) in predicted.into_iter().zip(gold) {
            n += 1;
            if let Some(p) = p {
                answered += 1;
                tp += usize::from(p == *g);
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (precision, recall) = (ratio(tp, answered), ratio(tp, n));
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        ReferentMetrics { accuracy: recall, precision, recall, f1, count: n, empty: n - answered }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombineReport {
    pub classical: ReferentMetrics,
    pub quantum: ReferentMetrics,
    pub combined: ReferentMetrics,
    /// Entries where the quantum answer replaced the classical one.
    pub replaced: usize,
}

impl CombineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Keeps the classical answer when it is present and correct, otherwise
/// takes the quantum one. Output follows the order of `gold`.
pub fn combine(
    quantum: &[Prediction],
    classical: &[Prediction],
    gold: &[(String, String)],
) -> Result<(Vec<Prediction>, CombineReport)> {
    let by_id = |preds: &[Prediction], what: &str| -> Result<HashMap<String, Prediction>> {
        let mut m = HashMap::new();
        for p in preds {
            if m.insert(p.id.clone(), p.clone()).is_some() {
                return Err(Error::Invalid(format!("duplicate id `{}` in {what} predictions", p.id)));
            }
        }
        if m.len() != gold.len() {
            return Err(Error::Invalid(format!("{what} predictions cover {} ids, gold has {}", m.len(), gold.len())));
        }
        Ok(m)
    };
    let q = by_id(quantum, "quantum")?;
    let c = by_id(classical, "classical")?;
    let mut combined = Vec::with_capacity(gold.len());
    let (mut qs, mut cs) = (Vec::new(), Vec::new());
    let mut replaced = 0;
    for (id, g) in gold {
        let missing = |what: &str| Error::Invalid(format!("id `{id}` has no {what} prediction"));
        let qp = q.get(id).ok_or_else(|| missing("quantum"))?;
        let cp = c.get(id).ok_or_else(|| missing("classical"))?;
        let keep_classical = cp.referent.as_deref() == Some(g.as_str());
        if !keep_classical {
            replaced += 1;
        }
        combined.push(if keep_classical { cp.clone() } else { qp.clone() });
        qs.push(qp.referent.clone());
        cs.push(cp.referent.clone());
    }
    let gold_refs: Vec<&str> = gold.iter().map(|(_, g)| g.as_str()).collect();
    let report = CombineReport {
        classical: ReferentMetrics::of(cs.iter().map(|r| r.as_deref()), &gold_refs),
        quantum: ReferentMetrics::of(qs.iter().map(|r| r.as_deref()), &gold_refs),
        combined: ReferentMetrics::of(combined.iter().map(|p| p.referent.as_deref()), &gold_refs),
        replaced,
    };
    Ok((combined, report))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Schema { line, message: e.to_string() }
}

fn referent_field(r: &Option<String>) -> &str {
    r.as_deref().unwrap_or(EMPTY)
}

pub fn predictions_to_csv(preds: &[Prediction]) -> Result<String> {
    let width = preds.iter().map(|p| p.scores.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "predicted_referent".to_string()];
    header.extend((1..=width).map(|i| format!("score_candidate_{i}")));
    w.write_record(&header).map_err(csv_error)?;
    for p in preds {
        let mut row = vec![p.id.clone(), referent_field(&p.referent).to_string()];
        row.extend(p.scores.iter().map(|s| s.to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?).unwrap())
}

pub fn predictions_from_csv(text: &str) -> Result<Vec<Prediction>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.clone();
    if header.get(0) != Some("id") || header.get(1) != Some("predicted_referent") {
        return Err(Error::Schema { line: 1, message: "expected `id,predicted_referent,...` header".into() });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() < 2 {
            return Err(Error::Schema { line, message: "expected at least 2 columns".into() });
        }
        let scores = rec
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>().map_err(|_| Error::Schema { line, message: format!("bad score `{s}`") }))
            .collect::<Result<Vec<_>>>()?;
        let referent = match &rec[1] {
            EMPTY => None,
            r => Some(r.to_string()),
        };
        out.push(Prediction { id: rec[0].to_string(), referent, candidates: Vec::new(), scores });
    }
    Ok(out)
}

/// `id,referent` rows; `EMPTY` marks a missing answer.
pub fn referents_from_csv(text: &str) -> Result<Vec<(String, Option<String>)>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.clone();
    if header.len() != 2 || &header[0] != "id" || &header[1] != "referent" {
        return Err(Error::Schema { line: 1, message: "expected `id,referent` header".into() });
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            let referent = if &rec[1] == EMPTY { None } else { Some(rec[1].to_string()) };
            Ok((rec[0].to_string(), referent))
        })
        .collect()
}

pub fn referents_to_csv(rows: &[(String, Option<String>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "referent"]).map_err(csv_error)?;
    for (id, r) in rows {
        w.write_record([id.as_str(), referent_field(r)]).map_err(csv_error)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?).unwrap())
}

/// Classical answers as predictions without scores.
pub fn classical_predictions(rows: &[(String, Option<String>)]) -> Vec<Prediction> {
    rows.iter()
        .map(|(id, r)| Prediction { id: id.clone(), referent: r.clone(), candidates: Vec::new(), scores: Vec::new() })
        .collect()
}

/// Gold referents; an empty gold answer is rejected.
pub fn gold_from_csv(text: &str) -> Result<Vec<(String, String)>> {
    referents_from_csv(text)?
        .into_iter()
        .map(|(id, r)| r.map(|r| (id.clone(), r)).ok_or_else(|| Error::Invalid(format!("gold for `{id}` is EMPTY"))))
        .collect()
}
