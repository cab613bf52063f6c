//! Born-rule readout, cross-entropy loss and SPSA training.

use std::cell::Cell;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{Circuit, ParamSymbol};
use crate::data::Entry;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::params::ParamStore;
use crate::parser::Lexicon;
use crate::sim::{Program, SymbolTable, DEFAULT_MAX_LIVE_QUBITS};

pub const DEFAULT_EPSILON: f64 = 1e-9;

/// ε-smoothed Born distribution of a one-qubit output.
pub fn born(amplitudes: &[Complex64], epsilon: f64) -> Result<[f64; 2]> {
    if amplitudes.len() != 2 {
        return Err(Error::Invalid(format!("expected one output qubit, got {} amplitudes", amplitudes.len())));
    }
    let l0 = amplitudes[0].norm_sqr() + epsilon;
    let l1 = amplitudes[1].norm_sqr() + epsilon;
    let total = l0 + l1;
    let p0 = l0 / total;
    Ok([p0, 1.0 - p0])
}

/// `[1, 0]` (coreferent) when `dist[0] >= 0.5`, else `[0, 1]`.
pub fn predict_label(dist: [f64; 2]) -> [u8; 2] {
    if dist[0] >= 0.5 {
        [1, 0]
    } else {
        [0, 1]
    }
}

pub fn bce(dist: [f64; 2], gold: [f64; 2]) -> f64 {
    -(gold[0] * dist[0].ln() + gold[1] * dist[1].ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub a: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub epochs: usize,
    pub epsilon: f64,
    /// Entries per SPSA step. An epoch then takes one step per batch of a
    /// shuffled pass; `None` takes a single full-batch step per epoch.
    pub batch_size: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            a: 0.1,
            c: 0.06,
            big_a: 20.0,
            alpha: 0.602,
            gamma: 0.101,
            epochs: 2000,
            epsilon: DEFAULT_EPSILON,
            batch_size: None,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.a, self.c, self.big_a, self.alpha, self.gamma, self.epsilon];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.epochs == 0 {
            return Err(Error::Invalid(format!("hyperparameters must be positive: {self:?}")));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Invalid("batch size must be positive".into()));
        }
        Ok(())
    }

    pub fn learning_rate(&self, t: usize) -> f64 {
        self.a / (self.big_a + t as f64 + 1.0).powf(self.alpha)
    }

    pub fn perturbation(&self, t: usize) -> f64 {
        self.c / (t as f64 + 1.0).powf(self.gamma)
    }
}

/// One SPSA update of `theta` at step `t`.
pub fn spsa_step<R: Rng>(
    theta: &mut [f64],
    t: usize,
    hp: &Hyperparams,
    rng: &mut R,
    mut loss: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<()> {
    let (a_t, c_t) = (hp.learning_rate(t), hp.perturbation(t));
    let delta: Vec<f64> = (0..theta.len()).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let plus: Vec<f64> = theta.iter().zip(&delta).map(|(x, d)| x + c_t * d).collect();
    let minus: Vec<f64> = theta.iter().zip(&delta).map(|(x, d)| x - c_t * d).collect();
    let (lp, lm) = (loss(&plus)?, loss(&minus)?);
    if !(lp.is_finite() && lm.is_finite()) {
        return Err(Error::NonFinite { epoch: t, message: format!("perturbed losses {lp} and {lm}") });
    }
    let scale = (lp - lm) / (2.0 * c_t);
    for (x, d) in theta.iter_mut().zip(&delta) {
        *x -= a_t * scale * d;
    }
    Ok(())
}

/// A training set compiled once, with symbols resolved to dense slots.
#[derive(Debug, Clone)]
pub struct CompiledSet {
    pub table: SymbolTable,
    programs: Vec<Program>,
    gold: Vec<[f64; 2]>,
}

impl CompiledSet {
    pub fn build(entries: &[Entry], model: Model, lex: &Lexicon) -> Result<CompiledSet> {
        let circuits = compile_all(entries, model, lex)?;
        let mut table = SymbolTable::new();
        let mut programs = Vec::with_capacity(circuits.len());
        for (i, c) in circuits.iter().enumerate() {
            let p = Program::build(c, |s| Ok(table.intern(s)), DEFAULT_MAX_LIVE_QUBITS)
                .map_err(|e| e.with_context(format!("entry {i}")))?;
            programs.push(p);
        }
        Ok(CompiledSet { table, programs, gold: entries.iter().map(Entry::gold).collect() })
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    fn distributions(&self, idx: &[usize], theta: &[f64], epsilon: f64) -> Result<Vec<[f64; 2]>> {
        idx.par_iter().map(|&i| born(&self.programs[i].execute(theta).amplitudes, epsilon)).collect()
    }

    /// Mean loss and accuracy over `idx`, summed in index order.
    fn score(&self, idx: &[usize], theta: &[f64], epsilon: f64) -> Result<(f64, f64)> {
        let dists = self.distributions(idx, theta, epsilon)?;
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (&i, d) in idx.iter().zip(&dists) {
            loss += bce(*d, self.gold[i]);
            correct += usize::from(predict_label(*d)[0] as f64 == self.gold[i][0]);
        }
        let n = idx.len().max(1) as f64;
        Ok((loss / n, correct as f64 / n))
    }
}

pub fn compile_all(entries: &[Entry], model: Model, lex: &Lexicon) -> Result<Vec<Circuit>> {
    let results: Vec<Result<Circuit>> = entries.par_iter().map(|e| model.compile(e, lex)).collect();
    results.into_iter().enumerate().map(|(i, r)| r.map_err(|e| e.with_context(format!("entry {i}")))).collect()
}

/// Held-out entries whose labels are only reachable through a counter.
#[derive(Debug)]
pub struct Holdout {
    entries: Vec<Entry>,
    reads: Cell<usize>,
}

impl Holdout {
    pub fn new(entries: Vec<Entry>) -> Self {
        Holdout { entries, reads: Cell::new(0) }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels_read(&self) -> usize {
        self.reads.get()
    }

    /// The entries, labels included. Counts as a label read.
    pub fn reveal(&self) -> &[Entry] {
        self.reads.set(self.reads.get() + 1);
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub count: usize,
}

impl Metrics {
    /// Binary metrics with "coreferent" as the positive class.
    pub fn from_labels(predicted: &[u8], gold: &[u8]) -> Metrics {
        let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
        for (&p, &g) in predicted.iter().zip(gold) {
            correct += usize::from(p == g);
            match (p, g) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => {}
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Metrics { accuracy: ratio(correct, predicted.len()), precision, recall, f1, count: predicted.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub seed: u64,
    /// Training loss and accuracy at the start of each epoch.
    pub loss: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub validation: Option<Metrics>,
    pub test: Option<Metrics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// How inference treats parameters never seen in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OovPolicy {
    Strict,
    /// A fixed pseudo-random angle derived from the symbol and the store seed.
    RandomInit,
    /// The angle of the `<unk>` word at the same type and index, else 0.
    UnkToken,
}

pub const UNK: &str = "<unk>";

impl OovPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            OovPolicy::Strict => "strict",
            OovPolicy::RandomInit => "random-init",
            OovPolicy::UnkToken => "unk-token",
        }
    }

    pub fn parse(s: &str) -> Option<OovPolicy> {
        [OovPolicy::Strict, OovPolicy::RandomInit, OovPolicy::UnkToken].into_iter().find(|p| p.as_str() == s)
    }

    pub fn angle(self, params: &ParamStore, s: &ParamSymbol) -> Result<f64> {
        if let Some(v) = params.get(s) {
            return Ok(v);
        }
        match self {
            OovPolicy::Strict => Err(Error::Oov(format!("{} (parameter {s})", s.word))),
            OovPolicy::RandomInit => {
                let digest =
                    Sha256::new().chain_update(s.to_string()).chain_update(params.seed.to_le_bytes()).finalize();
                let seed = u64::from_le_bytes(digest[..8].try_into().unwrap());
                Ok(ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..std::f64::consts::TAU))
            }
            OovPolicy::UnkToken => {
                let unk = ParamSymbol { word: UNK.to_string(), gtype: s.gtype.clone(), index: s.index };
                Ok(params.get(&unk).unwrap_or(0.0))
            }
        }
    }
}

/// Born distributions for already compiled circuits.
pub fn predict_circuits(
    circuits: &[Circuit],
    params: &ParamStore,
    oov: OovPolicy,
    epsilon: f64,
) -> Result<Vec<[f64; 2]>> {
    let results: Vec<Result<[f64; 2]>> = circuits
        .par_iter()
        .map(|c| {
            let mut angles = Vec::new();
            let mut table = SymbolTable::new();
            let program = Program::build(
                c,
                |s| {
                    let slot = table.intern(s);
                    if slot == angles.len() {
                        angles.push(oov.angle(params, s)?);
                    }
                    Ok(slot)
                },
                DEFAULT_MAX_LIVE_QUBITS,
            )?;
            born(&program.execute(&angles).amplitudes, epsilon)
        })
        .collect();
    results.into_iter().enumerate().map(|(i, r)| r.map_err(|e| e.with_context(format!("entry {i}")))).collect()
}

pub fn predict(
    entries: &[Entry],
    params: &ParamStore,
    model: Model,
    lex: &Lexicon,
    oov: OovPolicy,
    epsilon: f64,
) -> Result<Vec<[f64; 2]>> {
    predict_circuits(&compile_all(entries, model, lex)?, params, oov, epsilon)
}

pub fn evaluate(params: &ParamStore, data: &[Entry], model: Model, lex: &Lexicon, oov: OovPolicy) -> Result<Metrics> {
    let dists = predict(data, params, model, lex, oov, DEFAULT_EPSILON)?;
    let predicted: Vec<u8> = dists.iter().map(|d| predict_label(*d)[0]).collect();
    let gold: Vec<u8> = data.iter().map(|e| e.label).collect();
    Ok(Metrics::from_labels(&predicted, &gold))
}

/// SPSA on a compiled training set. `on_epoch` sees each epoch's record
/// before the epoch's updates. Step sizes decay with the step count.
pub fn spsa_fit_compiled(
    set: &CompiledSet,
    hp: &Hyperparams,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(ParamStore, RunHistory)> {
    hp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta: Vec<f64> = (0..set.table.len()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    let all: Vec<usize> = (0..set.len()).collect();
    let mut history = RunHistory { seed, loss: Vec::new(), accuracy: Vec::new(), validation: None, test: None };
    let mut step = 0;
    for t in 0..hp.epochs {
        let (loss, accuracy) = set.score(&all, &theta, hp.epsilon)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite { epoch: t, message: format!("training loss {loss}") });
        }
        history.loss.push(loss);
        history.accuracy.push(accuracy);
        on_epoch(&EpochRecord { epoch: t, loss, accuracy });
        match hp.batch_size {
            Some(b) if b < all.len() => {
                let mut order = all.clone();
                order.shuffle(&mut rng);
                for batch in order.chunks(b) {
                    spsa_step(&mut theta, step, hp, &mut rng, |th| Ok(set.score(batch, th, hp.epsilon)?.0))?;
                    step += 1;
                }
            }
            _ => {
                spsa_step(&mut theta, step, hp, &mut rng, |th| Ok(set.score(&all, th, hp.epsilon)?.0))?;
                step += 1;
            }
        }
    }
    Ok((ParamStore::from_table(&set.table, &theta, seed), history))
}

/// Trains on `train`; validation labels are read once, after training.
pub fn spsa_fit(
    train: &[Entry],
    val: &Holdout,
    model: Model,
    lex: &Lexicon,
    hp: &Hyperparams,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(ParamStore, RunHistory)> {
    let set = CompiledSet::build(train, model, lex)?;
    let (params, mut history) = spsa_fit_compiled(&set, hp, seed, on_epoch)?;
    if !val.is_empty() {
        history.validation = Some(evaluate(&params, val.reveal(), model, lex, OovPolicy::RandomInit)?);
    }
    Ok((params, history))
}

/// Pointwise mean, min and max of the per-run curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_loss: Vec<f64>,
    pub min_loss: Vec<f64>,
    pub max_loss: Vec<f64>,
    pub mean_accuracy: Vec<f64>,
    pub min_accuracy: Vec<f64>,
    pub max_accuracy: Vec<f64>,
}

impl Aggregate {
    pub fn of(histories: &[RunHistory]) -> Aggregate {
        let stats = |curve: fn(&RunHistory) -> &Vec<f64>| {
            let len = histories.iter().map(|h| curve(h).len()).min().unwrap_or(0);
            let mut mean = Vec::with_capacity(len);
            let mut min = Vec::with_capacity(len);
            let mut max = Vec::with_capacity(len);
            for t in 0..len {
                let xs = histories.iter().map(|h| curve(h)[t]);
                mean.push(xs.clone().sum::<f64>() / histories.len() as f64);
                min.push(xs.clone().fold(f64::INFINITY, f64::min));
                max.push(xs.fold(f64::NEG_INFINITY, f64::max));
            }
            (mean, min, max)
        };
        let (mean_loss, min_loss, max_loss) = stats(|h| &h.loss);
        let (mean_accuracy, min_accuracy, max_accuracy) = stats(|h| &h.accuracy);
        Aggregate { mean_loss, min_loss, max_loss, mean_accuracy, min_accuracy, max_accuracy }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,min_loss,max_loss,mean_accuracy,min_accuracy,max_accuracy\n");
        for t in 0..self.mean_loss.len() {
            let _ = writeln!(
                s,
                "{t},{},{},{},{},{},{}",
                self.mean_loss[t],
                self.min_loss[t],
                self.max_loss[t],
                self.mean_accuracy[t],
                self.min_accuracy[t],
                self.max_accuracy[t]
            );
        }
        s
    }
}

pub fn curves_csv(h: &RunHistory) -> String {
    let mut s = String::from("epoch,loss,accuracy\n");
    for (t, (l, a)) in h.loss.iter().zip(&h.accuracy).enumerate() {
        let _ = writeln!(s, "{t},{l},{a}");
    }
    s
}

#[derive(Debug, Clone)]
pub struct MultiRun {
    pub runs: Vec<(ParamStore, RunHistory)>,
    pub aggregate: Aggregate,
}

/// `runs` independent fits with seeds `base_seed`, `base_seed + 1`, ...
pub fn multi_seed(set: &CompiledSet, hp: &Hyperparams, runs: usize, base_seed: u64) -> Result<MultiRun> {
    if runs == 0 {
        return Err(Error::Invalid("at least one run is required".into()));
    }
    let results: Vec<Result<(ParamStore, RunHistory)>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed + r;
            spsa_fit_compiled(set, hp, seed, &mut |_| {}).map_err(|e| e.with_context(format!("seed {seed}")))
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let histories: Vec<RunHistory> = runs.iter().map(|(_, h)| h.clone()).collect();
    Ok(MultiRun { aggregate: Aggregate::of(&histories), runs })
}
