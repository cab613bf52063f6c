//! Storage for trained angles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::circuit::ParamSymbol;
use crate::error::{Error, Result};
use crate::sim::SymbolTable;

/// Angles keyed by symbol. `seed` records how the values were produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    pub seed: u64,
    values: BTreeMap<ParamSymbol, f64>,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        ParamStore { seed, values: BTreeMap::new() }
    }

    pub fn get(&self, s: &ParamSymbol) -> Option<f64> {
        self.values.get(s).copied()
    }

    pub fn set(&mut self, s: ParamSymbol, value: f64) {
        self.values.insert(s, value);
    }

    pub fn contains(&self, s: &ParamSymbol) -> bool {
        self.values.contains_key(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParamSymbol, f64)> {
        self.values.iter().map(|(k, &v)| (k, v))
    }

    /// Draws a uniform angle in `[0, 2π)` for each symbol not yet present.
    pub fn init_missing<'a, R: Rng>(&mut self, symbols: impl IntoIterator<Item = &'a ParamSymbol>, rng: &mut R) {
        for s in symbols {
            if !self.values.contains_key(s) {
                let v = rng.gen_range(0.0..std::f64::consts::TAU);
                self.values.insert(s.clone(), v);
            }
        }
    }

    pub fn from_table(table: &SymbolTable, angles: &[f64], seed: u64) -> Self {
        let values = table.symbols().iter().cloned().zip(angles.iter().copied()).collect();
        ParamStore { seed, values }
    }

    /// Angles for `table` in slot order. Every symbol must be present.
    pub fn to_vec(&self, table: &SymbolTable) -> Result<Vec<f64>> {
        table.symbols().iter().map(|s| self.get(s).ok_or_else(|| Error::MissingSymbol(s.to_string()))).collect()
    }

    /// Tab-separated `word type index angle`, sorted by word, type and index.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&str, String, u16, f64)> =
            self.values.iter().map(|(s, &v)| (s.word.as_str(), s.gtype.to_string(), s.index, v)).collect();
        rows.sort_by(|a, b| (a.0, &a.1, a.2).cmp(&(b.0, &b.1, b.2)));
        let mut out = format!("# seed {}\n", self.seed);
        for (w, t, i, v) in rows {
            let _ = writeln!(out, "{w}\t{t}\t{i}\t{v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut store = ParamStore::new(0);
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let schema = |message: String| Error::Schema { line, message };
            let row = raw.trim_end_matches('\r');
            if row.trim().is_empty() {
                continue;
            }
            if let Some(comment) = row.strip_prefix('#') {
                if let Some(seed) = comment.trim().strip_prefix("seed") {
                    store.seed = seed.trim().parse().map_err(|_| schema(format!("bad seed `{}`", seed.trim())))?;
                }
                continue;
            }
            let cols: Vec<&str> = row.split('\t').collect();
            if cols.len() != 4 {
                return Err(schema(format!("expected 4 columns, found {}", cols.len())));
            }
            let gtype = cols[1].parse().map_err(|e: Error| schema(e.to_string()))?;
            let index = cols[2].parse().map_err(|_| schema(format!("bad index `{}`", cols[2])))?;
            let angle: f64 = cols[3].parse().map_err(|_| schema(format!("bad angle `{}`", cols[3])))?;
            if !angle.is_finite() {
                return Err(schema(format!("non-finite angle `{}`", cols[3])));
            }
            let sym = ParamSymbol { word: cols[0].to_string(), gtype, index };
            if store.values.insert(sym, angle).is_some() {
                return Err(schema(format!("duplicate parameter {}[{}]{}", cols[0], cols[1], cols[2])));
            }
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
