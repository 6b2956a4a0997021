//! Shattered coordinate sets of `S ⊆ {1..k}^n`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KmMode {
    Exact,
    Greedy,
}

/// Default cap on `n` for exact extraction.
pub const KM_EXACT_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmReport {
    pub k: u32,
    pub n: usize,
    pub size: usize,
    pub mode: KmMode,
    /// 0-based coordinates of the shattered set.
    pub i: Vec<usize>,
    /// For each pattern on `I` (sorted), the index in `S` of a tuple restricting to it.
    pub table: Vec<(Vec<u32>, usize)>,
}

/// A validated tuple set with symbols in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleSet {
    k: u32,
    n: usize,
    tuples: Vec<Vec<u32>>,
}

impl TupleSet {
    pub fn new(k: u32, tuples: Vec<Vec<u32>>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Precondition("k must be at least 2".into()));
        }
        let n = tuples.first().map_or(0, Vec::len);
        for t in &tuples {
            if t.len() != n {
                return Err(Error::SizeMismatch(t.len(), n));
            }
            if let Some(v) = t.iter().find(|&&v| v == 0 || v > k) {
                return Err(Error::InvalidPattern(format!("symbol {v} outside 1..={k}")));
            }
        }
        let mut seen = HashSet::new();
        let tuples = tuples.into_iter().filter(|t| seen.insert(t.clone())).collect();
        Ok(Self { k, n, tuples })
    }

    /// One tuple per line, symbols separated by whitespace or commas; `#` starts a comment.
    pub fn parse(k: u32, text: &str) -> Result<Self> {
        let tuples = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|w| !w.is_empty())
                    .map(|w| w.parse::<u32>().map_err(|e| Error::Parse(format!("{w}: {e}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(k, tuples)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tuples(&self) -> &[Vec<u32>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Witness table of `S|_I`, or `None` if some pattern on `I` is missing.
    pub fn shatter_table(&self, i: &[usize]) -> Option<BTreeMap<Vec<u32>, usize>> {
        let need = (self.k as u128).checked_pow(i.len() as u32)?;
        if need > self.tuples.len() as u128 {
            return None;
        }
        let mut table = BTreeMap::new();
        for (idx, t) in self.tuples.iter().enumerate() {
            table.entry(i.iter().map(|&c| t[c]).collect()).or_insert(idx);
        }
        (table.len() as u128 == need).then_some(table)
    }

    pub fn is_shattered(&self, i: &[usize]) -> bool {
        self.shatter_table(i).is_some()
    }
}

/// Largest `m` with `k^m ≤ size`.
fn log_floor(k: u32, size: usize) -> usize {
    let mut m = 0;
    let mut p = 1u128;
    while p * k as u128 <= size as u128 {
        p *= k as u128;
        m += 1;
    }
    m
}

/// Extract a shattered `I` with its restriction table.
pub fn km_extract(s: &TupleSet, mode: KmMode, cap: usize) -> Result<KmReport> {
    let i = match mode {
        KmMode::Greedy => (0..s.n).fold(Vec::new(), |mut i, c| {
            i.push(c);
            if !s.is_shattered(&i) {
                i.pop();
            }
            i
        }),
        KmMode::Exact => {
            if s.n > cap {
                return Err(Error::BudgetExceeded(format!("n = {} exceeds the exact cap {cap}", s.n)));
            }
            let limit = log_floor(s.k, s.len());
            let mut best = Vec::new();
            // shattered sets are downward closed, so only shattered prefixes are extended
            let mut stack = vec![(0usize, Vec::new())];
            while let Some((c, cur)) = stack.pop() {
                if cur.len() > best.len() {
                    best = cur.clone();
                }
                if best.len() == limit || c == s.n || cur.len() + (s.n - c) <= best.len() || cur.len() == limit {
                    continue;
                }
                stack.push((c + 1, cur.clone()));
                let mut with = cur;
                with.push(c);
                if s.is_shattered(&with) {
                    stack.push((c + 1, with));
                }
            }
            best
        }
    };
    let table = s.shatter_table(&i).unwrap_or_default().into_iter().collect();
    Ok(KmReport { k: s.k, n: s.n, size: s.len(), mode, i, table })
}
