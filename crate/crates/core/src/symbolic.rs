//! Finite and eventually periodic words over the alphabet `{1..m}`.
//!
//! Infinite words are only ever eventually periodic. They are kept in a
//! canonical form (primitive period, shortest preperiod) so that structural
//! equality coincides with equality of the unrolled sequences.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of cylinders enumerated by a single call.
pub const DEFAULT_CYLINDER_BUDGET: u64 = 1 << 24;

/// Environment variable overriding [`DEFAULT_CYLINDER_BUDGET`].
pub const BUDGET_ENV: &str = "IFSLAB_BUDGET";

/// Current cylinder budget, honouring `IFSLAB_BUDGET` when it parses.
pub fn cylinder_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&b| b > 0)
        .unwrap_or(DEFAULT_CYLINDER_BUDGET)
}

/// Returns `m^n` if it fits in `budget`.
pub fn check_budget_with(m: usize, n: usize, budget: u64) -> Result<usize> {
    let mut count: u128 = 1;
    for _ in 0..n {
        count = count.saturating_mul(m as u128);
        if count > budget as u128 {
            return Err(Error::BudgetExceeded {
                requested: count,
                budget: budget as u128,
            });
        }
    }
    Ok(count as usize)
}

/// `m^n` checked against the global budget.
pub fn check_budget(m: usize, n: usize) -> Result<usize> {
    check_budget_with(m, n, cylinder_budget())
}

/// A finite word; symbols are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Checks every symbol against the alphabet size.
    pub fn validated(symbols: Vec<u8>, m: usize) -> Result<Self> {
        if let Some(&s) = symbols.iter().find(|&&s| s == 0 || s as usize > m) {
            return Err(Error::invalid(format!("symbol {s} outside 1..{m}")));
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn starts_with(&self, other: &Word) -> bool {
        self.0.starts_with(&other.0)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        Word(s)
    }

    pub fn push(&mut self, symbol: u8) {
        self.0.push(symbol);
    }

    /// Position of this word in the lexicographic enumeration of `A^n`.
    pub fn index(&self, m: usize) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &s| acc * m + (s as usize - 1))
    }

    /// Inverse of [`Word::index`].
    pub fn from_index(mut index: usize, m: usize, n: usize) -> Word {
        let mut symbols = vec![0u8; n];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % m) as u8 + 1;
            index /= m;
        }
        Word(symbols)
    }

    pub fn max_symbol(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0) as usize
    }
}

impl From<Vec<u8>> for Word {
    fn from(v: Vec<u8>) -> Self {
        Word(v)
    }
}

impl From<&[u8]> for Word {
    fn from(v: &[u8]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

/// An infinite word `pre · per · per · ...` in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventuallyPeriodicWord {
    preperiod: Word,
    period: Word,
}

impl EventuallyPeriodicWord {
    pub fn new(preperiod: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::invalid("period must be nonempty"));
        }
        if preperiod.symbols().contains(&0) || period.symbols().contains(&0) {
            return Err(Error::invalid("symbols are 1-based"));
        }
        Ok(Self::canonical(preperiod.0, period.0))
    }

    /// Convenience constructor from raw symbol slices.
    pub fn from_slices(preperiod: &[u8], period: &[u8]) -> Result<Self> {
        Self::new(Word::from(preperiod), Word::from(period))
    }

    pub fn periodic(period: &[u8]) -> Result<Self> {
        Self::from_slices(&[], period)
    }

    fn canonical(mut pre: Vec<u8>, per: Vec<u8>) -> Self {
        let mut per = primitive_root(per);
        // absorb trailing preperiod symbols into a rotation of the period
        while let (Some(&last_pre), Some(&last_per)) = (pre.last(), per.last()) {
            if last_pre != last_per {
                break;
            }
            pre.pop();
            per.rotate_right(1);
        }
        EventuallyPeriodicWord {
            preperiod: Word(pre),
            period: Word(per),
        }
    }

    pub fn preperiod(&self) -> &Word {
        &self.preperiod
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    /// Symbol at 0-based position `k` of the unrolled word.
    pub fn symbol_at(&self, k: usize) -> u8 {
        let pre = self.preperiod.symbols();
        if k < pre.len() {
            pre[k]
        } else {
            let per = self.period.symbols();
            per[(k - pre.len()) % per.len()]
        }
    }

    pub fn max_symbol(&self) -> usize {
        self.preperiod.max_symbol().max(self.period.max_symbol())
    }

    /// The first `n` symbols.
    pub fn prefix(&self, n: usize) -> Word {
        Word((0..n).map(|k| self.symbol_at(k)).collect())
    }

    /// Maximal common prefix `i ∧ j`.
    pub fn common_prefix(&self, other: &Self) -> Result<Word> {
        if self == other {
            return Err(Error::EqualWords);
        }
        let horizon = self.preperiod.len().max(other.preperiod.len())
            + lcm(self.period.len(), other.period.len());
        let mut out = Vec::new();
        for k in 0..horizon {
            let a = self.symbol_at(k);
            if a != other.symbol_at(k) {
                return Ok(Word(out));
            }
            out.push(a);
        }
        // canonical forms differ but no divergence within the horizon cannot
        // happen for distinct eventually periodic words
        Err(Error::EqualWords)
    }

    /// Left shift `σ`.
    pub fn shift(&self) -> Self {
        let pre = self.preperiod.symbols();
        if pre.is_empty() {
            let mut per = self.period.0.clone();
            per.rotate_left(1);
            Self::canonical(Vec::new(), per)
        } else {
            Self::canonical(pre[1..].to_vec(), self.period.0.clone())
        }
    }

    /// `σ^k`.
    pub fn shift_by(&self, k: usize) -> Self {
        let pre = self.preperiod.symbols();
        if k <= pre.len() {
            return Self::canonical(pre[k..].to_vec(), self.period.0.clone());
        }
        let mut per = self.period.0.clone();
        let r = (k - pre.len()) % per.len();
        per.rotate_left(r);
        Self::canonical(Vec::new(), per)
    }

    pub fn is_purely_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }
}

impl fmt::Display for EventuallyPeriodicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^inf", self.preperiod, self.period)
    }
}

fn primitive_root(per: Vec<u8>) -> Vec<u8> {
    let n = per.len();
    for d in 1..n {
        if n.is_multiple_of(d) && (d..n).all(|k| per[k] == per[k - d]) {
            return per[..d].to_vec();
        }
    }
    per
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// All `m^n` words of length `n` in lexicographic order.
pub fn enumerate_words(m: usize, n: usize) -> Result<Vec<Word>> {
    enumerate_words_with_budget(m, n, cylinder_budget())
}

pub fn enumerate_words_with_budget(m: usize, n: usize, budget: u64) -> Result<Vec<Word>> {
    if m < 2 {
        return Err(Error::invalid("alphabet needs at least two symbols"));
    }
    let count = check_budget_with(m, n, budget)?;
    Ok((0..count).map(|idx| Word::from_index(idx, m, n)).collect())
}

/// All words of length `0..=max_len`, shortest first.
pub fn enumerate_words_up_to(m: usize, max_len: usize) -> Result<Vec<Word>> {
    let mut out = Vec::new();
    for n in 0..=max_len {
        out.extend(enumerate_words(m, n)?);
    }
    Ok(out)
}
