//! Reduced words of free groups: reduction, length, substitution, and n-th
//! root extraction.
//!
//! Words are sequences of `symbol^exponent` letters; the reduced form merges
//! adjacent letters with equal symbols and drops zero exponents. Roots are
//! found by cyclic reduction followed by a literal-power test, which is the
//! standard linear-time periodicity argument and also certifies uniqueness.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Opaque word symbol. Variables and group constants are both symbols; the
/// distinction only matters at evaluation time, when constants must be bound.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(name.to_owned())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One `symbol^exponent` factor. The exponent is nonzero in reduced words.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub symbol: Symbol,
    pub exponent: i64,
}

impl Letter {
    pub fn new(symbol: &str, exponent: i64) -> Self {
        Letter {
            symbol: Symbol::new(symbol),
            exponent,
        }
    }
}

/// A reduced word: adjacent letters carry distinct symbols, exponents are
/// nonzero. The empty word is the group unit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WordError {
    /// A variable of the word was not bound at evaluation time.
    UnassignedSymbol(Symbol),
    /// Literal text did not parse as a word.
    Malformed(String),
}

impl fmt::Display for WordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordError::UnassignedSymbol(s) => write!(f, "unassigned symbol `{s}`"),
            WordError::Malformed(s) => write!(f, "malformed word literal: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for WordError {}

/// Reduce a raw letter sequence: merge equal adjacent symbols, drop zero
/// exponents. Idempotent, and a homomorphism from raw concatenation.
pub fn reduce_word(raw: &[Letter]) -> Word {
    let mut stack: Vec<Letter> = Vec::with_capacity(raw.len());
    for letter in raw {
        if letter.exponent == 0 {
            continue;
        }
        match stack.last_mut() {
            Some(top) if top.symbol == letter.symbol => {
                top.exponent += letter.exponent;
                if top.exponent == 0 {
                    stack.pop();
                }
            }
            _ => stack.push(letter.clone()),
        }
    }
    Word { letters: stack }
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    /// Single-letter word `symbol^exponent` (empty when the exponent is 0).
    pub fn generator(symbol: &str, exponent: i64) -> Self {
        reduce_word(&[Letter::new(symbol, exponent)])
    }

    pub fn from_letters(raw: &[Letter]) -> Self {
        reduce_word(raw)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Word length: the sum of absolute exponents.
    pub fn length(&self) -> u64 {
        self.letters.iter().map(|l| l.exponent.unsigned_abs()).sum()
    }

    /// Concatenate-and-reduce.
    pub fn mul(&self, other: &Word) -> Word {
        let mut raw = self.letters.clone();
        raw.extend_from_slice(&other.letters);
        reduce_word(&raw)
    }

    pub fn inverse(&self) -> Word {
        let letters = self
            .letters
            .iter()
            .rev()
            .map(|l| Letter {
                symbol: l.symbol.clone(),
                exponent: -l.exponent,
            })
            .collect();
        // Reversing a reduced word keeps it reduced.
        Word { letters }
    }

    pub fn pow(&self, n: u32) -> Word {
        let mut acc = Word::empty();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Split into `c⁻¹ · core · c` with the core cyclically reduced: either a
    /// single letter or a word whose first and last symbols differ.
    fn cyclic_reduce(&self) -> (Word, Word) {
        let mut core = self.letters.clone();
        let mut conj: Vec<Letter> = Vec::new();
        loop {
            if core.len() < 2 {
                break;
            }
            let first = core.first().unwrap().clone();
            let last = core.last().unwrap().clone();
            if first.symbol != last.symbol {
                break;
            }
            if first.exponent + last.exponent == 0 {
                // Full cancellation: w = a^-e (inner) a^e.
                core.pop();
                core.remove(0);
                conj.push(last);
            } else {
                // Rotate: a^e1 u a^e2 = a^-e2 (a^(e1+e2) u) a^e2.
                core.pop();
                core[0].exponent += last.exponent;
                conj.push(last);
            }
        }
        let conjugator = Word {
            letters: conj.into_iter().rev().collect(),
        };
        (Word { letters: core }, conjugator)
    }

    /// The unique n-th root `v` with `vⁿ = self`, if one exists.
    pub fn nth_root(&self, n: u32) -> Option<Word> {
        assert!(n >= 1, "root index must be positive");
        if n == 1 {
            return Some(self.clone());
        }
        if self.is_empty() {
            return Some(Word::empty());
        }
        let (core, conj) = self.cyclic_reduce();
        let root_core = if core.letters.len() == 1 {
            let letter = &core.letters[0];
            if letter.exponent % n as i64 != 0 {
                return None;
            }
            Word {
                letters: alloc::vec![Letter {
                    symbol: letter.symbol.clone(),
                    exponent: letter.exponent / n as i64,
                }],
            }
        } else {
            // Cyclically reduced multi-letter core: vⁿ concatenates with no
            // cancellation, so the root must be a literal period.
            if core.letters.len() % n as usize != 0 {
                return None;
            }
            let period = core.letters.len() / n as usize;
            let candidate = &core.letters[..period];
            let matches = core.letters.chunks(period).all(|chunk| chunk == candidate);
            if !matches {
                return None;
            }
            // The period must itself be cyclically reduced for the power to
            // stay literal.
            if candidate.first().unwrap().symbol == candidate.last().unwrap().symbol {
                return None;
            }
            Word {
                letters: candidate.to_vec(),
            }
        };
        let root = conj.inverse().mul(&root_core).mul(&conj);
        debug_assert_eq!(root.pow(n), *self);
        Some(root)
    }
}

/// Group oracle used by word evaluation: any representation that can multiply,
/// invert, and name its unit.
pub trait GroupOracle {
    type Elem: Clone + PartialEq;

    fn identity(&self) -> Self::Elem;
    fn multiply(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn invert(&self, a: &Self::Elem) -> Self::Elem;

    fn power(&self, a: &Self::Elem, n: i64) -> Self::Elem {
        let base = if n < 0 { self.invert(a) } else { a.clone() };
        let mut acc = self.identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.multiply(&acc, &base);
        }
        acc
    }
}

/// Evaluate a word under an assignment of every occurring symbol.
pub fn eval_word<O: GroupOracle>(
    word: &Word,
    assignment: &BTreeMap<Symbol, O::Elem>,
    oracle: &O,
) -> Result<O::Elem, WordError> {
    let mut acc = oracle.identity();
    for letter in word.letters() {
        let value = assignment
            .get(&letter.symbol)
            .ok_or_else(|| WordError::UnassignedSymbol(letter.symbol.clone()))?;
        acc = oracle.multiply(&acc, &oracle.power(value, letter.exponent));
    }
    Ok(acc)
}

impl fmt::Display for Word {
    /// Literal syntax: `a^2*b^-3`, with the empty word spelled `1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for (i, letter) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if letter.exponent == 1 {
                write!(f, "{}", letter.symbol)?;
            } else {
                write!(f, "{}^{}", letter.symbol, letter.exponent)?;
            }
        }
        Ok(())
    }
}

/// Parse the `a^2*b^-3` literal syntax (`1` is the empty word). Symbols are
/// runs of alphanumerics/underscores; `^exp` is optional and defaults to 1.
pub fn parse_word(text: &str) -> Result<Word, WordError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(WordError::Malformed("empty literal".to_owned()));
    }
    if text == "1" {
        return Ok(Word::empty());
    }
    let mut letters = Vec::new();
    for factor in text.split('*') {
        let factor = factor.trim();
        if factor.is_empty() {
            return Err(WordError::Malformed("empty factor".to_owned()));
        }
        let (sym, exp) = match factor.split_once('^') {
            Some((s, e)) => {
                let exp: i64 = e
                    .parse()
                    .map_err(|_| WordError::Malformed(factor.to_owned()))?;
                (s, exp)
            }
            None => (factor, 1),
        };
        if sym.is_empty() || !sym.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(WordError::Malformed(factor.to_owned()));
        }
        letters.push(Letter::new(sym, exp));
    }
    Ok(reduce_word(&letters))
}

/// Enumerate all reduced words of length at most `max_len` over the given
/// symbols. Exponential; intended as a brute-force oracle in tests and for
/// the root-search certificates.
pub fn enumerate_reduced_words(symbols: &[Symbol], max_len: u64) -> Vec<Word> {
    let mut out = alloc::vec![Word::empty()];
    let mut frontier = alloc::vec![Word::empty()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for word in &frontier {
            for sym in symbols {
                for sign in [1i64, -1] {
                    if let Some(last) = word.letters().last() {
                        if last.symbol == *sym && (last.exponent > 0) != (sign > 0) {
                            continue;
                        }
                    }
                    let extended = word.mul(&Word::generator(sym.name(), sign));
                    if extended.length() == word.length() + 1 && extended.length() <= max_len {
                        next.push(extended);
                    }
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort_by_key(|w| w.length());
    out.dedup();
    out
}
