//! Hereditarily finite sets in canonical form.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::{ForcingError, Result};

/// A hereditarily finite set. The element list is sorted and duplicate-free,
/// recursively, so structural equality is extensional equality and the derived
/// order is total.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HFSet {
    elems: Vec<HFSet>,
}

impl HFSet {
    pub fn empty() -> Self {
        HFSet { elems: Vec::new() }
    }

    /// Canonicalizes on the way in: sorts and deduplicates.
    pub fn from_elems(mut elems: Vec<HFSet>) -> Self {
        elems.sort();
        elems.dedup();
        HFSet { elems }
    }

    pub fn singleton(x: HFSet) -> Self {
        HFSet { elems: vec![x] }
    }

    pub fn pair(a: HFSet, b: HFSet) -> Self {
        Self::from_elems(vec![a, b])
    }

    pub fn union(&self, other: &HFSet) -> Self {
        let mut elems = self.elems.clone();
        elems.extend(other.elems.iter().cloned());
        Self::from_elems(elems)
    }

    pub fn elems(&self) -> &[HFSet] {
        &self.elems
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, x: &HFSet) -> bool {
        self.elems.binary_search(x).is_ok()
    }

    /// 0 for the empty set, otherwise one more than the largest element rank.
    pub fn rank(&self) -> usize {
        self.elems.iter().map(|e| e.rank() + 1).max().unwrap_or(0)
    }

    /// The numeral n = {0, 1, ..., n-1}.
    pub fn von_neumann(n: usize) -> Self {
        let mut elems: Vec<HFSet> = Vec::with_capacity(n);
        for _ in 0..n {
            elems.push(HFSet {
                elems: elems.clone(),
            });
        }
        // elems is ascending by construction: each numeral extends the last.
        HFSet { elems }
    }

    /// Some(n) iff this set is the numeral n.
    pub fn to_numeral(&self) -> Option<usize> {
        for (j, e) in self.elems.iter().enumerate() {
            if e.to_numeral() != Some(j) {
                return None;
            }
        }
        Some(self.elems.len())
    }

    /// Every set of rank at most `rank`, in canonical order. Grows as a tower
    /// of powersets: 1, 2, 4, 16, 65536, ... elements.
    pub fn universe(rank: usize) -> Vec<HFSet> {
        let mut layer = vec![HFSet::empty()];
        for _ in 0..rank {
            let mut next = Vec::with_capacity(1usize << layer.len());
            for mask in 0u64..(1u64 << layer.len()) {
                let elems = layer
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask >> j & 1 == 1)
                    .map(|(_, e)| e.clone())
                    .collect();
                next.push(HFSet::from_elems(elems));
            }
            next.sort();
            next.dedup();
            layer = next;
        }
        layer
    }
}

impl fmt::Debug for HFSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for HFSet {
    /// Numerals print as digits, everything else in braces; `{}` is `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.to_numeral() {
            return write!(f, "{n}");
        }
        write!(f, "{{")?;
        for (j, e) in self.elems.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for HFSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub(crate) struct SetParser<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> SetParser<'a> {
    pub fn new(s: &'a str) -> Self {
        SetParser {
            bytes: s.as_bytes(),
            pos: 0,
        }
    }

    pub fn err<T>(&self, msg: &str) -> Result<T> {
        Err(ForcingError::Parse {
            at: self.pos,
            msg: msg.to_string(),
        })
    }

    pub fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    pub fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    pub fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, b: u8) -> Result<()> {
        if self.eat(b) {
            Ok(())
        } else {
            self.err(&format!("expected '{}'", b as char))
        }
    }

    pub fn number(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.peek().map_or(false, |b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ForcingError::Parse {
                at: start,
                msg: "number out of range".to_string(),
            })
    }

    /// `{a,b,...}` or a numeral shorthand.
    pub fn hfset(&mut self) -> Result<HFSet> {
        self.skip_ws();
        match self.peek() {
            Some(b'{') => {
                self.pos += 1;
                let mut elems = Vec::new();
                self.skip_ws();
                if !self.eat(b'}') {
                    loop {
                        elems.push(self.hfset()?);
                        self.skip_ws();
                        if self.eat(b',') {
                            continue;
                        }
                        self.expect(b'}')?;
                        break;
                    }
                }
                Ok(HFSet::from_elems(elems))
            }
            Some(b) if b.is_ascii_digit() => Ok(HFSet::von_neumann(self.number()?)),
            _ => self.err("expected '{' or a numeral"),
        }
    }
}

impl FromStr for HFSet {
    type Err = ForcingError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = SetParser::new(s);
        let set = p.hfset()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return p.err("trailing input");
        }
        Ok(set)
    }
}
