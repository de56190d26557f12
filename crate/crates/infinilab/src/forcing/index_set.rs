//! Eventually periodic subsets of the index domain.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{ForcingError, Result};

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// A subset of the naturals: bit `n` is `prelude[n]` below the prelude length,
/// then `period` repeats forever. Every set this crate's constructions produce
/// (restrictions, staircases, parity splits) stays in this class, which is what
/// makes "for almost all indices" decidable: an exception pattern beyond the
/// prelude would recur periodically.
///
/// Stored normalized (minimal period, then minimal prelude), so derived
/// equality is semantic equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IndexSet {
    prelude: Vec<bool>,
    period: Vec<bool>,
}

impl IndexSet {
    pub fn new(prelude: Vec<bool>, period: Vec<bool>) -> Result<Self> {
        if period.is_empty() {
            return Err(ForcingError::Parse {
                at: 0,
                msg: "period must be nonempty".to_string(),
            });
        }
        Ok(IndexSet { prelude, period }.normalized())
    }

    pub fn full() -> Self {
        IndexSet {
            prelude: vec![],
            period: vec![true],
        }
    }

    pub fn empty() -> Self {
        IndexSet {
            prelude: vec![],
            period: vec![false],
        }
    }

    pub fn evens() -> Self {
        IndexSet {
            prelude: vec![],
            period: vec![true, false],
        }
    }

    pub fn odds() -> Self {
        IndexSet {
            prelude: vec![],
            period: vec![false, true],
        }
    }

    /// The finite set of the given members.
    pub fn finite(members: &[usize]) -> Self {
        let len = members.iter().map(|&n| n + 1).max().unwrap_or(0);
        let mut prelude = vec![false; len];
        for &n in members {
            prelude[n] = true;
        }
        IndexSet {
            prelude,
            period: vec![false],
        }
        .normalized()
    }

    /// Builds from an explicit window and a period continuing beyond it.
    pub fn from_fn(prelude_len: usize, period_len: usize, f: impl Fn(usize) -> bool) -> Self {
        let prelude = (0..prelude_len).map(&f).collect();
        let period = (prelude_len..prelude_len + period_len).map(&f).collect();
        IndexSet { prelude, period }.normalized()
    }

    fn normalized(mut self) -> Self {
        // Minimal period: the smallest divisor whose tiling reproduces it.
        let len = self.period.len();
        for d in 1..=len {
            if len % d == 0 && (0..len).all(|j| self.period[j] == self.period[j % d]) {
                self.period.truncate(d);
                break;
            }
        }
        // Shrink the prelude while its last bit agrees with the period
        // continued one step earlier (which rotates the period's phase).
        while let Some(&last) = self.prelude.last() {
            let d = self.period.len();
            if last == self.period[d - 1] {
                self.prelude.pop();
                self.period.rotate_right(1);
            } else {
                break;
            }
        }
        // Re-minimize: rotation can expose a shorter period only via the loop
        // above ending, so one pass suffices; but a constant period may have
        // been rotated into itself harmlessly.
        self
    }

    pub fn contains(&self, n: usize) -> bool {
        if n < self.prelude.len() {
            self.prelude[n]
        } else {
            self.period[(n - self.prelude.len()) % self.period.len()]
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.period.iter().any(|&b| b)
    }

    pub fn is_bounded(&self) -> bool {
        !self.is_unbounded()
    }

    pub fn prelude_len(&self) -> usize {
        self.prelude.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn ones_per_period(&self) -> usize {
        self.period.iter().filter(|&&b| b).count()
    }

    fn binop(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        let l = self.prelude.len().max(other.prelude.len());
        let p = lcm(self.period.len(), other.period.len());
        Self::from_fn(l, p, |n| f(self.contains(n), other.contains(n)))
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a || b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Self {
        IndexSet {
            prelude: self.prelude.iter().map(|&b| !b).collect(),
            period: self.period.iter().map(|&b| !b).collect(),
        }
        .normalized()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.difference(other).is_empty_set()
    }

    pub fn is_empty_set(&self) -> bool {
        self.prelude.iter().all(|&b| !b) && self.period.iter().all(|&b| !b)
    }

    /// Smallest member, if any.
    pub fn min_element(&self) -> Option<usize> {
        let bound = self.prelude.len() + self.period.len();
        (0..bound).find(|&n| self.contains(n))
    }

    /// Smallest member strictly greater than `after`.
    pub fn next_member(&self, after: usize) -> Option<usize> {
        let bound = (after + 1).max(self.prelude.len()) + self.period.len();
        (after + 1..=bound).find(|&n| self.contains(n))
    }

    /// The set with one member removed.
    pub fn without(&self, n: usize) -> Self {
        let l = self.prelude.len().max(n + 1);
        Self::from_fn(l, self.period.len(), |i| i != n && self.contains(i))
    }

    pub fn members_below(&self, bound: usize) -> Vec<usize> {
        (0..bound).filter(|&n| self.contains(n)).collect()
    }

    /// The `ord`-th member in increasing order (0-based).
    pub fn nth_member(&self, ord: usize) -> Option<usize> {
        if !self.is_unbounded() {
            return self.members_up(ord);
        }
        let l = self.prelude.len();
        let per = self.period.len();
        let ones = self.ones_per_period();
        let in_prelude = self.prelude.iter().filter(|&&b| b).count();
        if ord < in_prelude {
            return self.members_up(ord);
        }
        let beyond = ord - in_prelude;
        let (block, within) = (beyond / ones, beyond % ones);
        let mut seen = 0;
        for j in 0..per {
            if self.period[j] {
                if seen == within {
                    return Some(l + block * per + j);
                }
                seen += 1;
            }
        }
        None
    }

    fn members_up(&self, ord: usize) -> Option<usize> {
        let mut seen = 0;
        let bound = self.prelude.len() + (ord + 1) * self.period.len() + 1;
        for n in 0..bound {
            if self.contains(n) {
                if seen == ord {
                    return Some(n);
                }
                seen += 1;
            }
        }
        None
    }

    /// Position of `n` among the members, if `n` is one.
    pub fn member_ordinal(&self, n: usize) -> Option<usize> {
        if !self.contains(n) {
            return None;
        }
        Some((0..n).filter(|&j| self.contains(j)).count())
    }

    /// Overrides bits below `bits.len()`, keeping this set beyond.
    pub fn splice_prefix(&self, bits: &[bool]) -> Self {
        let l = bits.len().max(self.prelude.len());
        Self::from_fn(l, self.period.len(), |n| {
            if n < bits.len() {
                bits[n]
            } else {
                self.contains(n)
            }
        })
    }
}

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn bits_from_string(s: &str, at: usize) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(ForcingError::Parse {
                at,
                msg: format!("expected bits, found {c:?}"),
            }),
        })
        .collect()
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "prelude={} period={}",
            bits_to_string(&self.prelude),
            bits_to_string(&self.period)
        )
    }
}

impl FromStr for IndexSet {
    type Err = ForcingError;

    fn from_str(s: &str) -> Result<Self> {
        let mut prelude = None;
        let mut period = None;
        for field in s.split_whitespace() {
            if let Some(bits) = field.strip_prefix("prelude=") {
                prelude = Some(bits_from_string(bits, 0)?);
            } else if let Some(bits) = field.strip_prefix("period=") {
                period = Some(bits_from_string(bits, 0)?);
            } else {
                return Err(ForcingError::Parse {
                    at: 0,
                    msg: format!("unexpected field {field:?}"),
                });
            }
        }
        IndexSet::new(
            prelude.unwrap_or_default(),
            period.ok_or(ForcingError::Parse {
                at: 0,
                msg: "missing period=".to_string(),
            })?,
        )
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("IndexSet", 2)?;
        s.serialize_field("prelude", &bits_to_string(&self.prelude))?;
        s.serialize_field("period", &bits_to_string(&self.period))?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_gives_semantic_equality() {
        let a = IndexSet::new(vec![true], vec![true]).unwrap();
        assert_eq!(a, IndexSet::full());
        let b = IndexSet::new(vec![true, false], vec![true, false, true, false]).unwrap();
        assert_eq!(b, IndexSet::evens());
        assert_eq!(b.prelude_len(), 0);
        assert_eq!(b.period_len(), 2);
    }

    #[test]
    fn membership_follows_period() {
        let p = IndexSet::new(vec![true, true, false], vec![false, true]).unwrap();
        let got: Vec<bool> = (0..8).map(|n| p.contains(n)).collect();
        assert_eq!(
            got,
            vec![true, true, false, false, true, false, true, false]
        );
        assert!(p.is_unbounded());
        assert!(IndexSet::finite(&[3, 5]).is_bounded());
    }

    #[test]
    fn boolean_algebra_is_exact() {
        let e = IndexSet::evens();
        let o = IndexSet::odds();
        assert!(e.intersect(&o).is_empty_set());
        assert_eq!(e.union(&o), IndexSet::full());
        assert_eq!(e.complement(), o);
        assert!(e.is_subset_of(&IndexSet::full()));
        assert!(!IndexSet::full().is_subset_of(&e));
        // Removing a finite chunk leaves a bounded difference.
        let trimmed = e.difference(&IndexSet::finite(&[0, 2, 4]));
        assert!(e.difference(&trimmed).is_bounded());
        assert_eq!(trimmed.min_element(), Some(6));
    }

    #[test]
    fn member_enumeration() {
        let p = IndexSet::new(vec![false, true], vec![false, false, true]).unwrap();
        // members: 1, 4, 7, 10, ...
        assert_eq!(p.nth_member(0), Some(1));
        assert_eq!(p.nth_member(1), Some(4));
        assert_eq!(p.nth_member(3), Some(10));
        assert_eq!(p.member_ordinal(7), Some(2));
        assert_eq!(p.member_ordinal(2), None);
        assert_eq!(p.next_member(4), Some(7));
        assert_eq!(p.without(1).min_element(), Some(4));
    }

    #[test]
    fn display_and_parse_round_trip() {
        let p = IndexSet::new(vec![true, true, false], vec![true, false]).unwrap();
        let s = p.to_string();
        let back: IndexSet = s.parse().unwrap();
        assert_eq!(back, p);
        let full: IndexSet = "prelude= period=1".parse().unwrap();
        assert_eq!(full, IndexSet::full());
        assert!("period=2".parse::<IndexSet>().is_err());
        assert!("prelude=1".parse::<IndexSet>().is_err());
    }
}
