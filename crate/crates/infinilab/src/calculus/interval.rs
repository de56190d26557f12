//! Finite unions of closed rational intervals.

use crate::rational::{parse_rational, Rational};
use std::fmt;
use std::str::FromStr;

use super::CalcError;

/// A finite union of closed intervals `[a_i, b_i]` with `a_i < b_i`, kept
/// sorted and pairwise disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    parts: Vec<(Rational, Rational)>,
}

impl serde::Serialize for IntervalUnion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl IntervalUnion {
    pub fn new(mut parts: Vec<(Rational, Rational)>) -> Result<Self, CalcError> {
        for (a, b) in &parts {
            if a >= b {
                return Err(CalcError::MalformedInterval {
                    detail: format!("need a < b, got [{a}, {b}]"),
                });
            }
        }
        parts.sort_by(|x, y| x.0.cmp(&y.0));
        for w in parts.windows(2) {
            if w[0].1 >= w[1].0 {
                return Err(CalcError::MalformedInterval {
                    detail: format!(
                        "parts [{}, {}] and [{}, {}] are not disjoint",
                        w[0].0, w[0].1, w[1].0, w[1].1
                    ),
                });
            }
        }
        Ok(IntervalUnion { parts })
    }

    pub fn interval(a: Rational, b: Rational) -> Result<Self, CalcError> {
        Self::new(vec![(a, b)])
    }

    pub fn parts(&self) -> &[(Rational, Rational)] {
        &self.parts
    }

    pub fn total_length(&self) -> Rational {
        self.parts.iter().map(|(a, b)| b - a).sum()
    }

    /// Set union, merging overlapping or touching parts.
    pub fn merge_union(&self, other: &Self) -> Self {
        let mut all: Vec<(Rational, Rational)> =
            self.parts.iter().chain(other.parts.iter()).cloned().collect();
        all.sort_by(|x, y| x.0.cmp(&y.0));
        let mut out: Vec<(Rational, Rational)> = Vec::new();
        for (a, b) in all {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        IntervalUnion { parts: out }
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "[]");
        }
        for (i, (a, b)) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            write!(f, "[{a},{b}]")?;
        }
        Ok(())
    }
}

impl FromStr for IntervalUnion {
    type Err = CalcError;

    /// Parses e.g. `[0,1]+[2,5/2]`.
    fn from_str(s: &str) -> Result<Self, CalcError> {
        let mut parts = Vec::new();
        for piece in s.split('+') {
            let piece = piece.trim();
            let inner = piece
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(']'))
                .ok_or_else(|| CalcError::MalformedInterval {
                    detail: format!("expected [a,b], got {piece:?}"),
                })?;
            let (a, b) = inner.split_once(',').ok_or_else(|| CalcError::MalformedInterval {
                detail: format!("expected a comma in {piece:?}"),
            })?;
            let a = parse_rational(a.trim()).map_err(|e| CalcError::MalformedInterval {
                detail: format!("bad endpoint in {piece:?}: {e}"),
            })?;
            let b = parse_rational(b.trim()).map_err(|e| CalcError::MalformedInterval {
                detail: format!("bad endpoint in {piece:?}: {e}"),
            })?;
            parts.push((a, b));
        }
        IntervalUnion::new(parts)
    }
}
