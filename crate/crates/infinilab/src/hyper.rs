//! A truncated fragment of the field of rational-coefficient generalized
//! power series in one designated positive infinitesimal `eps`.
//!
//! A value is a finite sum of terms `c * eps^q` with nonzero rational
//! coefficients `c` and strictly increasing rational exponents `q`, plus an
//! optional truncation order: `trunc = Some(t)` means the value is only
//! determined below exponent `t` (an unknown `O(eps^t)` tail may follow).
//! Arithmetic is exact on exact inputs; division by a non-monomial produces a
//! truncated result. Ordering is lexicographic on the leading term, which
//! makes `eps` a positive number smaller than every positive rational.
//!
//! # Examples
//!
//! ```
//! use infinilab::hyper::{Class, LCNum};
//! use infinilab::rational::rint;
//!
//! let eps = LCNum::epsilon();
//! let x = LCNum::from_int(3) + eps.clone();
//! assert_eq!(x.classify().unwrap(), Class::LimitedAppreciable);
//! assert_eq!(x.shadow().unwrap(), rint(3));
//! assert!(x.approx(&LCNum::from_int(3)).unwrap());
//! assert!(LCNum::zero() < eps && eps < LCNum::from_rat(1, 1_000_000));
//! ```

use crate::rational::{self, rat, rint, Rational};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;
use thiserror::Error;

/// Default exponent order for series-producing operations (division by a
/// non-monomial with exact operands, transcendental series nodes).
pub const DEFAULT_ORDER: i64 = 8;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum HyperError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("indeterminate below truncation order {0}: more terms are needed")]
    Indeterminate(Rational),
    #[error("shadow is undefined for an unlimited number")]
    UnlimitedShadow,
    #[error("decimal digit {digit} at place {place} is outside {{0,1}}")]
    DecodeDigit { digit: u32, place: usize },
    #[error("value {0} is outside [0,1)")]
    DecodeRange(Rational),
    #[error("malformed hyperreal literal at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
}

/// Order-of-magnitude classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Zero,
    Infinitesimal,
    LimitedAppreciable,
    Unlimited,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Class::Zero => "zero",
            Class::Infinitesimal => "infinitesimal",
            Class::LimitedAppreciable => "limited_appreciable",
            Class::Unlimited => "unlimited",
        };
        f.write_str(s)
    }
}

/// A truncated Levi-Civita style number: finitely many terms `(q, c)` with
/// exponents strictly increasing and coefficients nonzero, all exponents
/// strictly below the truncation order when one is present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LCNum {
    terms: Vec<(Rational, Rational)>,
    trunc: Option<Rational>,
}

impl LCNum {
    /// Builds a value from raw `(exponent, coefficient)` pairs, merging
    /// duplicates, dropping zero coefficients and terms at or above `trunc`.
    pub fn new(terms: Vec<(Rational, Rational)>, trunc: Option<Rational>) -> Self {
        let mut ts = terms;
        ts.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(ts.len());
        for (q, c) in ts {
            if let Some(last) = merged.last_mut() {
                if last.0 == q {
                    last.1 += c;
                    continue;
                }
            }
            merged.push((q, c));
        }
        merged.retain(|(_, c)| !c.is_zero());
        if let Some(t) = &trunc {
            merged.retain(|(q, _)| q < t);
        }
        LCNum { terms: merged, trunc }
    }

    pub fn zero() -> Self {
        LCNum { terms: vec![], trunc: None }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// The designated infinitesimal.
    pub fn epsilon() -> Self {
        LCNum { terms: vec![(rint(1), rint(1))], trunc: None }
    }

    pub fn from_rational(r: Rational) -> Self {
        if r.is_zero() {
            Self::zero()
        } else {
            LCNum { terms: vec![(rint(0), r)], trunc: None }
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rint(n))
    }

    pub fn from_rat(n: i64, d: i64) -> Self {
        Self::from_rational(rat(n, d))
    }

    /// A single term `c * eps^q`.
    pub fn monomial(c: Rational, q: Rational) -> Self {
        Self::new(vec![(q, c)], None)
    }

    pub fn terms(&self) -> &[(Rational, Rational)] {
        &self.terms
    }

    pub fn trunc(&self) -> Option<&Rational> {
        self.trunc.as_ref()
    }

    /// True when no truncation tail is present.
    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.trunc.is_none()
    }

    /// Leading `(exponent, coefficient)` pair, if any term is present.
    pub fn lead(&self) -> Option<(&Rational, &Rational)> {
        self.terms.first().map(|(q, c)| (q, c))
    }

    /// Re-truncates to order `t` (keeps the tighter of the two orders).
    pub fn with_trunc(&self, t: Rational) -> Self {
        let trunc = match &self.trunc {
            Some(u) if *u <= t => Some(u.clone()),
            _ => Some(t),
        };
        Self::new(self.terms.clone(), trunc)
    }

    /// Coefficient at exponent `q` (zero when the term is absent).
    pub fn coeff(&self, q: &Rational) -> Rational {
        self.terms
            .iter()
            .find(|(e, _)| e == q)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| rint(0))
    }

    fn min_trunc(a: &Option<Rational>, b: &Option<Rational>) -> Option<Rational> {
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y).clone()),
            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
            (None, None) => None,
        }
    }

    fn add_impl(&self, other: &Self) -> Self {
        let trunc = Self::min_trunc(&self.trunc, &other.trunc);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms, trunc)
    }

    fn neg_impl(&self) -> Self {
        LCNum {
            terms: self.terms.iter().map(|(q, c)| (q.clone(), -c.clone())).collect(),
            trunc: self.trunc.clone(),
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        if self.is_exact_zero() || other.is_exact_zero() {
            return Self::zero();
        }
        // Error order of a product: each factor's tail multiplies the other
        // factor's leading term, and the two tails multiply each other.
        let mut cands: Vec<Rational> = Vec::new();
        if let Some(s) = &self.trunc {
            if let Some((lb, _)) = other.lead() {
                cands.push(s.clone() + lb.clone());
            }
            if let Some(t) = &other.trunc {
                cands.push(s.clone() + t.clone());
            }
        }
        if let Some(t) = &other.trunc {
            if let Some((la, _)) = self.lead() {
                cands.push(t.clone() + la.clone());
            }
        }
        let trunc = cands.into_iter().min();
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (qa, ca) in &self.terms {
            for (qb, cb) in &other.terms {
                terms.push((qa.clone() + qb.clone(), ca * cb));
            }
        }
        Self::new(terms, trunc)
    }

    /// Multiplicative inverse. For a non-monomial the geometric expansion is
    /// carried to relative order `rel_order` (defaulting to the input's own
    /// relative truncation order, or [`DEFAULT_ORDER`] for exact inputs).
    pub fn inv(&self, rel_order: Option<Rational>) -> Result<Self, HyperError> {
        let (lead_q, lead_c) = match self.lead() {
            Some((q, c)) => (q.clone(), c.clone()),
            None => {
                return Err(match &self.trunc {
                    None => HyperError::DivisionByZero,
                    Some(t) => HyperError::Indeterminate(t.clone()),
                })
            }
        };
        let lead_inv = Self::monomial(lead_c.clone().recip(), -lead_q.clone());
        if self.terms.len() == 1 && self.trunc.is_none() {
            return Ok(lead_inv);
        }
        // self = lead * (1 + u) with ord(u) > 0; invert the unit part by a
        // geometric series carried to the working relative order.
        let own_rel = self.trunc.as_ref().map(|t| t.clone() - lead_q.clone());
        let rel = match (rel_order, own_rel) {
            (Some(r), Some(o)) => r.min(o),
            (Some(r), None) => r,
            (None, Some(o)) => o,
            (None, None) => rint(DEFAULT_ORDER),
        };
        if rel <= rint(0) {
            return Err(HyperError::Indeterminate(self.trunc.clone().unwrap_or_else(|| rint(0))));
        }
        let unit = self.mul_impl(&lead_inv); // 1 + u
        let u = unit.add_impl(&Self::one().neg_impl()).with_trunc(rel.clone());
        let u_ord = match u.lead() {
            Some((q, _)) => q.clone(),
            None => {
                // unit part is 1 up to the working order
                let mut out = lead_inv.with_trunc(rel.clone() - lead_q.clone());
                if self.trunc.is_none() {
                    out = lead_inv;
                }
                return Ok(out);
            }
        };
        debug_assert!(u_ord > rint(0), "unit part must have positive order");
        let mut acc = Self::one().with_trunc(rel.clone());
        let mut pow = Self::one().with_trunc(rel.clone());
        let minus_u = u.neg_impl();
        let mut k = rint(0);
        while k < rel {
            pow = pow.mul_impl(&minus_u);
            if pow.terms.is_empty() {
                break;
            }
            acc = acc.add_impl(&pow);
            k += u_ord.clone();
        }
        Ok(acc.mul_impl(&lead_inv))
    }

    /// Division carried to the given relative order when a series expansion
    /// is required; see [`LCNum::inv`].
    pub fn div_order(&self, other: &Self, rel_order: Option<Rational>) -> Result<Self, HyperError> {
        Ok(self.mul_impl(&other.inv(rel_order)?))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, HyperError> {
        self.div_order(other, None)
    }

    /// Exact integer power; negative exponents go through [`LCNum::inv`].
    pub fn int_pow(&self, e: i64) -> Result<Self, HyperError> {
        if e < 0 {
            return self.inv(None)?.int_pow(-e);
        }
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut k = e as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_impl(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul_impl(&base);
            }
        }
        Ok(acc)
    }

    /// Lexicographic comparison by the leading term of the difference.
    /// Errors when the difference has no terms but carries a truncation tail:
    /// the sign is then not determined at the available order.
    pub fn compare(&self, other: &Self) -> Result<Ordering, HyperError> {
        let d = self.add_impl(&other.neg_impl());
        match d.lead() {
            Some((_, c)) => Ok(if c.is_positive() { Ordering::Greater } else { Ordering::Less }),
            None => match d.trunc {
                None => Ok(Ordering::Equal),
                Some(t) => Err(HyperError::Indeterminate(t)),
            },
        }
    }

    /// Order-of-magnitude class. Zero is not infinitesimal. A termless value
    /// with a truncation tail cannot be placed (it is zero or infinitesimal,
    /// and which one is not determined), so it errors.
    pub fn classify(&self) -> Result<Class, HyperError> {
        match self.lead() {
            Some((q, _)) => Ok(if q.is_negative() {
                Class::Unlimited
            } else if q.is_zero() {
                Class::LimitedAppreciable
            } else {
                Class::Infinitesimal
            }),
            None => match &self.trunc {
                None => Ok(Class::Zero),
                Some(t) => Err(HyperError::Indeterminate(t.clone())),
            },
        }
    }

    pub fn is_limited(&self) -> bool {
        match self.lead() {
            Some((q, _)) => !q.is_negative(),
            None => true,
        }
    }

    /// Standard part of a limited number: the coefficient at exponent 0.
    /// A truncation tail at order `<= 0` hides the answer and errors;
    /// unlimited numbers have no shadow.
    pub fn shadow(&self) -> Result<Rational, HyperError> {
        if let Some(t) = &self.trunc {
            if !t.is_positive() {
                return Err(HyperError::Indeterminate(t.clone()));
            }
        }
        if let Some((q, _)) = self.lead() {
            if q.is_negative() {
                return Err(HyperError::UnlimitedShadow);
            }
        }
        Ok(self.coeff(&rint(0)))
    }

    /// True when the difference is zero or infinitesimal. A truncation tail
    /// of positive order keeps the answer determinate (the tail is itself
    /// zero or infinitesimal); a tail at order `<= 0` errors.
    pub fn approx(&self, other: &Self) -> Result<bool, HyperError> {
        let d = self.add_impl(&other.neg_impl());
        match d.lead() {
            Some((q, _)) => Ok(q.is_positive()),
            None => match d.trunc {
                None => Ok(true),
                Some(t) if t.is_positive() => Ok(true),
                Some(t) => Err(HyperError::Indeterminate(t)),
            },
        }
    }

    pub fn abs(&self) -> Self {
        match self.lead() {
            Some((_, c)) if c.is_negative() => self.neg_impl(),
            _ => self.clone(),
        }
    }
}

impl Add for LCNum {
    type Output = LCNum;
    fn add(self, rhs: LCNum) -> LCNum {
        self.add_impl(&rhs)
    }
}

impl<'a> Add<&'a LCNum> for &'a LCNum {
    type Output = LCNum;
    fn add(self, rhs: &LCNum) -> LCNum {
        self.add_impl(rhs)
    }
}

impl Sub for LCNum {
    type Output = LCNum;
    fn sub(self, rhs: LCNum) -> LCNum {
        self.add_impl(&rhs.neg_impl())
    }
}

impl<'a> Sub<&'a LCNum> for &'a LCNum {
    type Output = LCNum;
    fn sub(self, rhs: &LCNum) -> LCNum {
        self.add_impl(&rhs.neg_impl())
    }
}

impl Mul for LCNum {
    type Output = LCNum;
    fn mul(self, rhs: LCNum) -> LCNum {
        self.mul_impl(&rhs)
    }
}

impl<'a> Mul<&'a LCNum> for &'a LCNum {
    type Output = LCNum;
    fn mul(self, rhs: &LCNum) -> LCNum {
        self.mul_impl(rhs)
    }
}

/// Panics on division errors; use [`LCNum::try_div`] to handle them.
impl Div for LCNum {
    type Output = LCNum;
    fn div(self, rhs: LCNum) -> LCNum {
        self.try_div(&rhs).expect("division error")
    }
}

impl Neg for LCNum {
    type Output = LCNum;
    fn neg(self) -> LCNum {
        self.neg_impl()
    }
}

/// Partial order: `None` exactly when the comparison is indeterminate under
/// truncation.
impl PartialOrd for LCNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.compare(other).ok()
    }
}

fn fmt_exponent(q: &Rational) -> String {
    if rational::is_integer(q) && !q.is_negative() {
        q.to_string()
    } else {
        format!("({q})")
    }
}

impl serde::Serialize for LCNum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for LCNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() && self.trunc.is_none() {
            return f.write_str("0");
        }
        let mut first = true;
        for (q, c) in &self.terms {
            let mag = rational::abs(c);
            let body = if q.is_zero() {
                mag.to_string()
            } else {
                format!("{}*eps^{}", mag, fmt_exponent(q))
            };
            if first {
                if c.is_negative() {
                    write!(f, "-{body}")?;
                } else {
                    write!(f, "{body}")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - {body}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        if let Some(t) = &self.trunc {
            if first {
                write!(f, "O(eps^{})", fmt_exponent(t))?;
            } else {
                write!(f, " + O(eps^{})", fmt_exponent(t))?;
            }
        }
        Ok(())
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(s: &'a str) -> Self {
        Lexer { src: s.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), HyperError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(HyperError::Parse { at: self.pos, msg: format!("expected `{}`", c as char) })
        }
    }

    fn err(&self, msg: &str) -> HyperError {
        HyperError::Parse { at: self.pos, msg: msg.to_string() }
    }

    fn number(&mut self) -> Result<Rational, HyperError> {
        self.skip_ws();
        let start = self.pos;
        if self.eat(b'-') {}
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'/') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<Rational>()
            .map_err(|_| HyperError::Parse { at: start, msg: format!("malformed rational `{text}`") })
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string()
    }
}

/// Parses the canonical textual form: a signed sum of `c`, `c*eps^q`, `eps^q`
/// or `eps` terms with an optional trailing `+ O(eps^q)`. Exponents are
/// integers or parenthesized rationals.
impl FromStr for LCNum {
    type Err = HyperError;

    fn from_str(s: &str) -> Result<Self, HyperError> {
        let mut lx = Lexer::new(s);
        let mut terms: Vec<(Rational, Rational)> = Vec::new();
        let mut trunc: Option<Rational> = None;
        let mut sign = rint(1);
        let mut first = true;
        loop {
            match lx.peek() {
                None => break,
                Some(b'+') if !first => {
                    lx.bump();
                }
                Some(b'-') if !first => {
                    lx.bump();
                    sign = rint(-1);
                }
                Some(_) if first => {}
                Some(_) => return Err(lx.err("expected `+` or `-`")),
            }
            if lx.peek().is_none() {
                return Err(lx.err("dangling sign"));
            }
            first = false;
            // O(eps^q) tail
            if lx.peek() == Some(b'O') {
                lx.bump();
                lx.expect(b'(')?;
                let id = lx.ident();
                if id != "eps" {
                    return Err(lx.err("expected `eps` inside O(...)"));
                }
                lx.expect(b'^')?;
                let q = parse_exponent(&mut lx)?;
                lx.expect(b')')?;
                if trunc.is_some() {
                    return Err(lx.err("duplicate O(...) tail"));
                }
                trunc = Some(q);
                continue;
            }
            let (coef, has_coef) = match lx.peek() {
                Some(c) if c.is_ascii_digit() || c == b'-' => (lx.number()?, true),
                _ => (rint(1), false),
            };
            let coef = coef * sign.clone();
            sign = rint(1);
            let star = lx.eat(b'*');
            if star || !has_coef {
                let id = lx.ident();
                if id != "eps" {
                    return Err(lx.err("expected `eps`"));
                }
                let q = if lx.eat(b'^') { parse_exponent(&mut lx)? } else { rint(1) };
                terms.push((q, coef));
            } else {
                terms.push((rint(0), coef));
            }
        }
        if terms.is_empty() && trunc.is_none() {
            return Err(HyperError::Parse { at: 0, msg: "empty literal".to_string() });
        }
        // "0" parses via the single-term path and cancels here.
        Ok(LCNum::new(terms, trunc))
    }
}

fn parse_exponent(lx: &mut Lexer<'_>) -> Result<Rational, HyperError> {
    if lx.eat(b'(') {
        let q = lx.number()?;
        lx.expect(b')')?;
        Ok(q)
    } else {
        lx.number()
    }
}

/// `bits[n]` contributes `1/10^(n+1)`: the value `0.b0 b1 b2 ...` in decimal.
pub fn decimal_encode(bits: &[bool]) -> Rational {
    let mut acc = rint(0);
    let mut place = rat(1, 10);
    for &b in bits {
        if b {
            acc += place.clone();
        }
        place /= rint(10);
    }
    acc
}

/// Reads the first `n_places` decimal digits of `r` in `[0,1)`, requiring
/// each to be 0 or 1.
pub fn decimal_decode(r: &Rational, n_places: usize) -> Result<Vec<bool>, HyperError> {
    if r.is_negative() || *r >= rint(1) {
        return Err(HyperError::DecodeRange(r.clone()));
    }
    let mut bits = Vec::with_capacity(n_places);
    let mut rest = r.clone();
    for place in 0..n_places {
        rest *= rint(10);
        let d = rational::floor_int(&rest);
        rest -= Rational::from_integer(d.clone());
        let d_u32 = u32::try_from(&d % BigInt::from(10)).unwrap();
        match d_u32 {
            0 => bits.push(false),
            1 => bits.push(true),
            digit => return Err(HyperError::DecodeDigit { digit, place }),
        }
    }
    Ok(bits)
}
