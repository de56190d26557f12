//! Exact rational scalars.
//!
//! `Rational` is an arbitrary-precision fraction kept in canonical reduced
//! form with a positive denominator. Everything in this crate that calls
//! itself "exact" bottoms out here; no floating point is involved anywhere.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

/// `n/d` as a canonical rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer `n` as a rational.
pub fn rint(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Exact integer power with negative exponents allowed. Panics on `0^-k`.
pub fn pow_i(r: &Rational, e: i64) -> Rational {
    if e >= 0 {
        num_traits::pow::Pow::pow(r.clone(), e as u64)
    } else {
        assert!(!r.is_zero(), "0 has no negative powers");
        num_traits::pow::Pow::pow(r.clone(), (-e) as u64).recip()
    }
}

/// Largest integer `<= r`.
pub fn floor_int(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

/// Serde serializers that render exact rationals as `p/q` strings.
pub mod ser {
    use super::Rational;
    use serde::Serializer;

    pub fn rat<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn rat_vec<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn rat_opt<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_some(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn rat_opt_vec<S: Serializer>(
        v: &[Option<Rational>],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|o| o.as_ref().map(|r| r.to_string())))
    }

    pub fn rat_pairs<S: Serializer>(
        v: &[(Rational, Rational)],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(a, b)| [a.to_string(), b.to_string()]))
    }
}

/// Smallest integer `>= r`.
pub fn ceil_int(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

pub fn abs(r: &Rational) -> Rational {
    if r.is_negative() {
        -r.clone()
    } else {
        r.clone()
    }
}

/// Parses `p`, `-p`, or `p/q` (exact decimal notation such as `1e-9` or
/// `0.25` is also accepted and converted exactly).
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let t = s.trim();
    if let Ok(r) = t.parse::<Rational>() {
        return Ok(r);
    }
    parse_decimal(t).ok_or_else(|| format!("malformed rational `{s}`"))
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (mant, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (t, 0),
    };
    let (sign, digits) = match mant.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let numer: BigInt = joined.parse().ok()?;
    let shift = exp - frac_part.len() as i64;
    let base = Rational::from_integer(numer) * rint(sign);
    Some(base * pow_i(&rint(10), shift))
}
