//! Exact polynomial helpers for the closed-form summation machinery.
//!
//! `UniPoly` is a dense univariate polynomial over the rationals. `power_sum`
//! produces the classical closed form of `S_d(n) = sum_{i=0}^{n} i^d` as a
//! polynomial in `n` of degree `d+1`. `MultiPoly` is a small Laurent
//! polynomial in finitely many variables; the summation code uses it with
//! variables `(h, sa, sb)` where the grid offsets `sa`, `sb` stand for the
//! bounded endpoint remainders divided by `h`.

use crate::hyper::{HyperError, LCNum};
use crate::rational::{rint, Rational};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Dense univariate polynomial; `coeffs[k]` multiplies `n^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly(pub Vec<Rational>);

impl UniPoly {
    pub fn zero() -> Self {
        UniPoly(vec![])
    }

    pub fn constant(c: Rational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            UniPoly(vec![c])
        }
    }

    pub fn x() -> Self {
        UniPoly(vec![rint(0), rint(1)])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn normalize(mut self) -> Self {
        while self.0.last().map(|c| c.is_zero()).unwrap_or(false) {
            self.0.pop();
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![rint(0); n];
        for (k, c) in self.0.iter().enumerate() {
            out[k] += c.clone();
        }
        for (k, c) in other.0.iter().enumerate() {
            out[k] += c.clone();
        }
        UniPoly(out).normalize()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        UniPoly(self.0.iter().map(|k| k * c).collect()).normalize()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self::zero();
        }
        let mut out = vec![rint(0); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly(out).normalize()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = rint(0);
        for c in self.0.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    /// Horner evaluation at a multivariate argument.
    pub fn eval_multi(&self, x: &MultiPoly) -> MultiPoly {
        let mut acc = MultiPoly::zero(x.nvars);
        for c in self.0.iter().rev() {
            acc = acc.mul(x).add(&MultiPoly::constant(x.nvars, c.clone()));
        }
        acc
    }
}

/// `S_d(n) = sum_{i=0}^{n} i^d` as a polynomial in `n`, via the telescoping
/// recurrence on `(n+1)^{d+1}`.
pub fn power_sum(d: usize) -> UniPoly {
    let mut sums: Vec<UniPoly> = Vec::with_capacity(d + 1);
    let n_plus_1 = UniPoly(vec![rint(1), rint(1)]);
    for k in 0..=d {
        // (n+1)^{k+1} = sum_{j<=k} C(k+1, j) S_j(n)
        let mut lead = UniPoly::constant(rint(1));
        for _ in 0..=k {
            lead = lead.mul(&n_plus_1);
        }
        let mut acc = lead;
        for (j, s) in sums.iter().enumerate() {
            let c = -binomial(k as u64 + 1, j as u64);
            acc = acc.add(&s.scale(&c));
        }
        let s_k = acc.scale(&binomial(k as u64 + 1, k as u64).recip());
        sums.push(s_k);
    }
    sums.pop().unwrap()
}

pub fn binomial(n: u64, k: u64) -> Rational {
    if k > n {
        return rint(0);
    }
    let mut acc = rint(1);
    for i in 0..k {
        acc = acc * rint((n - i) as i64) / rint((i + 1) as i64);
    }
    acc
}

/// Laurent polynomial in `nvars` variables with rational coefficients;
/// exponents may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<i32>, Rational>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, idx: usize) -> Self {
        Self::monomial(nvars, idx, 1, rint(1))
    }

    pub fn monomial(nvars: usize, idx: usize, exp: i32, c: Rational) -> Self {
        let mut key = vec![0; nvars];
        key[idx] = exp;
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(key, c);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (k, c) in &other.terms {
            let slot = out.terms.entry(k.clone()).or_insert_with(|| rint(0));
            *slot += c.clone();
            if slot.is_zero() {
                out.terms.remove(k);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&rint(-1))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let key: Vec<i32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                let slot = out.terms.entry(key.clone()).or_insert_with(|| rint(0));
                *slot += ca * cb;
                if slot.is_zero() {
                    out.terms.remove(&key);
                }
            }
        }
        out
    }

    pub fn constant_term(&self) -> Rational {
        self.terms.get(&vec![0; self.nvars]).cloned().unwrap_or_else(|| rint(0))
    }

    /// Substitutes concrete values for every variable.
    pub fn eval_lcnum(&self, vals: &[LCNum]) -> Result<LCNum, HyperError> {
        assert_eq!(vals.len(), self.nvars);
        let mut acc = LCNum::zero();
        for (key, c) in &self.terms {
            let mut term = LCNum::from_rational(c.clone());
            for (idx, e) in key.iter().enumerate() {
                if *e != 0 {
                    term = term * vals[idx].int_pow(*e as i64)?;
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }
}
