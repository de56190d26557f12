//! Arithmetic expression trees evaluated over the truncated field.
//!
//! The grammar is ordinary infix arithmetic with `^` for integer powers,
//! rational literals `p/q`, identifiers for variables, the reserved
//! identifier `eps` for the designated infinitesimal, and the optional
//! function nodes `exp`, `sin`, `cos` evaluated as truncated Maclaurin
//! series to a configured order (their values are formal Taylor polynomials;
//! at an infinitesimal argument the omitted tail is itself infinitesimal and
//! is recorded in the truncation order of the result).

use crate::hyper::{HyperError, LCNum};
use crate::rational::{rint, Rational};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum ExprError {
    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error(transparent)]
    Hyper(#[from] HyperError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Relative order for divisions that need a series expansion.
    pub div_order: i64,
    /// Maclaurin truncation degree for `exp`/`sin`/`cos`.
    pub series_order: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { div_order: crate::hyper::DEFAULT_ORDER, series_order: 8 }
    }
}

pub type Env = BTreeMap<String, LCNum>;

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn num(r: Rational) -> Expr {
        Expr::Num(r)
    }

    pub fn eval(&self, env: &Env, cfg: &EvalConfig) -> Result<LCNum, ExprError> {
        Ok(match self {
            Expr::Num(r) => LCNum::from_rational(r.clone()),
            Expr::Var(v) if v == "eps" => LCNum::epsilon(),
            Expr::Var(v) => env.get(v).cloned().ok_or_else(|| ExprError::UnboundVar(v.clone()))?,
            Expr::Neg(a) => -a.eval(env, cfg)?,
            Expr::Add(a, b) => a.eval(env, cfg)? + b.eval(env, cfg)?,
            Expr::Sub(a, b) => a.eval(env, cfg)? - b.eval(env, cfg)?,
            Expr::Mul(a, b) => a.eval(env, cfg)? * b.eval(env, cfg)?,
            Expr::Div(a, b) => {
                a.eval(env, cfg)?.div_order(&b.eval(env, cfg)?, Some(rint(cfg.div_order)))?
            }
            Expr::Pow(a, e) => a.eval(env, cfg)?.int_pow(*e)?,
            Expr::Exp(a) => maclaurin(&a.eval(env, cfg)?, cfg.series_order, SeriesKind::Exp),
            Expr::Sin(a) => maclaurin(&a.eval(env, cfg)?, cfg.series_order, SeriesKind::Sin),
            Expr::Cos(a) => maclaurin(&a.eval(env, cfg)?, cfg.series_order, SeriesKind::Cos),
        })
    }

    /// Fast exact path for all-rational environments; errors on division by
    /// zero and leaves series nodes to the general evaluator's semantics.
    pub fn eval_rational(
        &self,
        env: &BTreeMap<String, Rational>,
        cfg: &EvalConfig,
    ) -> Result<Rational, ExprError> {
        Ok(match self {
            Expr::Num(r) => r.clone(),
            Expr::Var(v) if v == "eps" => {
                return Err(ExprError::UnboundVar("eps (not rational)".to_string()))
            }
            Expr::Var(v) => env.get(v).cloned().ok_or_else(|| ExprError::UnboundVar(v.clone()))?,
            Expr::Neg(a) => -a.eval_rational(env, cfg)?,
            Expr::Add(a, b) => a.eval_rational(env, cfg)? + b.eval_rational(env, cfg)?,
            Expr::Sub(a, b) => a.eval_rational(env, cfg)? - b.eval_rational(env, cfg)?,
            Expr::Mul(a, b) => a.eval_rational(env, cfg)? * b.eval_rational(env, cfg)?,
            Expr::Div(a, b) => {
                let d = b.eval_rational(env, cfg)?;
                if d == rint(0) {
                    return Err(ExprError::Hyper(HyperError::DivisionByZero));
                }
                a.eval_rational(env, cfg)? / d
            }
            Expr::Pow(a, e) => {
                let base = a.eval_rational(env, cfg)?;
                if base == rint(0) && *e < 0 {
                    return Err(ExprError::Hyper(HyperError::DivisionByZero));
                }
                crate::rational::pow_i(&base, *e)
            }
            Expr::Exp(_) | Expr::Sin(_) | Expr::Cos(_) => {
                let mut lenv = Env::new();
                for (k, v) in env {
                    lenv.insert(k.clone(), LCNum::from_rational(v.clone()));
                }
                let v = self.eval(&lenv, cfg)?;
                v.shadow().map_err(ExprError::Hyper)?
            }
        })
    }

    /// Free variables, sorted.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if v != "eps" {
                    out.push(v.clone());
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => {
                a.collect_vars(out)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

enum SeriesKind {
    Exp,
    Sin,
    Cos,
}

fn maclaurin(x: &LCNum, order: u32, kind: SeriesKind) -> LCNum {
    let mut acc = LCNum::zero();
    let mut pow = LCNum::one();
    let mut fact = rint(1);
    for j in 0..=order {
        if j > 0 {
            pow = pow * x.clone();
            fact *= rint(j as i64);
        }
        let coef: Rational = match kind {
            SeriesKind::Exp => fact.clone().recip(),
            SeriesKind::Sin => {
                if j % 2 == 1 {
                    let s = if j % 4 == 1 { 1 } else { -1 };
                    fact.clone().recip() * rint(s)
                } else {
                    continue;
                }
            }
            SeriesKind::Cos => {
                if j % 2 == 0 {
                    let s = if j % 4 == 0 { 1 } else { -1 };
                    fact.clone().recip() * rint(s)
                } else {
                    continue;
                }
            }
        };
        acc = acc + pow.clone() * LCNum::from_rational(coef);
    }
    // At an infinitesimal argument the first omitted term bounds the error.
    if let Some((q, _)) = x.lead() {
        if q > &rint(0) {
            return acc.with_trunc(q.clone() * rint(order as i64 + 1));
        }
    }
    acc
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: &str) -> Result<T, ExprError> {
        Err(ExprError::Parse { at: self.pos, msg: msg.to_string() })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
            } else if self.eat(b'-') {
                acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = Expr::Mul(Box::new(acc), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                acc = Expr::Div(Box::new(acc), Box::new(self.unary()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.integer()?;
            Ok(Expr::Pow(Box::new(base), e))
        } else {
            Ok(base)
        }
    }

    fn integer(&mut self) -> Result<i64, ExprError> {
        self.skip_ws();
        let neg = if self.eat(b'(') {
            let v = self.integer()?;
            if !self.eat(b')') {
                return self.err("expected `)`");
            }
            return Ok(v);
        } else {
            self.eat(b'-')
        };
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer exponent");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: i64 = text.parse().map_err(|_| ExprError::Parse {
            at: start,
            msg: format!("exponent `{text}` out of range"),
        })?;
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                // a slash joins the literal only when a denominator digit
                // follows; otherwise it is the division operator
                if self.pos + 1 < self.src.len()
                    && self.src[self.pos] == b'/'
                    && self.src[self.pos + 1].is_ascii_digit()
                {
                    self.pos += 1;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let r: Rational = text.parse().map_err(|_| ExprError::Parse {
                    at: start,
                    msg: format!("malformed rational `{text}`"),
                })?;
                Ok(Expr::Num(r))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                match name.as_str() {
                    "exp" | "sin" | "cos" => {
                        if !self.eat(b'(') {
                            return self.err("expected `(` after function name");
                        }
                        let arg = Box::new(self.expr()?);
                        if !self.eat(b')') {
                            return self.err("expected `)`");
                        }
                        Ok(match name.as_str() {
                            "exp" => Expr::Exp(arg),
                            "sin" => Expr::Sin(arg),
                            _ => Expr::Cos(arg),
                        })
                    }
                    _ => Ok(Expr::Var(name)),
                }
            }
            _ => self.err("expected expression"),
        }
    }
}

/// Convenience wrapper around the `FromStr` parser.
pub fn parse_expr(s: &str) -> Result<Expr, ExprError> {
    s.parse()
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, ExprError> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(ExprError::Parse { at: p.pos, msg: "trailing input".to_string() });
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Expr {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let my = match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        };
        let paren = my < prec;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(r) => write!(f, "{r}")?,
            Expr::Var(v) => f.write_str(v)?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_prec(f, 4)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" + ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" - ")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str("/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Pow(a, e) => {
                a.fmt_prec(f, 5)?;
                if *e < 0 {
                    write!(f, "^({e})")?;
                } else {
                    write!(f, "^{e}")?;
                }
            }
            Expr::Exp(a) => write!(f, "exp({a})")?,
            Expr::Sin(a) => write!(f, "sin({a})")?,
            Expr::Cos(a) => write!(f, "cos({a})")?,
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn ev(src: &str, var: &str, val: LCNum) -> LCNum {
        let e: Expr = src.parse().unwrap();
        let mut env = Env::new();
        env.insert(var.to_string(), val);
        e.eval(&env, &EvalConfig::default()).unwrap()
    }

    #[test]
    fn precedence_and_eval() {
        let x = LCNum::from_int(2);
        assert_eq!(ev("1 + 2*x^3", "x", x.clone()), LCNum::from_int(17));
        assert_eq!(ev("(1 + 2*x)^2", "x", x.clone()), LCNum::from_int(25));
        assert_eq!(ev("-x^2", "x", x.clone()), LCNum::from_int(-4));
        assert_eq!(ev("x/4 - 1/2", "x", x), LCNum::zero());
    }

    #[test]
    fn eps_is_reserved() {
        let e: Expr = "(3 + eps)*(3 - eps)".parse().unwrap();
        let v = e.eval(&Env::new(), &EvalConfig::default()).unwrap();
        assert_eq!(v, "9 - 1*eps^2".parse().unwrap());
    }

    #[test]
    fn unbound_variable_errors() {
        let e: Expr = "x + y".parse().unwrap();
        let mut env = Env::new();
        env.insert("x".to_string(), LCNum::one());
        assert_eq!(e.eval(&env, &EvalConfig::default()), Err(ExprError::UnboundVar("y".to_string())));
    }

    #[test]
    fn series_nodes_at_infinitesimal_argument() {
        let v = ev("exp(x)", "x", LCNum::epsilon());
        assert_eq!(v.coeff(&rint(0)), rint(1));
        assert_eq!(v.coeff(&rint(1)), rint(1));
        assert_eq!(v.coeff(&rint(2)), rat(1, 2));
        assert_eq!(v.trunc(), Some(&rint(9)));
        let s = ev("sin(x)", "x", LCNum::epsilon());
        assert_eq!(s.coeff(&rint(1)), rint(1));
        assert_eq!(s.coeff(&rint(3)), rat(-1, 6));
        let c = ev("cos(x)", "x", LCNum::epsilon());
        assert_eq!(c.coeff(&rint(0)), rint(1));
        assert_eq!(c.coeff(&rint(2)), rat(-1, 2));
    }

    #[test]
    fn rational_fast_path_matches() {
        let e: Expr = "x^3/3 - 2*x + 5/7".parse().unwrap();
        let mut renv = BTreeMap::new();
        renv.insert("x".to_string(), rat(5, 2));
        let r = e.eval_rational(&renv, &EvalConfig::default()).unwrap();
        let mut env = Env::new();
        env.insert("x".to_string(), LCNum::from_rat(5, 2));
        let v = e.eval(&env, &EvalConfig::default()).unwrap();
        assert_eq!(LCNum::from_rational(r), v);
    }

    #[test]
    fn display_round_trip() {
        for src in ["1 + 2*x^3", "(x + 1)*(x - 1)", "x/4 - 1/2", "exp(x^2) - sin(x)*cos(x)", "-x^(-2)"] {
            let e: Expr = src.parse().unwrap();
            let printed = e.to_string();
            let back: Expr = printed.parse().unwrap();
            assert_eq!(e, back, "round trip failed for {src} -> {printed}");
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("1 +".parse::<Expr>(), Err(ExprError::Parse { .. })));
        assert!(matches!("x^y".parse::<Expr>(), Err(ExprError::Parse { .. })));
        assert!(matches!("(1".parse::<Expr>(), Err(ExprError::Parse { .. })));
        assert!(matches!("1 2".parse::<Expr>(), Err(ExprError::Parse { .. })));
    }
}
