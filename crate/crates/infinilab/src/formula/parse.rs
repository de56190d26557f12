//! Concrete syntax for formulas.
//!
//! Quantifiers: `A x.` `E x.` `Ast m.` `Est n.` `Ain h.` `Ein k.`, optionally
//! sorted (`Ast m:posint.`, `A s:set.`) and, for plain kinds, bounded
//! (`A l <= m.`). Connectives `!`, `&`, `|`, `->` in decreasing binding
//! order; a quantifier's scope extends as far right as possible. Atoms:
//! `t1 = t2`, `t1 != t2` (sugar for a negated equation), `t1 in t2`,
//! `mag(t) < 1/v`, `R(t1,...,tk)`.
//!
//! Printing is canonical: `parse(print(f)) == f` for any parsed `f`.

use super::{Formula, FormulaError, QuantKind, Sort, Term};
use crate::rational::Rational;
use num_bigint::BigInt;
use std::collections::BTreeSet;
use std::fmt;

pub fn parse_formula(input: &str) -> Result<Formula, FormulaError> {
    let tokens = lex(input)?;
    let mut p = Parser { tokens, pos: 0, input_len: input.len() };
    let f = p.formula()?;
    p.expect_end()?;
    check_binders(&f)?;
    Ok(f)
}

/// Binder names must be pairwise distinct and distinct from every free
/// variable, so later substitutions are capture-free by construction.
fn check_binders(f: &Formula) -> Result<(), FormulaError> {
    fn binders(f: &Formula, out: &mut Vec<String>) {
        match f {
            Formula::Quant(_, v, _, body) => {
                out.push(v.clone());
                binders(body, out);
            }
            Formula::BoundedAll(v, _, body) | Formula::BoundedEx(v, _, body) => {
                out.push(v.clone());
                binders(body, out);
            }
            _ => {
                for c in f.children() {
                    binders(c, out);
                }
            }
        }
    }
    let mut bs = Vec::new();
    binders(f, &mut bs);
    let mut seen = BTreeSet::new();
    for b in &bs {
        if !seen.insert(b.clone()) {
            return Err(FormulaError::Parse {
                at: 0,
                msg: format!("variable {b} is bound more than once"),
            });
        }
    }
    let free = f.free_vars();
    for b in &bs {
        if free.contains(b) {
            return Err(FormulaError::Parse {
                at: 0,
                msg: format!("variable {b} occurs both bound and free"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Eq,
    Neq,
    Arrow,
    Amp,
    Pipe,
    Bang,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(s[start..i].to_string())));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = s[start..i].parse().map_err(|_| FormulaError::Parse {
                at: start,
                msg: "bad integer literal".to_string(),
            })?;
            out.push((start, Tok::Int(n)));
            continue;
        }
        let two = if i + 1 < b.len() { &s[i..i + 2] } else { "" };
        let tok = match two {
            "->" => Some(Tok::Arrow),
            "!=" => Some(Tok::Neq),
            "<=" => Some(Tok::Le),
            _ => None,
        };
        if let Some(t) = tok {
            out.push((i, t));
            i += 2;
            continue;
        }
        let t = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b':' => Tok::Colon,
            b'=' => Tok::Eq,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'!' => Tok::Bang,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'<' => Tok::Lt,
            _ => {
                return Err(FormulaError::Parse {
                    at: i,
                    msg: format!("unexpected character {:?}", c as char),
                })
            }
        };
        out.push((i, t));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    input_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|(_, t)| t)
    }

    fn at(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.input_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> FormulaError {
        FormulaError::Parse { at: self.at(), msg: msg.into() }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn expect_end(&self) -> Result<(), FormulaError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.or_level()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.formula()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or_level(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.and_level()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            let g = self.and_level()?;
            f = Formula::or(f, g);
        }
        Ok(f)
    }

    fn and_level(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let g = self.unary()?;
            f = Formula::and(f, g);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                let f = self.unary()?;
                Ok(Formula::not(f))
            }
            Some(Tok::Ident(name)) if quant_kind(name).is_some() => {
                if matches!(self.peek2(), Some(Tok::Ident(_))) {
                    self.quantifier()
                } else {
                    self.atom()
                }
            }
            _ => self.atom(),
        }
    }

    fn quantifier(&mut self) -> Result<Formula, FormulaError> {
        let kind = match self.bump() {
            Some(Tok::Ident(name)) => quant_kind(&name).unwrap(),
            _ => unreachable!("caller checked"),
        };
        let var = match self.bump() {
            Some(Tok::Ident(v)) => v,
            _ => return Err(self.err("expected bound variable")),
        };
        let mut sort = kind.default_sort();
        let mut explicit_sort = false;
        if self.peek() == Some(&Tok::Colon) {
            self.bump();
            sort = match self.bump() {
                Some(Tok::Ident(s)) => match s.as_str() {
                    "real" => Sort::Real,
                    "posint" => Sort::PosInt,
                    "set" => Sort::Set,
                    _ => return Err(self.err(format!("unknown sort {s}"))),
                },
                _ => return Err(self.err("expected sort name")),
            };
            explicit_sort = true;
        }
        if kind.is_in() && sort != Sort::Real {
            return Err(self.err("infinitesimal quantifiers bind real variables"));
        }
        if self.peek() == Some(&Tok::Le) {
            if !kind.is_plain() || explicit_sort {
                return Err(self.err("bounds are only allowed on plain unsorted quantifiers"));
            }
            self.bump();
            let bound = match self.bump() {
                Some(Tok::Ident(m)) => m,
                _ => return Err(self.err("expected bound variable name")),
            };
            self.expect(Tok::Dot, "'.'")?;
            let body = self.formula()?;
            return Ok(match kind {
                QuantKind::All => Formula::BoundedAll(var, bound, Box::new(body)),
                QuantKind::Ex => Formula::BoundedEx(var, bound, Box::new(body)),
                _ => unreachable!(),
            });
        }
        self.expect(Tok::Dot, "'.'")?;
        let body = self.formula()?;
        Ok(Formula::Quant(kind, var, sort, Box::new(body)))
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        if let Some(Tok::Ident(name)) = self.peek() {
            if name == "mag" && self.peek2() == Some(&Tok::LParen) {
                self.bump();
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                self.expect(Tok::Lt, "'<'")?;
                match self.bump() {
                    Some(Tok::Int(n)) if n == BigInt::from(1) => {}
                    _ => return Err(self.err("expected '1' in magnitude bound")),
                }
                self.expect(Tok::Slash, "'/'")?;
                let v = match self.bump() {
                    Some(Tok::Ident(v)) => v,
                    _ => return Err(self.err("expected variable in magnitude bound")),
                };
                return Ok(Formula::Mag(t, v));
            }
        }
        // a leading '(' may open either a parenthesized term or a
        // parenthesized formula, so try the term reading first and back off
        let save = self.pos;
        if let Ok(t1) = self.term() {
            match self.peek() {
                Some(Tok::Eq) => {
                    self.bump();
                    let t2 = self.term()?;
                    return Ok(Formula::Eq(t1, t2));
                }
                Some(Tok::Neq) => {
                    self.bump();
                    let t2 = self.term()?;
                    return Ok(Formula::not(Formula::Eq(t1, t2)));
                }
                Some(Tok::Ident(k)) if k == "in" => {
                    self.bump();
                    let t2 = self.term()?;
                    return Ok(Formula::Mem(t1, t2));
                }
                _ => {
                    if let Term::App(name, args) = t1 {
                        return Ok(Formula::Rel(name, args));
                    }
                }
            }
        }
        self.pos = save;
        if self.peek() == Some(&Tok::LParen) {
            self.bump();
            let f = self.formula()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(f);
        }
        Err(self.err("expected a relation, '=', '!=' or 'in'"))
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        let mut t = self.term_factor()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let u = self.term_factor()?;
                    t = Term::Add(Box::new(t), Box::new(u));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let u = self.term_factor()?;
                    t = Term::Sub(Box::new(t), Box::new(u));
                }
                _ => break,
            }
        }
        Ok(t)
    }

    fn term_factor(&mut self) -> Result<Term, FormulaError> {
        let mut t = self.term_primary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let u = self.term_primary()?;
                    t = Term::Mul(Box::new(t), Box::new(u));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let u = self.term_primary()?;
                    // fold literal fractions into rational constants
                    t = match (&t, &u) {
                        (Term::Num(a), Term::Num(b)) => {
                            if b.numer().sign() == num_bigint::Sign::NoSign {
                                return Err(self.err("division by zero literal"));
                            }
                            Term::Num(a / b)
                        }
                        _ => Term::Div(Box::new(t), Box::new(u)),
                    };
                }
                _ => break,
            }
        }
        Ok(t)
    }

    fn term_primary(&mut self) -> Result<Term, FormulaError> {
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Term::Num(Rational::from_integer(n))),
            Some(Tok::Minus) => {
                let t = self.term_primary()?;
                Ok(match t {
                    Term::Num(r) => Term::Num(-r),
                    other => Term::Sub(Box::new(Term::Num(Rational::from_integer(0.into()))), Box::new(other)),
                })
            }
            Some(Tok::LParen) => {
                let t = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(self.term()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Term::App(name, args))
                } else {
                    Ok(Term::Var(name))
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

fn quant_kind(name: &str) -> Option<QuantKind> {
    match name {
        "A" => Some(QuantKind::All),
        "E" => Some(QuantKind::Ex),
        "Ast" => Some(QuantKind::AllSt),
        "Est" => Some(QuantKind::ExSt),
        "Ain" => Some(QuantKind::AllIn),
        "Ein" => Some(QuantKind::ExIn),
        _ => None,
    }
}

impl fmt::Display for QuantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QuantKind::All => "A",
            QuantKind::Ex => "E",
            QuantKind::AllSt => "Ast",
            QuantKind::ExSt => "Est",
            QuantKind::AllIn => "Ain",
            QuantKind::ExIn => "Ein",
        };
        f.write_str(s)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sort::Real => "real",
            Sort::PosInt => "posint",
            Sort::Set => "set",
        };
        f.write_str(s)
    }
}

// term precedence: 1 = additive, 2 = multiplicative, 3 = primary
fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Add(..) | Term::Sub(..) => 1,
        Term::Mul(..) | Term::Div(..) => 2,
        Term::Num(r) if r.numer().sign() == num_bigint::Sign::Minus => 0,
        _ => 3,
    }
}

fn fmt_term(t: &Term, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = term_prec(t);
    if p < min {
        write!(f, "(")?;
    }
    match t {
        Term::Var(v) => write!(f, "{v}")?,
        Term::Num(r) => write!(f, "{r}")?,
        Term::App(name, args) => {
            write!(f, "{name}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_term(a, 1, f)?;
            }
            write!(f, ")")?;
        }
        Term::Add(a, b) => {
            fmt_term(a, 1, f)?;
            write!(f, " + ")?;
            fmt_term(b, 2, f)?;
        }
        Term::Sub(a, b) => {
            fmt_term(a, 1, f)?;
            write!(f, " - ")?;
            fmt_term(b, 2, f)?;
        }
        Term::Mul(a, b) => {
            fmt_term(a, 2, f)?;
            write!(f, " * ")?;
            fmt_term(b, 3, f)?;
        }
        Term::Div(a, b) => {
            fmt_term(a, 2, f)?;
            write!(f, " / ")?;
            fmt_term(b, 3, f)?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, 0, f)
    }
}

// formula precedence: 1 = ->, 2 = |, 3 = &, 4 = !, 5 = atom; quantifiers 0
fn formula_prec(x: &Formula) -> u8 {
    match x {
        Formula::Quant(..) | Formula::BoundedAll(..) | Formula::BoundedEx(..) => 0,
        Formula::Imp(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Not(inner) => match **inner {
            // printed as `t1 != t2`
            Formula::Eq(..) => 5,
            _ => 4,
        },
        _ => 5,
    }
}

fn fmt_formula(x: &Formula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = formula_prec(x);
    if p < min {
        write!(f, "(")?;
    }
    match x {
        Formula::Eq(a, b) => {
            fmt_term(a, 0, f)?;
            write!(f, " = ")?;
            fmt_term(b, 0, f)?;
        }
        Formula::Mem(a, b) => {
            fmt_term(a, 0, f)?;
            write!(f, " in ")?;
            fmt_term(b, 0, f)?;
        }
        Formula::Mag(t, v) => {
            write!(f, "mag(")?;
            fmt_term(t, 0, f)?;
            write!(f, ") < 1/{v}")?;
        }
        Formula::Rel(name, args) => {
            write!(f, "{name}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_term(a, 1, f)?;
            }
            write!(f, ")")?;
        }
        Formula::Not(inner) => match &**inner {
            Formula::Eq(a, b) => {
                fmt_term(a, 0, f)?;
                write!(f, " != ")?;
                fmt_term(b, 0, f)?;
            }
            other => {
                write!(f, "!")?;
                fmt_formula(other, 4, f)?;
            }
        },
        Formula::And(a, b) => {
            fmt_formula(a, 3, f)?;
            write!(f, " & ")?;
            fmt_formula(b, 4, f)?;
        }
        Formula::Or(a, b) => {
            fmt_formula(a, 2, f)?;
            write!(f, " | ")?;
            fmt_formula(b, 3, f)?;
        }
        Formula::Imp(a, b) => {
            fmt_formula(a, 2, f)?;
            write!(f, " -> ")?;
            fmt_formula(b, 1, f)?;
        }
        Formula::Quant(k, v, s, body) => {
            write!(f, "{k} {v}")?;
            if *s != k.default_sort() {
                write!(f, ":{s}")?;
            }
            write!(f, ". ")?;
            fmt_formula(body, 0, f)?;
        }
        Formula::BoundedAll(v, m, body) => {
            write!(f, "A {v} <= {m}. ")?;
            fmt_formula(body, 0, f)?;
        }
        Formula::BoundedEx(v, m, body) => {
            write!(f, "E {v} <= {m}. ")?;
            fmt_formula(body, 0, f)?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(s: &str) {
        let f = parse_formula(s).unwrap();
        let printed = f.to_string();
        let g = parse_formula(&printed)
            .unwrap_or_else(|e| panic!("reparse of {printed:?} failed: {e}"));
        assert_eq!(f, g, "round trip changed the tree for {s:?} -> {printed:?}");
    }

    #[test]
    fn round_trips() {
        for s in [
            "Ain h. Ein k. (h != 0 -> P(h, k))",
            "Ain h. Ein k. (h != 0 -> (F(c + h) - F(c)) / h = d + k)",
            "Ast m. Est n. A x. (mag(x) < 1/n -> E y. (mag(y) < 1/m & P(x, y)))",
            "Est m. Ast n. E x. (mag(x) < 1/n & A y. (mag(y) < 1/m -> P(x, y)))",
            "A l <= m. mag(y) < 1/l",
            "E l <= n. (mag(x) < 1/l -> Q(x))",
            "Ast m:posint. Est n:posint. P(m, n)",
            "A s:set. E t:set. s in t",
            "x in y -> !(y in x)",
            "P() & Q()",
            "a + b * c - d / e = f",
            "R(x, y, z) | !R(y, x, z)",
            "1/2 = x -> 3/4 != y",
            "(A x. P(x)) & (E y. Q(y))",
            "!(A x. P(x)) -> E y. !P(y)",
        ] {
            round_trip(s);
        }
    }

    #[test]
    fn sugar_and_defaults() {
        // `!=` is a negated equation
        let f = parse_formula("x != y").unwrap();
        assert_eq!(f, Formula::not(Formula::Eq(Term::var("x"), Term::var("y"))));
        assert_eq!(f.to_string(), "x != y");
        // standard quantifiers default to posint, so the annotation is not printed
        let g = parse_formula("Ast m:posint. P(m)").unwrap();
        assert_eq!(g.to_string(), "Ast m. P(m)");
        // literal fractions fold to rational constants
        let h = parse_formula("x = 2/4").unwrap();
        assert_eq!(h, Formula::Eq(Term::var("x"), Term::Num(crate::rational::rat(1, 2))));
    }

    #[test]
    fn precedence_shapes() {
        let f = parse_formula("p() & q() | r() -> s()").unwrap();
        // ((p & q) | r) -> s
        assert_eq!(f.to_string(), "p() & q() | r() -> s()");
        let g = parse_formula("a() -> b() -> c()").unwrap();
        assert_eq!(g, Formula::imp(parse_formula("a()").unwrap(),
            Formula::imp(parse_formula("b()").unwrap(), parse_formula("c()").unwrap())));
        // quantifier scope extends to the end
        let h = parse_formula("A x. P(x) & Q(x)").unwrap();
        match h {
            Formula::Quant(QuantKind::All, _, _, body) => {
                assert!(matches!(*body, Formula::And(..)));
            }
            _ => panic!("expected quantifier"),
        }
    }

    #[test]
    fn rejections() {
        assert!(parse_formula("A x. A x. P(x)").is_err(), "duplicate binder");
        assert!(parse_formula("P(x) & A x. Q(x)").is_err(), "bound and free");
        assert!(parse_formula("Ain h:posint. P(h)").is_err(), "in binds reals");
        assert!(parse_formula("Ast l <= m. P(l)").is_err(), "bounded must be plain");
        assert!(parse_formula("x").is_err(), "bare variable is not a formula");
        assert!(parse_formula("x = ").is_err());
        assert!(parse_formula("mag(x) < 2/n").is_err());
        assert!(parse_formula("x = 1/0").is_err());
        let err = parse_formula("A x, P(x)").unwrap_err();
        assert!(matches!(err, FormulaError::Parse { .. }));
    }
}
