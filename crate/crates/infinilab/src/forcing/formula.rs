//! Formulas of set membership over names, constants, and bound variables.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use super::hfset::{HFSet, SetParser};
use super::{ForcingError, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SetTerm {
    /// The name G_n, read off a condition's n-th tuple coordinate.
    Name(usize),
    Const(HFSet),
    Var(String),
}

impl fmt::Display for SetTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetTerm::Name(n) => write!(f, "G{n}"),
            SetTerm::Const(z) => write!(f, "{z}"),
            SetTerm::Var(v) => write!(f, "{v}"),
        }
    }
}

/// Core connectives only; the parser accepts `|`, `->`, `!=`, and `A v.` as
/// sugar and lowers them to this shape.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SetFormula {
    Eq(SetTerm, SetTerm),
    Mem(SetTerm, SetTerm),
    St(SetTerm),
    Not(Box<SetFormula>),
    And(Box<SetFormula>, Box<SetFormula>),
    Exists(String, Box<SetFormula>),
}

impl SetFormula {
    pub fn not(f: SetFormula) -> SetFormula {
        SetFormula::Not(Box::new(f))
    }

    pub fn and(a: SetFormula, b: SetFormula) -> SetFormula {
        SetFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: SetFormula, b: SetFormula) -> SetFormula {
        SetFormula::not(SetFormula::and(SetFormula::not(a), SetFormula::not(b)))
    }

    pub fn imp(a: SetFormula, b: SetFormula) -> SetFormula {
        SetFormula::not(SetFormula::and(a, SetFormula::not(b)))
    }

    pub fn exists(v: &str, f: SetFormula) -> SetFormula {
        SetFormula::Exists(v.to_string(), Box::new(f))
    }

    pub fn forall(v: &str, f: SetFormula) -> SetFormula {
        SetFormula::not(SetFormula::exists(v, SetFormula::not(f)))
    }

    fn terms(&self) -> Vec<&SetTerm> {
        match self {
            SetFormula::Eq(a, b) | SetFormula::Mem(a, b) => vec![a, b],
            SetFormula::St(t) => vec![t],
            SetFormula::Not(f) => f.terms(),
            SetFormula::And(a, b) => {
                let mut v = a.terms();
                v.extend(b.terms());
                v
            }
            SetFormula::Exists(_, f) => f.terms(),
        }
    }

    /// Largest name index mentioned, if any name is.
    pub fn names_max(&self) -> Option<usize> {
        self.terms()
            .into_iter()
            .filter_map(|t| match t {
                SetTerm::Name(n) => Some(*n),
                _ => None,
            })
            .max()
    }

    pub fn is_st_free(&self) -> bool {
        match self {
            SetFormula::Eq(..) | SetFormula::Mem(..) => true,
            SetFormula::St(_) => false,
            SetFormula::Not(f) | SetFormula::Exists(_, f) => f.is_st_free(),
            SetFormula::And(a, b) => a.is_st_free() && b.is_st_free(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn term_var(t: &SetTerm, out: &mut BTreeSet<String>) {
            if let SetTerm::Var(v) = t {
                out.insert(v.clone());
            }
        }
        match self {
            SetFormula::Eq(a, b) | SetFormula::Mem(a, b) => {
                let mut out = BTreeSet::new();
                term_var(a, &mut out);
                term_var(b, &mut out);
                out
            }
            SetFormula::St(t) => {
                let mut out = BTreeSet::new();
                term_var(t, &mut out);
                out
            }
            SetFormula::Not(f) => f.free_vars(),
            SetFormula::And(a, b) => {
                let mut out = a.free_vars();
                out.extend(b.free_vars());
                out
            }
            SetFormula::Exists(v, f) => {
                let mut out = f.free_vars();
                out.remove(v);
                out
            }
        }
    }

    /// Replaces free occurrences of `v` by `t`. The substituted terms here are
    /// names and constants, which cannot be captured.
    pub fn subst_var(&self, v: &str, t: &SetTerm) -> SetFormula {
        let sub = |term: &SetTerm| -> SetTerm {
            match term {
                SetTerm::Var(w) if w == v => t.clone(),
                other => other.clone(),
            }
        };
        match self {
            SetFormula::Eq(a, b) => SetFormula::Eq(sub(a), sub(b)),
            SetFormula::Mem(a, b) => SetFormula::Mem(sub(a), sub(b)),
            SetFormula::St(term) => SetFormula::St(sub(term)),
            SetFormula::Not(f) => SetFormula::not(f.subst_var(v, t)),
            SetFormula::And(a, b) => SetFormula::and(a.subst_var(v, t), b.subst_var(v, t)),
            SetFormula::Exists(w, f) if w == v => SetFormula::Exists(w.clone(), f.clone()),
            SetFormula::Exists(w, f) => SetFormula::Exists(w.clone(), Box::new(f.subst_var(v, t))),
        }
    }
}

impl fmt::Display for SetFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            SetFormula::Mem(a, b) => write!(f, "{a} in {b}"),
            SetFormula::St(t) => write!(f, "st({t})"),
            SetFormula::Not(inner) => match inner.as_ref() {
                SetFormula::St(_) | SetFormula::Not(_) => write!(f, "!{inner}"),
                _ => write!(f, "!({inner})"),
            },
            SetFormula::And(a, b) => write!(f, "({a} & {b})"),
            SetFormula::Exists(v, body) => write!(f, "E {v}. {body}"),
        }
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_lowercase()
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'
}

fn ident(p: &mut SetParser<'_>) -> Result<String> {
    p.skip_ws();
    let start = p.pos;
    if !p.peek().map_or(false, is_ident_start) {
        return p.err("expected a variable name");
    }
    while p.peek().map_or(false, is_ident_byte) {
        p.pos += 1;
    }
    let name = std::str::from_utf8(&p.bytes[start..p.pos])
        .expect("ident bytes are ascii")
        .to_string();
    if name == "st" || name == "in" {
        return Err(ForcingError::Parse {
            at: start,
            msg: format!("`{name}` is reserved"),
        });
    }
    Ok(name)
}

fn term(p: &mut SetParser<'_>) -> Result<SetTerm> {
    p.skip_ws();
    match p.peek() {
        Some(b'G') => {
            p.pos += 1;
            Ok(SetTerm::Name(p.number()?))
        }
        Some(b'{') => Ok(SetTerm::Const(p.hfset()?)),
        Some(b) if b.is_ascii_digit() => Ok(SetTerm::Const(p.hfset()?)),
        Some(b) if is_ident_start(b) => Ok(SetTerm::Var(ident(p)?)),
        _ => p.err("expected a term (G<n>, a set, or a variable)"),
    }
}

fn quantifier(p: &mut SetParser<'_>) -> Result<Option<SetFormula>> {
    p.skip_ws();
    let kind = match p.peek() {
        Some(b'E') | Some(b'A') => p.peek().unwrap(),
        _ => return Ok(None),
    };
    // Only treat E/A as a quantifier when followed by a variable and a dot.
    let save = p.pos;
    p.pos += 1;
    let Ok(v) = ident(p) else {
        p.pos = save;
        return Ok(None);
    };
    p.skip_ws();
    if !p.eat(b'.') {
        p.pos = save;
        return Ok(None);
    }
    let body = formula(p)?;
    Ok(Some(if kind == b'E' {
        SetFormula::Exists(v, Box::new(body))
    } else {
        SetFormula::forall(&v, body)
    }))
}

fn atom(p: &mut SetParser<'_>) -> Result<SetFormula> {
    p.skip_ws();
    if p.bytes[p.pos..].starts_with(b"st(") {
        p.pos += 3;
        let t = term(p)?;
        p.skip_ws();
        p.expect(b')')?;
        return Ok(SetFormula::St(t));
    }
    let lhs = term(p)?;
    p.skip_ws();
    if p.eat(b'=') {
        Ok(SetFormula::Eq(lhs, term(p)?))
    } else if p.bytes[p.pos..].starts_with(b"!=") {
        p.pos += 2;
        Ok(SetFormula::not(SetFormula::Eq(lhs, term(p)?)))
    } else if p.bytes[p.pos..].starts_with(b"in") {
        p.pos += 2;
        Ok(SetFormula::Mem(lhs, term(p)?))
    } else {
        p.err("expected `=`, `!=`, or `in` after a term")
    }
}

fn unary(p: &mut SetParser<'_>) -> Result<SetFormula> {
    p.skip_ws();
    if p.eat(b'!') {
        return Ok(SetFormula::not(unary(p)?));
    }
    if let Some(q) = quantifier(p)? {
        return Ok(q);
    }
    if p.peek() == Some(b'(') {
        p.expect(b'(')?;
        let f = formula(p)?;
        p.skip_ws();
        p.expect(b')')?;
        return Ok(f);
    }
    atom(p)
}

fn conjunction(p: &mut SetParser<'_>) -> Result<SetFormula> {
    let mut f = unary(p)?;
    loop {
        p.skip_ws();
        if p.peek() == Some(b'&') {
            p.pos += 1;
            f = SetFormula::and(f, unary(p)?);
        } else {
            return Ok(f);
        }
    }
}

fn disjunction(p: &mut SetParser<'_>) -> Result<SetFormula> {
    let mut f = conjunction(p)?;
    loop {
        p.skip_ws();
        if p.peek() == Some(b'|') {
            p.pos += 1;
            f = SetFormula::or(f, conjunction(p)?);
        } else {
            return Ok(f);
        }
    }
}

fn formula(p: &mut SetParser<'_>) -> Result<SetFormula> {
    let lhs = disjunction(p)?;
    p.skip_ws();
    if p.bytes[p.pos..].starts_with(b"->") {
        p.pos += 2;
        let rhs = formula(p)?;
        Ok(SetFormula::imp(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

impl FromStr for SetFormula {
    type Err = ForcingError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = SetParser::new(s);
        let f = formula(&mut p)?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return p.err("trailing input after formula");
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for src in [
            "G0 in G1",
            "G0 = {0,2}",
            "st(G0)",
            "!(G0 = 0)",
            "(G0 in G1 & !(G1 in G0))",
            "E v. (v in G0 & !(v = 0))",
        ] {
            let f: SetFormula = src.parse().unwrap();
            let printed = f.to_string();
            let again: SetFormula = printed.parse().unwrap();
            assert_eq!(again, f, "round trip through {printed}");
        }
    }

    #[test]
    fn sugar_lowers_to_core() {
        let a: SetFormula = "G0 = 0 | G0 = 1".parse().unwrap();
        let b: SetFormula = "!(!(G0 = 0) & !(G0 = 1))".parse().unwrap();
        assert_eq!(a, b);
        let imp: SetFormula = "G0 in G1 -> G0 = 0".parse().unwrap();
        assert_eq!(
            imp,
            SetFormula::imp("G0 in G1".parse().unwrap(), "G0 = 0".parse().unwrap())
        );
        let all: SetFormula = "A v. v in G0".parse().unwrap();
        assert_eq!(all, SetFormula::forall("v", "v in G0".parse().unwrap()));
        let ne: SetFormula = "G0 != 1".parse().unwrap();
        assert_eq!(ne, SetFormula::not("G0 = 1".parse().unwrap()));
    }

    #[test]
    fn name_and_variable_accounting() {
        let f: SetFormula = "E v. (v in G2 & st(G0))".parse().unwrap();
        assert_eq!(f.names_max(), Some(2));
        assert!(!f.is_st_free());
        assert!(f.free_vars().is_empty());
        let open: SetFormula = "v in G0".parse().unwrap();
        assert_eq!(open.free_vars().len(), 1);
        let closed = open.subst_var("v", &SetTerm::Const(HFSet::empty()));
        assert!(closed.free_vars().is_empty());
        assert_eq!(closed, "0 in G0".parse().unwrap());
        // Substitution respects shadowing.
        let shadowed: SetFormula = "E v. v = 0".parse().unwrap();
        assert_eq!(shadowed.subst_var("v", &SetTerm::Name(1)), shadowed);
        assert_eq!("0 = 0".parse::<SetFormula>().unwrap().names_max(), None);
    }
}
