//! Quantifier formulas with standardness- and infinitesimal-ranging binders.
//!
//! The language has plain quantifiers `A`/`E`, standard quantifiers
//! `Ast`/`Est`, infinitesimal quantifiers `Ain`/`Ein` (ranging over
//! infinitesimals and zero), bounded plain quantifiers `A l <= m.` /
//! `E l <= m.` over positive integers, the connectives `!`, `&`, `|`, `->`,
//! and the atoms `t1 = t2`, `t1 in t2`, `mag(t) < 1/v`, `R(t1,...,tk)`.
//!
//! The centerpiece is [`rewrite::rewrite_to_delta_st`], which normalizes the
//! supported quantifier prefixes into a block of standard quantifiers over a
//! quantifier-mark-free matrix, recording a replayable trace of named rules.

pub mod parse;
pub mod rewrite;
pub mod semantics;

use crate::hyper::HyperError;
use crate::rational::Rational;
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("syntax error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
    #[error("unsupported prefix shape at quantifier {quantifier}: {detail}")]
    UnsupportedShape { quantifier: String, detail: String },
    #[error("formula is not in standard-block form: {reason}")]
    NotDeltaSt { reason: String },
    #[error("rule {rule} not applicable: {detail}")]
    RuleNotApplicable { rule: String, detail: String },
    #[error("trace fails to replay at step {step}: {detail}")]
    TraceMismatch { step: usize, detail: String },
    #[error("no interpretation for symbol {name}")]
    UninterpretedSymbol { name: String },
    #[error("evaluation out of domain: {detail}")]
    EvalDomain { detail: String },
    #[error(transparent)]
    Hyper(#[from] HyperError),
    #[error("internal invariant violated: {detail}")]
    Internal { detail: String },
}

/// Sorts carried on binders. Plain and infinitesimal quantifiers default to
/// `Real`; standard quantifiers default to `PosInt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Real,
    PosInt,
    Set,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuantKind {
    All,
    Ex,
    AllSt,
    ExSt,
    AllIn,
    ExIn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Univ,
    Exist,
}

impl QuantKind {
    pub fn dir(&self) -> Dir {
        match self {
            QuantKind::All | QuantKind::AllSt | QuantKind::AllIn => Dir::Univ,
            QuantKind::Ex | QuantKind::ExSt | QuantKind::ExIn => Dir::Exist,
        }
    }

    pub fn is_st(&self) -> bool {
        matches!(self, QuantKind::AllSt | QuantKind::ExSt)
    }

    pub fn is_in(&self) -> bool {
        matches!(self, QuantKind::AllIn | QuantKind::ExIn)
    }

    pub fn is_plain(&self) -> bool {
        matches!(self, QuantKind::All | QuantKind::Ex)
    }

    /// `Ast <-> Est`; identity on the others.
    pub fn flip_st(&self) -> QuantKind {
        match self {
            QuantKind::AllSt => QuantKind::ExSt,
            QuantKind::ExSt => QuantKind::AllSt,
            k => *k,
        }
    }

    /// The plain quantifier of the same direction.
    pub fn erase_marks(&self) -> QuantKind {
        match self.dir() {
            Dir::Univ => QuantKind::All,
            Dir::Exist => QuantKind::Ex,
        }
    }

    pub fn default_sort(&self) -> Sort {
        if self.is_st() {
            Sort::PosInt
        } else {
            Sort::Real
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Num(Rational),
    App(String, Vec<Term>),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Eq(Term, Term),
    Mem(Term, Term),
    /// `mag(t) < 1/v` where `v` names a positive-integer variable.
    Mag(Term, String),
    Rel(String, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Quant(QuantKind, String, Sort, Box<Formula>),
    /// `A l <= m. body` — plain universal over positive integers up to `m`.
    BoundedAll(String, String, Box<Formula>),
    /// `E l <= m. body`.
    BoundedEx(String, String, Box<Formula>),
}

impl serde::Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Term {
    pub fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Num(_) => {}
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn rename_var(&self, from: &str, to: &str) -> Term {
        match self {
            Term::Var(v) if v == from => Term::Var(to.to_string()),
            Term::Var(_) | Term::Num(_) => self.clone(),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.rename_var(from, to)).collect())
            }
            Term::Add(a, b) => {
                Term::Add(Box::new(a.rename_var(from, to)), Box::new(b.rename_var(from, to)))
            }
            Term::Sub(a, b) => {
                Term::Sub(Box::new(a.rename_var(from, to)), Box::new(b.rename_var(from, to)))
            }
            Term::Mul(a, b) => {
                Term::Mul(Box::new(a.rename_var(from, to)), Box::new(b.rename_var(from, to)))
            }
            Term::Div(a, b) => {
                Term::Div(Box::new(a.rename_var(from, to)), Box::new(b.rename_var(from, to)))
            }
        }
    }
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn quant(kind: QuantKind, var: &str, sort: Sort, body: Formula) -> Formula {
        Formula::Quant(kind, var.to_string(), sort, Box::new(body))
    }

    /// Every variable name occurring anywhere (free, bound, or as a binder).
    pub fn all_var_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_all_var_names(&mut out);
        out
    }

    fn collect_all_var_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Eq(a, b) | Formula::Mem(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Mag(t, v) => {
                t.collect_vars(out);
                out.insert(v.clone());
            }
            Formula::Rel(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            Formula::Not(a) => a.collect_all_var_names(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.collect_all_var_names(out);
                b.collect_all_var_names(out);
            }
            Formula::Quant(_, v, _, body) => {
                out.insert(v.clone());
                body.collect_all_var_names(out);
            }
            Formula::BoundedAll(v, m, body) | Formula::BoundedEx(v, m, body) => {
                out.insert(v.clone());
                out.insert(m.clone());
                body.collect_all_var_names(out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Formula::Eq(a, b) | Formula::Mem(a, b) => {
                let mut out = BTreeSet::new();
                a.collect_vars(&mut out);
                b.collect_vars(&mut out);
                out
            }
            Formula::Mag(t, v) => {
                let mut out = BTreeSet::new();
                t.collect_vars(&mut out);
                out.insert(v.clone());
                out
            }
            Formula::Rel(_, args) => {
                let mut out = BTreeSet::new();
                for a in args {
                    a.collect_vars(&mut out);
                }
                out
            }
            Formula::Not(a) => a.free_vars(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                let mut out = a.free_vars();
                out.extend(b.free_vars());
                out
            }
            Formula::Quant(_, v, _, body) => {
                let mut out = body.free_vars();
                out.remove(v);
                out
            }
            Formula::BoundedAll(v, m, body) | Formula::BoundedEx(v, m, body) => {
                let mut out = body.free_vars();
                out.remove(v);
                out.insert(m.clone());
                out
            }
        }
    }

    /// Renames free occurrences of `from` (including magnitude denominators
    /// and bounded-quantifier bounds) to `to`. The caller must ensure `to` is
    /// not captured; the rewriter only renames to fresh names.
    pub fn rename_free(&self, from: &str, to: &str) -> Formula {
        match self {
            Formula::Eq(a, b) => Formula::Eq(a.rename_var(from, to), b.rename_var(from, to)),
            Formula::Mem(a, b) => Formula::Mem(a.rename_var(from, to), b.rename_var(from, to)),
            Formula::Mag(t, v) => Formula::Mag(
                t.rename_var(from, to),
                if v == from { to.to_string() } else { v.clone() },
            ),
            Formula::Rel(r, args) => {
                Formula::Rel(r.clone(), args.iter().map(|a| a.rename_var(from, to)).collect())
            }
            Formula::Not(a) => Formula::not(a.rename_free(from, to)),
            Formula::And(a, b) => Formula::and(a.rename_free(from, to), b.rename_free(from, to)),
            Formula::Or(a, b) => Formula::or(a.rename_free(from, to), b.rename_free(from, to)),
            Formula::Imp(a, b) => Formula::imp(a.rename_free(from, to), b.rename_free(from, to)),
            Formula::Quant(k, v, s, body) => {
                if v == from {
                    self.clone()
                } else {
                    Formula::Quant(*k, v.clone(), *s, Box::new(body.rename_free(from, to)))
                }
            }
            Formula::BoundedAll(v, m, body) => {
                let m2 = if m == from { to.to_string() } else { m.clone() };
                if v == from {
                    Formula::BoundedAll(v.clone(), m2, body.clone())
                } else {
                    Formula::BoundedAll(v.clone(), m2, Box::new(body.rename_free(from, to)))
                }
            }
            Formula::BoundedEx(v, m, body) => {
                let m2 = if m == from { to.to_string() } else { m.clone() };
                if v == from {
                    Formula::BoundedEx(v.clone(), m2, body.clone())
                } else {
                    Formula::BoundedEx(v.clone(), m2, Box::new(body.rename_free(from, to)))
                }
            }
        }
    }

    /// Child subformulas, in path-index order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Eq(..) | Formula::Mem(..) | Formula::Mag(..) | Formula::Rel(..) => vec![],
            Formula::Not(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => vec![a, b],
            Formula::Quant(_, _, _, body) => vec![body],
            Formula::BoundedAll(_, _, body) | Formula::BoundedEx(_, _, body) => vec![body],
        }
    }

    pub fn get_at(&self, path: &[usize]) -> Option<&Formula> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Replaces the subformula at `path`; panics on an invalid path (the
    /// rewriter only constructs valid paths).
    pub fn replace_at(&self, path: &[usize], new: Formula) -> Formula {
        if path.is_empty() {
            return new;
        }
        let (i, rest) = (path[0], &path[1..]);
        match self {
            Formula::Not(a) if i == 0 => Formula::not(a.replace_at(rest, new)),
            Formula::And(a, b) if i == 0 => Formula::And(Box::new(a.replace_at(rest, new)), b.clone()),
            Formula::And(a, b) if i == 1 => Formula::And(a.clone(), Box::new(b.replace_at(rest, new))),
            Formula::Or(a, b) if i == 0 => Formula::Or(Box::new(a.replace_at(rest, new)), b.clone()),
            Formula::Or(a, b) if i == 1 => Formula::Or(a.clone(), Box::new(b.replace_at(rest, new))),
            Formula::Imp(a, b) if i == 0 => Formula::Imp(Box::new(a.replace_at(rest, new)), b.clone()),
            Formula::Imp(a, b) if i == 1 => Formula::Imp(a.clone(), Box::new(b.replace_at(rest, new))),
            Formula::Quant(k, v, s, body) if i == 0 => {
                Formula::Quant(*k, v.clone(), *s, Box::new(body.replace_at(rest, new)))
            }
            Formula::BoundedAll(v, m, body) if i == 0 => {
                Formula::BoundedAll(v.clone(), m.clone(), Box::new(body.replace_at(rest, new)))
            }
            Formula::BoundedEx(v, m, body) if i == 0 => {
                Formula::BoundedEx(v.clone(), m.clone(), Box::new(body.replace_at(rest, new)))
            }
            _ => panic!("invalid path into formula"),
        }
    }

    /// True when no standard or infinitesimal quantifier occurs anywhere.
    pub fn is_in_formula(&self) -> bool {
        match self {
            Formula::Quant(k, _, _, body) => !k.is_st() && !k.is_in() && body.is_in_formula(),
            _ => self.children().iter().all(|c| c.is_in_formula()),
        }
    }

    /// True when no standard quantifier occurs anywhere (infinitesimal
    /// quantifiers are also excluded; used as the side condition for the
    /// idealization move).
    pub fn is_st_free(&self) -> bool {
        self.is_in_formula()
    }
}

/// Result of the standard-block classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DeltaStClass {
    DeltaSt { prefix_len: usize },
    NotDeltaSt { reason: String },
}

/// A formula is in standard-block form when it is a (possibly empty) block of
/// `Ast`/`Est` quantifiers followed by a formula with no standard or
/// infinitesimal quantifiers.
pub fn classify_delta_st(f: &Formula) -> DeltaStClass {
    let mut cur = f;
    let mut prefix_len = 0;
    while let Formula::Quant(k, _, _, body) = cur {
        if k.is_st() {
            prefix_len += 1;
            cur = body;
        } else {
            break;
        }
    }
    if cur.is_in_formula() {
        DeltaStClass::DeltaSt { prefix_len }
    } else {
        let reason = first_marked_quantifier(cur)
            .map(|(k, v)| format!("{k} {v} occurs below the leading block"))
            .unwrap_or_else(|| "marked quantifier below the leading block".to_string());
        DeltaStClass::NotDeltaSt { reason }
    }
}

pub(crate) fn first_marked_quantifier(f: &Formula) -> Option<(QuantKind, String)> {
    if let Formula::Quant(k, v, _, _) = f {
        if k.is_st() || k.is_in() {
            return Some((*k, v.clone()));
        }
    }
    for c in f.children() {
        if let Some(hit) = first_marked_quantifier(c) {
            return Some(hit);
        }
    }
    None
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_equal(f1: &Formula, f2: &Formula) -> bool {
    fn term_eq(t1: &Term, t2: &Term, m1: &[(String, usize)], m2: &[(String, usize)]) -> bool {
        let lookup = |m: &[(String, usize)], v: &str| -> Option<usize> {
            m.iter().rev().find(|(name, _)| name == v).map(|(_, i)| *i)
        };
        match (t1, t2) {
            (Term::Var(a), Term::Var(b)) => match (lookup(m1, a), lookup(m2, b)) {
                (Some(i), Some(j)) => i == j,
                (None, None) => a == b,
                _ => false,
            },
            (Term::Num(a), Term::Num(b)) => a == b,
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| term_eq(x, y, m1, m2))
            }
            (Term::Add(a, b), Term::Add(c, d))
            | (Term::Sub(a, b), Term::Sub(c, d))
            | (Term::Mul(a, b), Term::Mul(c, d))
            | (Term::Div(a, b), Term::Div(c, d)) => {
                term_eq(a, c, m1, m2) && term_eq(b, d, m1, m2)
            }
            _ => false,
        }
    }

    fn var_eq(v1: &str, v2: &str, m1: &[(String, usize)], m2: &[(String, usize)]) -> bool {
        let lookup = |m: &[(String, usize)], v: &str| -> Option<usize> {
            m.iter().rev().find(|(name, _)| name == v).map(|(_, i)| *i)
        };
        match (lookup(m1, v1), lookup(m2, v2)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => v1 == v2,
            _ => false,
        }
    }

    fn go(
        f1: &Formula,
        f2: &Formula,
        m1: &mut Vec<(String, usize)>,
        m2: &mut Vec<(String, usize)>,
        depth: usize,
    ) -> bool {
        match (f1, f2) {
            (Formula::Eq(a, b), Formula::Eq(c, d)) | (Formula::Mem(a, b), Formula::Mem(c, d)) => {
                term_eq(a, c, m1, m2) && term_eq(b, d, m1, m2)
            }
            (Formula::Mag(t1, v1), Formula::Mag(t2, v2)) => {
                term_eq(t1, t2, m1, m2) && var_eq(v1, v2, m1, m2)
            }
            (Formula::Rel(r1, xs), Formula::Rel(r2, ys)) => {
                r1 == r2
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| term_eq(x, y, m1, m2))
            }
            (Formula::Not(a), Formula::Not(b)) => go(a, b, m1, m2, depth),
            (Formula::And(a, b), Formula::And(c, d))
            | (Formula::Or(a, b), Formula::Or(c, d))
            | (Formula::Imp(a, b), Formula::Imp(c, d)) => {
                go(a, c, m1, m2, depth) && go(b, d, m1, m2, depth)
            }
            (Formula::Quant(k1, v1, s1, b1), Formula::Quant(k2, v2, s2, b2)) => {
                if k1 != k2 || s1 != s2 {
                    return false;
                }
                m1.push((v1.clone(), depth));
                m2.push((v2.clone(), depth));
                let r = go(b1, b2, m1, m2, depth + 1);
                m1.pop();
                m2.pop();
                r
            }
            (Formula::BoundedAll(v1, n1, b1), Formula::BoundedAll(v2, n2, b2))
            | (Formula::BoundedEx(v1, n1, b1), Formula::BoundedEx(v2, n2, b2)) => {
                if !var_eq(n1, n2, m1, m2) {
                    return false;
                }
                m1.push((v1.clone(), depth));
                m2.push((v2.clone(), depth));
                let r = go(b1, b2, m1, m2, depth + 1);
                m1.pop();
                m2.pop();
                r
            }
            _ => false,
        }
    }

    go(f1, f2, &mut Vec::new(), &mut Vec::new(), 0)
}

/// How a variable occurs in a formula, for the monotonicity side conditions
/// of the collapse and merge rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagPolarity {
    Absent,
    AllPositive,
    AllNegative,
    Other,
}

/// Classifies the occurrences of `v`: only as the denominator of magnitude
/// atoms, all under the same polarity — or something else.
pub fn mag_polarity(f: &Formula, v: &str) -> MagPolarity {
    #[derive(Default)]
    struct Acc {
        pos: bool,
        neg: bool,
        bad: bool,
    }

    fn term_mentions(t: &Term, v: &str) -> bool {
        let mut vars = BTreeSet::new();
        t.collect_vars(&mut vars);
        vars.contains(v)
    }

    fn go(f: &Formula, v: &str, positive: bool, acc: &mut Acc) {
        match f {
            Formula::Mag(t, w) => {
                if term_mentions(t, v) {
                    acc.bad = true;
                }
                if w == v {
                    if positive {
                        acc.pos = true;
                    } else {
                        acc.neg = true;
                    }
                }
            }
            Formula::Eq(a, b) | Formula::Mem(a, b) => {
                if term_mentions(a, v) || term_mentions(b, v) {
                    acc.bad = true;
                }
            }
            Formula::Rel(_, args) => {
                if args.iter().any(|a| term_mentions(a, v)) {
                    acc.bad = true;
                }
            }
            Formula::Not(a) => go(a, v, !positive, acc),
            Formula::And(a, b) | Formula::Or(a, b) => {
                go(a, v, positive, acc);
                go(b, v, positive, acc);
            }
            Formula::Imp(a, b) => {
                go(a, v, !positive, acc);
                go(b, v, positive, acc);
            }
            Formula::Quant(_, w, _, body) => {
                if w != v {
                    go(body, v, positive, acc);
                }
            }
            Formula::BoundedAll(w, m, body) | Formula::BoundedEx(w, m, body) => {
                if m == v {
                    acc.bad = true;
                }
                if w != v {
                    go(body, v, positive, acc);
                }
            }
        }
    }

    let mut acc = Acc::default();
    go(f, v, true, &mut acc);
    if acc.bad || (acc.pos && acc.neg) {
        MagPolarity::Other
    } else if acc.pos {
        MagPolarity::AllPositive
    } else if acc.neg {
        MagPolarity::AllNegative
    } else {
        MagPolarity::Absent
    }
}

/// Replaces every leading standard quantifier by its plain counterpart.
/// The input must classify as a standard block.
pub fn transfer_collapse(f: &Formula) -> Result<Formula, FormulaError> {
    match classify_delta_st(f) {
        DeltaStClass::DeltaSt { .. } => Ok(erase_leading_marks(f)),
        DeltaStClass::NotDeltaSt { reason } => Err(FormulaError::NotDeltaSt { reason }),
    }
}

fn erase_leading_marks(f: &Formula) -> Formula {
    match f {
        Formula::Quant(k, v, s, body) if k.is_st() => {
            Formula::Quant(k.erase_marks(), v.clone(), *s, Box::new(erase_leading_marks(body)))
        }
        _ => f.clone(),
    }
}
