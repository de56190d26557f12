//! Refutation-oriented evaluation of formulas over finite sample grids.
//!
//! Quantifiers range over finite value lists: standard quantifiers over a
//! grid of rationals, infinitesimal quantifiers over a grid of hyperreal
//! samples plus zero, plain quantifiers over a third grid. All arithmetic
//! and comparisons are exact, and every relation symbol must be interpreted
//! by an explicit (closed-world) tuple table. A `true` result means no
//! counterexample exists *on these grids* — it refutes equivalences, never
//! proves them.

use super::{Formula, FormulaError, QuantKind, Sort, Term};
use crate::hyper::LCNum;
use crate::rational::{is_integer, Rational};
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Sample ranges for the three quantifier families.
#[derive(Debug, Clone, Default)]
pub struct Grids {
    /// Values for `Ast`/`Est` (restricted to positive integers for
    /// posint-sorted binders).
    pub standard: Vec<Rational>,
    /// Values for `Ain`/`Ein`; zero is always added to this range.
    pub infinitesimal: Vec<LCNum>,
    /// Values for plain `A`/`E`.
    pub plain: Vec<LCNum>,
}

/// Closed-world interpretations: free variables, relation tables, a
/// membership table, and partial function tables.
#[derive(Debug, Clone, Default)]
pub struct Interp {
    pub consts: BTreeMap<String, LCNum>,
    pub rels: BTreeMap<String, Vec<Vec<LCNum>>>,
    pub mem: Vec<(LCNum, LCNum)>,
    pub funcs: BTreeMap<String, Vec<(Vec<LCNum>, LCNum)>>,
}

const BOUND_CAP: u64 = 10_000;

pub fn sample_semantics(
    f: &Formula,
    grids: &Grids,
    interp: &Interp,
) -> Result<bool, FormulaError> {
    let mut env = BTreeMap::new();
    eval_formula(f, grids, interp, &mut env)
}

fn eval_term(
    t: &Term,
    interp: &Interp,
    env: &BTreeMap<String, LCNum>,
) -> Result<LCNum, FormulaError> {
    match t {
        Term::Var(v) => env
            .get(v)
            .or_else(|| interp.consts.get(v))
            .cloned()
            .ok_or_else(|| FormulaError::UninterpretedSymbol { name: v.clone() }),
        Term::Num(r) => Ok(LCNum::from_rational(r.clone())),
        Term::App(name, args) => {
            let vals = args
                .iter()
                .map(|a| eval_term(a, interp, env))
                .collect::<Result<Vec<_>, _>>()?;
            let table = interp
                .funcs
                .get(name)
                .ok_or_else(|| FormulaError::UninterpretedSymbol { name: name.clone() })?;
            table
                .iter()
                .find(|(k, _)| k == &vals)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| FormulaError::EvalDomain {
                    detail: format!("function {name} has no table entry for the given arguments"),
                })
        }
        Term::Add(a, b) => Ok(eval_term(a, interp, env)? + eval_term(b, interp, env)?),
        Term::Sub(a, b) => Ok(eval_term(a, interp, env)? - eval_term(b, interp, env)?),
        Term::Mul(a, b) => Ok(eval_term(a, interp, env)? * eval_term(b, interp, env)?),
        Term::Div(a, b) => {
            let x = eval_term(a, interp, env)?;
            let y = eval_term(b, interp, env)?;
            Ok(x.try_div(&y)?)
        }
    }
}

fn quantifier_range(
    kind: QuantKind,
    sort: Sort,
    grids: &Grids,
) -> Result<Vec<LCNum>, FormulaError> {
    if sort == Sort::Set {
        return Err(FormulaError::EvalDomain {
            detail: "set-sorted quantifiers have no sample range".to_string(),
        });
    }
    let base: Vec<LCNum> = match kind {
        QuantKind::AllSt | QuantKind::ExSt => grids
            .standard
            .iter()
            .map(|r| LCNum::from_rational(r.clone()))
            .collect(),
        QuantKind::AllIn | QuantKind::ExIn => {
            let mut v = vec![LCNum::zero()];
            v.extend(grids.infinitesimal.iter().cloned());
            v
        }
        QuantKind::All | QuantKind::Ex => grids.plain.clone(),
    };
    if sort == Sort::PosInt {
        Ok(base.into_iter().filter(is_posint).collect())
    } else {
        Ok(base)
    }
}

fn is_posint(x: &LCNum) -> bool {
    match x.terms() {
        [] => false,
        [(q, c)] => q.is_zero() && is_integer(c) && c.is_positive(),
        _ => false,
    }
}

fn eval_formula(
    f: &Formula,
    grids: &Grids,
    interp: &Interp,
    env: &mut BTreeMap<String, LCNum>,
) -> Result<bool, FormulaError> {
    match f {
        Formula::Eq(a, b) => Ok(eval_term(a, interp, env)? == eval_term(b, interp, env)?),
        Formula::Mem(a, b) => {
            let x = eval_term(a, interp, env)?;
            let y = eval_term(b, interp, env)?;
            Ok(interp.mem.iter().any(|(p, q)| *p == x && *q == y))
        }
        Formula::Mag(t, v) => {
            let x = eval_term(t, interp, env)?;
            let n = env
                .get(v)
                .or_else(|| interp.consts.get(v))
                .cloned()
                .ok_or_else(|| FormulaError::UninterpretedSymbol { name: v.clone() })?;
            if !is_posint(&n) {
                return Err(FormulaError::EvalDomain {
                    detail: format!("magnitude bound {v} is not a positive integer"),
                });
            }
            let bound = LCNum::one().try_div(&n)?;
            Ok(x.abs().compare(&bound)? == std::cmp::Ordering::Less)
        }
        Formula::Rel(name, args) => {
            let vals = args
                .iter()
                .map(|a| eval_term(a, interp, env))
                .collect::<Result<Vec<_>, _>>()?;
            let table = interp
                .rels
                .get(name)
                .ok_or_else(|| FormulaError::UninterpretedSymbol { name: name.clone() })?;
            Ok(table.contains(&vals))
        }
        Formula::Not(a) => Ok(!eval_formula(a, grids, interp, env)?),
        Formula::And(a, b) => {
            if !eval_formula(a, grids, interp, env)? {
                return Ok(false);
            }
            eval_formula(b, grids, interp, env)
        }
        Formula::Or(a, b) => {
            if eval_formula(a, grids, interp, env)? {
                return Ok(true);
            }
            eval_formula(b, grids, interp, env)
        }
        Formula::Imp(a, b) => {
            if !eval_formula(a, grids, interp, env)? {
                return Ok(true);
            }
            eval_formula(b, grids, interp, env)
        }
        Formula::Quant(kind, v, sort, body) => {
            let range = quantifier_range(*kind, *sort, grids)?;
            let universal = matches!(kind.dir(), super::Dir::Univ);
            for val in range {
                let saved = env.insert(v.clone(), val);
                let holds = eval_formula(body, grids, interp, env);
                restore(env, v, saved);
                let holds = holds?;
                if universal && !holds {
                    return Ok(false);
                }
                if !universal && holds {
                    return Ok(true);
                }
            }
            Ok(universal)
        }
        Formula::BoundedAll(v, m, body) | Formula::BoundedEx(v, m, body) => {
            let mval = env
                .get(m)
                .or_else(|| interp.consts.get(m))
                .cloned()
                .ok_or_else(|| FormulaError::UninterpretedSymbol { name: m.clone() })?;
            if !is_posint(&mval) {
                return Err(FormulaError::EvalDomain {
                    detail: format!("bound {m} is not a positive integer"),
                });
            }
            let upper = mval.terms()[0]
                .1
                .numer()
                .to_u64()
                .filter(|&u| u <= BOUND_CAP)
                .ok_or_else(|| FormulaError::EvalDomain {
                    detail: format!("bound {m} exceeds the evaluation cap"),
                })?;
            let universal = matches!(f, Formula::BoundedAll(..));
            for i in 1..=upper {
                let val = LCNum::from_int(i as i64);
                let saved = env.insert(v.clone(), val);
                let holds = eval_formula(body, grids, interp, env);
                restore(env, v, saved);
                let holds = holds?;
                if universal && !holds {
                    return Ok(false);
                }
                if !universal && holds {
                    return Ok(true);
                }
            }
            Ok(universal)
        }
    }
}

fn restore(env: &mut BTreeMap<String, LCNum>, v: &str, saved: Option<LCNum>) {
    match saved {
        Some(old) => {
            env.insert(v.to_string(), old);
        }
        None => {
            env.remove(v);
        }
    }
}
