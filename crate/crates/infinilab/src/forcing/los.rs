//! Almost-all evaluation of membership formulas over a condition's tuples.

use super::fiber::{Condition, FiberRep, RuleTerm};
use super::formula::{SetFormula, SetTerm};
use super::hfset::HFSet;
use super::index_set::{lcm, IndexSet};
use super::{ForcingError, Result};

/// Whether the condition forces the formula in the pointwise sense: for almost
/// all indices of `c.p`, every tuple of the fiber satisfies the matrix, with
/// names read as tuple coordinates and plain quantifiers ranging over the
/// sets of rank at most `r`.
///
/// Exact for tabular fibers. For generative fibers the answer is certified by
/// rule-level analysis (growth bounds and solution horizons); combinations the
/// certificates cannot settle report an error rather than guessing.
pub fn forces_los(c: &Condition, phi: &SetFormula, r: usize) -> Result<bool> {
    if !phi.is_st_free() {
        return Err(ForcingError::StOutsidePointwise);
    }
    if let Some(v) = phi.free_vars().into_iter().next() {
        return Err(ForcingError::Parse {
            at: 0,
            msg: format!("free variable `{v}` in formula"),
        });
    }
    if let Some(n) = phi.names_max() {
        if n >= c.rank() {
            return Err(ForcingError::RankSideCondition {
                index: n,
                rank: c.rank(),
            });
        }
    }
    let universe = HFSet::universe(r);
    match c.q.rep() {
        FiberRep::Tabular { .. } => {
            let (l_q, p_q) = c.q.window_shape().expect("tabular");
            let l = l_q.max(c.p.prelude_len());
            let p = lcm(p_q, c.p.period_len());
            for i in l..l + p {
                if !c.p.contains(i) {
                    continue;
                }
                for x in c.q.value_at(i).tuples() {
                    if !matrix_holds(phi, x, &universe)? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        FiberRep::Generative { templates } => {
            let mut truth = IndexSet::full();
            for tpl in templates {
                truth = truth.intersect(&truth_set(phi, tpl, &universe)?);
            }
            Ok(c.p.difference(&truth).is_bounded())
        }
    }
}

fn term_value(t: &SetTerm, x: &[HFSet]) -> Result<HFSet> {
    match t {
        SetTerm::Name(n) => x.get(*n).cloned().ok_or(ForcingError::RankSideCondition {
            index: *n,
            rank: x.len(),
        }),
        SetTerm::Const(z) => Ok(z.clone()),
        SetTerm::Var(v) => Err(ForcingError::Parse {
            at: 0,
            msg: format!("unbound variable `{v}`"),
        }),
    }
}

/// Truth of the matrix at one tuple.
pub(crate) fn matrix_holds(phi: &SetFormula, x: &[HFSet], universe: &[HFSet]) -> Result<bool> {
    match phi {
        SetFormula::Eq(a, b) => Ok(term_value(a, x)? == term_value(b, x)?),
        SetFormula::Mem(a, b) => Ok(term_value(b, x)?.contains(&term_value(a, x)?)),
        SetFormula::St(_) => Err(ForcingError::StOutsidePointwise),
        SetFormula::Not(f) => Ok(!matrix_holds(f, x, universe)?),
        SetFormula::And(a, b) => {
            Ok(matrix_holds(a, x, universe)? && matrix_holds(b, x, universe)?)
        }
        SetFormula::Exists(v, f) => {
            for z in universe {
                let inst = f.subst_var(v, &SetTerm::Const(z.clone()));
                if matrix_holds(&inst, x, universe)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

fn term_rule(t: &SetTerm, tpl: &[RuleTerm]) -> Result<RuleTerm> {
    match t {
        SetTerm::Name(n) => tpl.get(*n).cloned().ok_or(ForcingError::RankSideCondition {
            index: *n,
            rank: tpl.len(),
        }),
        SetTerm::Const(z) => Ok(RuleTerm::Const(z.clone())),
        SetTerm::Var(v) => Err(ForcingError::Parse {
            at: 0,
            msg: format!("unbound variable `{v}`"),
        }),
    }
}

/// The exact set of indices where the matrix holds of the template's values.
pub(crate) fn truth_set(
    phi: &SetFormula,
    tpl: &[RuleTerm],
    universe: &[HFSet],
) -> Result<IndexSet> {
    match phi {
        SetFormula::Eq(a, b) => eq_solutions(&term_rule(a, tpl)?, &term_rule(b, tpl)?),
        SetFormula::Mem(a, b) => mem_solutions(&term_rule(a, tpl)?, &term_rule(b, tpl)?),
        SetFormula::St(_) => Err(ForcingError::StOutsidePointwise),
        SetFormula::Not(f) => Ok(truth_set(f, tpl, universe)?.complement()),
        SetFormula::And(a, b) => {
            Ok(truth_set(a, tpl, universe)?.intersect(&truth_set(b, tpl, universe)?))
        }
        SetFormula::Exists(v, f) => {
            let mut out = IndexSet::empty();
            for z in universe {
                let inst = f.subst_var(v, &SetTerm::Const(z.clone()));
                out = out.union(&truth_set(&inst, tpl, universe)?);
            }
            Ok(out)
        }
    }
}

fn decided(b: bool) -> IndexSet {
    if b {
        IndexSet::full()
    } else {
        IndexSet::empty()
    }
}

/// All i at least `threshold` (everything, when the threshold is nonpositive).
fn from_threshold(threshold: i64) -> IndexSet {
    if threshold <= 0 {
        IndexSet::full()
    } else {
        IndexSet::from_fn(threshold as usize, 1, |i| i >= threshold as usize)
    }
}

/// Exact solutions of a(i) = b(i).
///
/// The workhorse certificate: a term with a von Neumann occurrence of maximal
/// shift s has rank at least i + s, so it can equal a fixed set only below a
/// computable horizon — beyond it, growth separates the sides.
pub(crate) fn eq_solutions(a: &RuleTerm, b: &RuleTerm) -> Result<IndexSet> {
    if a == b {
        return Ok(IndexSet::full());
    }
    match (a.max_shift(), b.max_shift()) {
        (None, None) => Ok(decided(a.eval(0) == b.eval(0))),
        (None, Some(_)) => Ok(const_solutions(&a.eval(0), b)),
        (Some(_), None) => Ok(const_solutions(&b.eval(0), a)),
        (Some(_), Some(_)) => {
            if let (RuleTerm::VN(s1), RuleTerm::VN(s2)) = (a, b) {
                // Distinct shifts agree only while both clamp to zero.
                let cap = (-s1).min(-s2);
                if cap < 0 {
                    return Ok(IndexSet::empty());
                }
                let members: Vec<usize> = (0..=cap as usize).collect();
                return Ok(IndexSet::finite(&members));
            }
            Err(ForcingError::Uncertified {
                what: "equality between two index-dependent terms".to_string(),
            })
        }
    }
}

/// Exact solutions of t(i) = c for a term that does mention the index.
fn const_solutions(c: &HFSet, t: &RuleTerm) -> IndexSet {
    let horizon = t.solution_horizon(c.rank());
    let members: Vec<usize> = (0..horizon).filter(|&i| t.eval(i) == *c).collect();
    IndexSet::finite(&members)
}

/// Exact solutions of a(i) ∈ b(i).
pub(crate) fn mem_solutions(a: &RuleTerm, b: &RuleTerm) -> Result<IndexSet> {
    if b.max_shift().is_none() {
        // Fixed right-hand side: membership is a finite disjunction of
        // equalities against its elements.
        let z = b.eval(0);
        let mut out = IndexSet::empty();
        for w in z.elems() {
            out = out.union(&eq_solutions(a, &RuleTerm::Const(w.clone()))?);
        }
        return Ok(out);
    }
    match b {
        RuleTerm::Sing(t) => eq_solutions(a, t),
        RuleTerm::Pair(t, u) => Ok(eq_solutions(a, t)?.union(&eq_solutions(a, u)?)),
        RuleTerm::Union(t, u) => Ok(mem_solutions(a, t)?.union(&mem_solutions(a, u)?)),
        RuleTerm::VN(s2) => {
            // Members of vN(max(0, i+s2)) are the numerals below it.
            if a.max_shift().is_none() {
                let c = a.eval(0);
                return Ok(match c.to_numeral() {
                    Some(n) => from_threshold(n as i64 - s2 + 1),
                    None => IndexSet::empty(),
                });
            }
            if let RuleTerm::VN(s1) = a {
                // Beyond every clamp the comparison is a fixed shift race.
                let h0 = ((-s1).max(-s2).max(0) + 1) as usize;
                let eventually = s1 < s2;
                return Ok(IndexSet::from_fn(h0, 1, |i| {
                    if i < h0 {
                        let av = (i as i64 + s1).max(0);
                        let bv = (i as i64 + s2).max(0);
                        av < bv
                    } else {
                        eventually
                    }
                }));
            }
            Err(ForcingError::Uncertified {
                what: "membership of a composite term in a von Neumann column".to_string(),
            })
        }
        RuleTerm::Const(_) => unreachable!("handled by the index-independent arm"),
    }
}
