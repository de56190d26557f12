//! Rule-based normalization of quantifier prefixes into standard-block form.
//!
//! Seven named rules do all the work. Each trace entry records the rule, the
//! path of the subformula it rewrote, and the whole formula before and after,
//! so a trace can be replayed and checked step by step.
//!
//! The strategy extracts standard quantifiers to the front, deepest first.
//! Three moves push a standard quantifier up one level: commuting it out of
//! a connective operand (flipping its kind when leaving an antecedent),
//! exchanging it with a plain quantifier of the same direction, and
//! idealization across a plain quantifier of the opposite direction. The
//! idealization move is only sound when the quantifier's scope is free of
//! standard quantifiers; when it is not, the offending inner quantifier is
//! first surfaced and merged into the moving one (two standard quantifiers
//! of the same kind whose variables bound magnitudes of uniform polarity
//! collapse to one).

use super::{
    classify_delta_st, mag_polarity, transfer_collapse, DeltaStClass, Formula, FormulaError,
    MagPolarity, QuantKind, Sort, Term,
};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    ExpandInfinitesimalDef,
    CountableIdealization,
    BoundedQuantifierCollapse,
    StQuantifierCommute,
    StQuantifierMerge,
    PrefixExchange,
    TransferCollapse,
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleName::ExpandInfinitesimalDef => "expand-infinitesimal-def",
            RuleName::CountableIdealization => "countable-idealization",
            RuleName::BoundedQuantifierCollapse => "bounded-quantifier-collapse",
            RuleName::StQuantifierCommute => "st-quantifier-commute",
            RuleName::StQuantifierMerge => "st-quantifier-merge",
            RuleName::PrefixExchange => "prefix-exchange",
            RuleName::TransferCollapse => "transfer-collapse",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub rule: RuleName,
    pub path: Vec<usize>,
    pub before: Formula,
    pub after: Formula,
}

pub type RewriteTrace = Vec<TraceEntry>;

const STEP_LIMIT: u32 = 10_000;

fn fresh_from(pool: &[&str], used: &BTreeSet<String>) -> String {
    for round in 0u32.. {
        for base in pool {
            let name = if round == 0 { (*base).to_string() } else { format!("{base}{}", round + 1) };
            if !used.contains(&name) {
                return name;
            }
        }
    }
    unreachable!()
}

fn fresh_guard(used: &BTreeSet<String>) -> String {
    fresh_from(&["m", "n", "p", "q", "r", "s"], used)
}

fn fresh_bound(used: &BTreeSet<String>) -> String {
    fresh_from(&["l"], used)
}

fn internal(detail: impl Into<String>) -> FormulaError {
    FormulaError::Internal { detail: detail.into() }
}

// ---- local rule transforms -------------------------------------------------

fn expand_at(node: &Formula, used: &BTreeSet<String>) -> Option<Formula> {
    match node {
        Formula::Quant(QuantKind::AllIn, v, Sort::Real, body) => {
            let w = fresh_guard(used);
            let guard = Formula::quant(
                QuantKind::AllSt,
                &w,
                Sort::PosInt,
                Formula::Mag(Term::Var(v.clone()), w.clone()),
            );
            Some(Formula::Quant(
                QuantKind::All,
                v.clone(),
                Sort::Real,
                Box::new(Formula::imp(guard, (**body).clone())),
            ))
        }
        Formula::Quant(QuantKind::ExIn, v, Sort::Real, body) => {
            let w = fresh_guard(used);
            let guard = Formula::quant(
                QuantKind::AllSt,
                &w,
                Sort::PosInt,
                Formula::Mag(Term::Var(v.clone()), w.clone()),
            );
            Some(Formula::Quant(
                QuantKind::Ex,
                v.clone(),
                Sort::Real,
                Box::new(Formula::and(guard, (**body).clone())),
            ))
        }
        _ => None,
    }
}

/// Moves a standard quantifier out of operand `child_idx` of a connective.
/// Leaving the antecedent of an implication flips its kind.
fn commute_out_at(node: &Formula, child_idx: usize) -> Option<Formula> {
    let peel = |f: &Formula| -> Option<(QuantKind, String, Sort, Formula)> {
        match f {
            Formula::Quant(k, v, s, body) if k.is_st() => {
                Some((*k, v.clone(), *s, (**body).clone()))
            }
            _ => None,
        }
    };
    match (node, child_idx) {
        (Formula::And(a, b), 0) => {
            let (k, v, s, beta) = peel(a)?;
            if b.free_vars().contains(&v) {
                return None;
            }
            Some(Formula::Quant(k, v, s, Box::new(Formula::and(beta, (**b).clone()))))
        }
        (Formula::And(a, b), 1) => {
            let (k, v, s, beta) = peel(b)?;
            if a.free_vars().contains(&v) {
                return None;
            }
            Some(Formula::Quant(k, v, s, Box::new(Formula::and((**a).clone(), beta))))
        }
        (Formula::Or(a, b), 0) => {
            let (k, v, s, beta) = peel(a)?;
            if b.free_vars().contains(&v) {
                return None;
            }
            Some(Formula::Quant(k, v, s, Box::new(Formula::or(beta, (**b).clone()))))
        }
        (Formula::Or(a, b), 1) => {
            let (k, v, s, beta) = peel(b)?;
            if a.free_vars().contains(&v) {
                return None;
            }
            Some(Formula::Quant(k, v, s, Box::new(Formula::or((**a).clone(), beta))))
        }
        (Formula::Imp(a, b), 0) => {
            let (k, v, s, beta) = peel(a)?;
            if b.free_vars().contains(&v) {
                return None;
            }
            Some(Formula::Quant(k.flip_st(), v, s, Box::new(Formula::imp(beta, (**b).clone()))))
        }
        (Formula::Imp(a, b), 1) => {
            let (k, v, s, beta) = peel(b)?;
            if a.free_vars().contains(&v) {
                return None;
            }
            Some(Formula::Quant(k, v, s, Box::new(Formula::imp((**a).clone(), beta))))
        }
        _ => None,
    }
}

/// Pushes a standard quantifier into one operand of the connective directly
/// below it — the inverse of [`commute_out_at`]. Only used for replay.
fn commute_in_candidates(node: &Formula) -> Vec<Formula> {
    let mut out = Vec::new();
    if let Formula::Quant(k, v, s, body) = node {
        if !k.is_st() {
            return out;
        }
        match &**body {
            Formula::And(a, b) => {
                if !b.free_vars().contains(v) {
                    out.push(Formula::and(
                        Formula::Quant(*k, v.clone(), *s, a.clone()),
                        (**b).clone(),
                    ));
                }
                if !a.free_vars().contains(v) {
                    out.push(Formula::and(
                        (**a).clone(),
                        Formula::Quant(*k, v.clone(), *s, b.clone()),
                    ));
                }
            }
            Formula::Or(a, b) => {
                if !b.free_vars().contains(v) {
                    out.push(Formula::or(
                        Formula::Quant(*k, v.clone(), *s, a.clone()),
                        (**b).clone(),
                    ));
                }
                if !a.free_vars().contains(v) {
                    out.push(Formula::or(
                        (**a).clone(),
                        Formula::Quant(*k, v.clone(), *s, b.clone()),
                    ));
                }
            }
            Formula::Imp(a, b) => {
                if !b.free_vars().contains(v) {
                    out.push(Formula::imp(
                        Formula::Quant(k.flip_st(), v.clone(), *s, a.clone()),
                        (**b).clone(),
                    ));
                }
                if !a.free_vars().contains(v) {
                    out.push(Formula::imp(
                        (**a).clone(),
                        Formula::Quant(*k, v.clone(), *s, b.clone()),
                    ));
                }
            }
            _ => {}
        }
    }
    out
}

fn exchange_at(node: &Formula) -> Option<Formula> {
    if let Formula::Quant(k1, v1, s1, body) = node {
        if let Formula::Quant(k2, v2, s2, inner) = &**body {
            if k1.dir() == k2.dir() && !k1.is_in() && !k2.is_in() {
                return Some(Formula::Quant(
                    *k2,
                    v2.clone(),
                    *s2,
                    Box::new(Formula::Quant(*k1, v1.clone(), *s1, inner.clone())),
                ));
            }
        }
    }
    None
}

/// Moves a standard quantifier across a plain quantifier of the opposite
/// direction, introducing a bounded plain quantifier. Sound only when the
/// scope contains no standard quantifier, which is checked here.
fn ci_at(node: &Formula, used: &BTreeSet<String>) -> Option<Formula> {
    if let Formula::Quant(pk, y, sy, body) = node {
        if let Formula::Quant(qk, v, Sort::PosInt, chi) = &**body {
            if !chi.is_st_free() {
                return None;
            }
            let l = fresh_bound(used);
            let chi_l = chi.rename_free(v, &l);
            match (pk, qk) {
                (QuantKind::Ex, QuantKind::AllSt) => {
                    return Some(Formula::Quant(
                        QuantKind::AllSt,
                        v.clone(),
                        Sort::PosInt,
                        Box::new(Formula::Quant(
                            QuantKind::Ex,
                            y.clone(),
                            *sy,
                            Box::new(Formula::BoundedAll(l, v.clone(), Box::new(chi_l))),
                        )),
                    ));
                }
                (QuantKind::All, QuantKind::ExSt) => {
                    return Some(Formula::Quant(
                        QuantKind::ExSt,
                        v.clone(),
                        Sort::PosInt,
                        Box::new(Formula::Quant(
                            QuantKind::All,
                            y.clone(),
                            *sy,
                            Box::new(Formula::BoundedEx(l, v.clone(), Box::new(chi_l))),
                        )),
                    ));
                }
                _ => return None,
            }
        }
    }
    None
}

/// `A l <= m. body(l)` collapses to `body(m)` when `l` bounds magnitudes of
/// uniformly positive polarity (the instance at `m` is then the strongest);
/// dually for the bounded existential with negative polarity.
fn collapse_at(node: &Formula) -> Option<Formula> {
    match node {
        Formula::BoundedAll(l, m, body) => match mag_polarity(body, l) {
            MagPolarity::AllPositive | MagPolarity::Absent => Some(body.rename_free(l, m)),
            _ => None,
        },
        Formula::BoundedEx(l, m, body) => match mag_polarity(body, l) {
            MagPolarity::AllNegative | MagPolarity::Absent => Some(body.rename_free(l, m)),
            _ => None,
        },
        _ => None,
    }
}

/// Two adjacent standard quantifiers of the same kind merge into one when
/// both variables bound magnitudes of the appropriate uniform polarity
/// (taking the larger of two standard witnesses justifies the collapse).
fn merge_at(node: &Formula) -> Option<Formula> {
    if let Formula::Quant(k1, v, Sort::PosInt, body) = node {
        if let Formula::Quant(k2, w, Sort::PosInt, psi) = &**body {
            if k1 != k2 || !k1.is_st() {
                return None;
            }
            let want = match k1 {
                QuantKind::AllSt => MagPolarity::AllPositive,
                QuantKind::ExSt => MagPolarity::AllNegative,
                _ => return None,
            };
            for var in [v, w] {
                match mag_polarity(psi, var) {
                    MagPolarity::Absent => {}
                    p if p == want => {}
                    _ => return None,
                }
            }
            return Some(Formula::Quant(
                *k1,
                v.clone(),
                Sort::PosInt,
                Box::new(psi.rename_free(w, v)),
            ));
        }
    }
    None
}

/// All results the named rule can produce at `path` (the engine picks one
/// deterministically; replay checks membership).
pub fn apply_rule_at(
    rule: RuleName,
    path: &[usize],
    f: &Formula,
) -> Result<Vec<Formula>, FormulaError> {
    let sub = f
        .get_at(path)
        .ok_or_else(|| internal(format!("path {path:?} does not exist")))?;
    let used = f.all_var_names();
    let mut locals: Vec<Formula> = Vec::new();
    match rule {
        RuleName::ExpandInfinitesimalDef => locals.extend(expand_at(sub, &used)),
        RuleName::StQuantifierCommute => {
            for idx in 0..2 {
                locals.extend(commute_out_at(sub, idx));
            }
            locals.extend(commute_in_candidates(sub));
        }
        RuleName::PrefixExchange => locals.extend(exchange_at(sub)),
        RuleName::CountableIdealization => locals.extend(ci_at(sub, &used)),
        RuleName::BoundedQuantifierCollapse => locals.extend(collapse_at(sub)),
        RuleName::StQuantifierMerge => locals.extend(merge_at(sub)),
        RuleName::TransferCollapse => {
            if path.is_empty() {
                if let Ok(g) = transfer_collapse(f) {
                    return Ok(vec![g]);
                }
            }
        }
    }
    if locals.is_empty() {
        return Err(FormulaError::RuleNotApplicable {
            rule: rule.to_string(),
            detail: format!("no match at path {path:?}"),
        });
    }
    Ok(locals.into_iter().map(|o| f.replace_at(path, o)).collect())
}

/// Checks that consecutive entries chain and that each recorded step is a
/// genuine application of its rule.
pub fn replay(trace: &[TraceEntry]) -> Result<(), FormulaError> {
    for (i, e) in trace.iter().enumerate() {
        if i > 0 && trace[i - 1].after != e.before {
            return Err(FormulaError::TraceMismatch {
                step: i,
                detail: "before-formula does not chain from the previous step".to_string(),
            });
        }
        let cands = apply_rule_at(e.rule, &e.path, &e.before).map_err(|err| {
            FormulaError::TraceMismatch { step: i, detail: err.to_string() }
        })?;
        if !cands.contains(&e.after) {
            return Err(FormulaError::TraceMismatch {
                step: i,
                detail: format!("rule {} at {:?} does not yield the recorded result", e.rule, e.path),
            });
        }
    }
    Ok(())
}

// ---- shape validation -------------------------------------------------------

fn validate_shape(f: &Formula) -> Result<(), FormulaError> {
    let mut cur = f;
    while let Formula::Quant(k, _, _, body) = cur {
        if k.is_st() {
            cur = body;
        } else {
            break;
        }
    }
    let mut entries: Vec<(QuantKind, String)> = Vec::new();
    while let Formula::Quant(k, v, s, body) = cur {
        if k.is_st() {
            return Err(FormulaError::UnsupportedShape {
                quantifier: format!("{k} {v}"),
                detail: "standard quantifier below a non-standard one in the prefix".to_string(),
            });
        }
        if k.is_in() && *s != Sort::Real {
            return Err(FormulaError::UnsupportedShape {
                quantifier: format!("{k} {v}"),
                detail: "infinitesimal quantifiers must bind real variables".to_string(),
            });
        }
        entries.push((*k, v.clone()));
        cur = body;
    }
    if !cur.is_in_formula() {
        let (k, v) = super::first_marked_quantifier(cur)
            .expect("non-in-formula matrix has a marked quantifier");
        return Err(FormulaError::UnsupportedShape {
            quantifier: format!("{k} {v}"),
            detail: "marked quantifier inside the matrix".to_string(),
        });
    }
    for i in 0..entries.len() {
        let dirs: Vec<_> = entries[..=i].iter().map(|(k, _)| k.dir()).collect();
        let transitions = dirs.windows(2).filter(|w| w[0] != w[1]).count();
        let in_dirs: Vec<_> = entries[..=i]
            .iter()
            .filter(|(k, _)| k.is_in())
            .map(|(k, _)| k.dir())
            .collect();
        let blocks_ok = transitions <= 1;
        let same_kind_ok = in_dirs.windows(2).all(|w| w[0] == w[1]);
        if !(blocks_ok || same_kind_ok) {
            let (k, v) = &entries[i];
            return Err(FormulaError::UnsupportedShape {
                quantifier: format!("{k} {v}"),
                detail: "prefix is neither a two-block arrangement nor single-kind in its \
                         infinitesimal quantifiers"
                    .to_string(),
            });
        }
    }
    Ok(())
}

// ---- the normalization engine ------------------------------------------------

fn bump(guard: &mut u32) -> Result<(), FormulaError> {
    *guard += 1;
    if *guard > STEP_LIMIT {
        Err(internal("rewrite step budget exhausted"))
    } else {
        Ok(())
    }
}

fn record(
    cur: &mut Formula,
    trace: &mut RewriteTrace,
    rule: RuleName,
    path: &[usize],
    new_sub: Formula,
) {
    let before = cur.clone();
    *cur = cur.replace_at(path, new_sub);
    trace.push(TraceEntry { rule, path: path.to_vec(), before, after: cur.clone() });
}

fn find_first_in_quant(f: &Formula) -> Option<Vec<usize>> {
    fn go(f: &Formula, path: &mut Vec<usize>) -> Option<Vec<usize>> {
        if let Formula::Quant(k, _, _, _) = f {
            if k.is_in() {
                return Some(path.clone());
            }
        }
        for (i, c) in f.children().into_iter().enumerate() {
            path.push(i);
            if let Some(hit) = go(c, path) {
                return Some(hit);
            }
            path.pop();
        }
        None
    }
    go(f, &mut Vec::new())
}

fn st_quant_paths(f: &Formula) -> Vec<Vec<usize>> {
    fn go(f: &Formula, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if let Formula::Quant(k, _, _, _) = f {
            if k.is_st() {
                out.push(path.clone());
            }
        }
        for (i, c) in f.children().into_iter().enumerate() {
            path.push(i);
            go(c, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

fn shallowest_st_path(f: &Formula) -> Option<Vec<usize>> {
    st_quant_paths(f).into_iter().min_by_key(|p| (p.len(), p.clone()))
}

fn leading_chain_len(f: &Formula) -> usize {
    let mut cur = f;
    let mut n = 0;
    while let Formula::Quant(k, _, _, body) = cur {
        if k.is_st() {
            n += 1;
            cur = body;
        } else {
            break;
        }
    }
    n
}

fn kind_at(cur: &Formula, p: &[usize]) -> Result<QuantKind, FormulaError> {
    match cur.get_at(p) {
        Some(Formula::Quant(k, _, _, _)) => Ok(*k),
        _ => Err(internal("expected a quantifier at the tracked path")),
    }
}

/// Moves the standard quantifier at `p` upward until it reaches the leading
/// block (`stop_parent == None`) or sits directly below `stop_parent`.
fn extract(
    cur: &mut Formula,
    trace: &mut RewriteTrace,
    mut p: Vec<usize>,
    stop_parent: Option<Vec<usize>>,
    guard: &mut u32,
) -> Result<(), FormulaError> {
    loop {
        bump(guard)?;
        if p.is_empty() {
            return Ok(());
        }
        let parent_path = p[..p.len() - 1].to_vec();
        if stop_parent.as_deref() == Some(parent_path.as_slice()) {
            return Ok(());
        }
        if stop_parent.is_none()
            && p.iter().all(|&i| i == 0)
            && leading_chain_len(cur) >= p.len()
        {
            return Ok(());
        }
        let parent = cur
            .get_at(&parent_path)
            .cloned()
            .ok_or_else(|| internal("tracked path escaped the formula"))?;
        let child_idx = *p.last().unwrap();
        match &parent {
            Formula::And(..) | Formula::Or(..) | Formula::Imp(..) => {
                let new_parent = commute_out_at(&parent, child_idx)
                    .ok_or_else(|| internal("commute move blocked by a free variable"))?;
                record(cur, trace, RuleName::StQuantifierCommute, &parent_path, new_parent);
                p = parent_path;
            }
            Formula::Quant(pk, pv, _, _) if pk.is_plain() => {
                let qk = kind_at(cur, &p)?;
                if pk.dir() == qk.dir() {
                    let new_parent = exchange_at(&parent)
                        .ok_or_else(|| internal("exchange move failed to match"))?;
                    record(cur, trace, RuleName::PrefixExchange, &parent_path, new_parent);
                    p = parent_path;
                } else {
                    let q_body = cur
                        .get_at(&p)
                        .and_then(|q| q.children().first().copied().cloned())
                        .ok_or_else(|| internal("quantifier without a body"))?;
                    if q_body.is_st_free() {
                        let used = cur.all_var_names();
                        let new_parent = ci_at(&parent, &used)
                            .ok_or_else(|| internal("idealization move failed to match"))?;
                        record(cur, trace, RuleName::CountableIdealization, &parent_path, new_parent);
                        let bpath: Vec<usize> =
                            parent_path.iter().copied().chain([0, 0]).collect();
                        if let Some(bnode) = cur.get_at(&bpath) {
                            if let Some(collapsed) = collapse_at(bnode) {
                                record(
                                    cur,
                                    trace,
                                    RuleName::BoundedQuantifierCollapse,
                                    &bpath,
                                    collapsed,
                                );
                            }
                        }
                        p = parent_path;
                    } else {
                        // surface the blocking inner standard quantifier and
                        // merge it into the moving one
                        let body_path: Vec<usize> = p.iter().copied().chain([0]).collect();
                        let body = cur.get_at(&body_path).expect("body path exists").clone();
                        let rel = shallowest_st_path(&body)
                            .ok_or_else(|| internal("blocked scope without a blocker"))?;
                        let bpath: Vec<usize> =
                            body_path.iter().copied().chain(rel).collect();
                        extract(cur, trace, bpath, Some(p.clone()), guard)?;
                        let qnode = cur.get_at(&p).expect("tracked path exists").clone();
                        let merged = merge_at(&qnode).ok_or_else(|| {
                            FormulaError::UnsupportedShape {
                                quantifier: format!("{pk} {pv}"),
                                detail: "adjacent standard quantifiers of opposite kinds cannot \
                                         be ordered"
                                    .to_string(),
                            }
                        })?;
                        record(cur, trace, RuleName::StQuantifierMerge, &p, merged);
                    }
                }
            }
            Formula::Quant(pk, pv, _, _) if pk.is_st() => {
                let qk = kind_at(cur, &p)?;
                if *pk == qk {
                    let merged = merge_at(&parent).ok_or_else(|| {
                        internal("same-kind merge blocked by mixed magnitude polarity")
                    })?;
                    record(cur, trace, RuleName::StQuantifierMerge, &parent_path, merged);
                    p = parent_path;
                } else {
                    return Err(FormulaError::UnsupportedShape {
                        quantifier: format!("{pk} {pv}"),
                        detail: "opposite standard quantifiers became adjacent".to_string(),
                    });
                }
            }
            _ => return Err(internal("unexpected parent while moving a quantifier")),
        }
    }
}

/// Normalizes a supported prefix into standard-block form, returning the
/// result together with a replayable trace.
pub fn rewrite_to_delta_st(f: &Formula) -> Result<(Formula, RewriteTrace), FormulaError> {
    validate_shape(f)?;
    let mut cur = f.clone();
    let mut trace: RewriteTrace = Vec::new();
    let mut guard: u32 = 0;

    while let Some(path) = find_first_in_quant(&cur) {
        bump(&mut guard)?;
        let used = cur.all_var_names();
        let sub = cur.get_at(&path).expect("path just found");
        let new_sub =
            expand_at(sub, &used).ok_or_else(|| internal("expansion failed to match"))?;
        record(&mut cur, &mut trace, RuleName::ExpandInfinitesimalDef, &path, new_sub);
    }

    loop {
        bump(&mut guard)?;
        // quantifiers inside the leading block sit at all-zero paths shorter
        // than the block length; everything else still needs extraction
        let chain = leading_chain_len(&cur);
        let target = st_quant_paths(&cur)
            .into_iter()
            .filter(|p| !(p.iter().all(|&i| i == 0) && p.len() < chain))
            .max_by_key(|p| (p.len(), p.clone()));
        let Some(p) = target else { break };
        extract(&mut cur, &mut trace, p, None, &mut guard)?;
    }

    match classify_delta_st(&cur) {
        DeltaStClass::DeltaSt { .. } => Ok((cur, trace)),
        DeltaStClass::NotDeltaSt { reason } => {
            Err(internal(format!("normalization finished off-form: {reason}")))
        }
    }
}

/// Normalizes and then erases the standard marks on the leading block.
pub fn rewrite_and_collapse(f: &Formula) -> Result<(Formula, RewriteTrace), FormulaError> {
    let (g, mut trace) = rewrite_to_delta_st(f)?;
    let collapsed = transfer_collapse(&g)?;
    if collapsed != g {
        trace.push(TraceEntry {
            rule: RuleName::TransferCollapse,
            path: vec![],
            before: g,
            after: collapsed.clone(),
        });
    }
    Ok((collapsed, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::alpha_equal;
    use crate::formula::parse::parse_formula;

    fn rewrite(s: &str) -> (Formula, RewriteTrace) {
        rewrite_to_delta_st(&parse_formula(s).unwrap()).unwrap()
    }

    #[test]
    fn forward_shape_matches_golden() {
        let (out, trace) = rewrite("Ain h. Ein k. P(h, k)");
        let golden = parse_formula(
            "Ast m. Est n. A x. (mag(x) < 1/n -> E y. (mag(y) < 1/m & P(x, y)))",
        )
        .unwrap();
        assert!(alpha_equal(&out, &golden), "got {out}");
        replay(&trace).unwrap();
        assert!(matches!(
            classify_delta_st(&out),
            DeltaStClass::DeltaSt { prefix_len: 2 }
        ));
    }

    #[test]
    fn dual_shape_matches_golden() {
        let (out, trace) = rewrite("Ein h. Ain k. P(h, k)");
        let golden = parse_formula(
            "Est m. Ast n. E x. (mag(x) < 1/n & A y. (mag(y) < 1/m -> P(x, y)))",
        )
        .unwrap();
        assert!(alpha_equal(&out, &golden), "got {out}");
        replay(&trace).unwrap();
    }

    #[test]
    fn same_kind_with_interleaved_plain() {
        let (out, trace) = rewrite("Ein h. A y. Ein k. P(h, k, x, y)");
        replay(&trace).unwrap();
        assert!(matches!(
            classify_delta_st(&out),
            DeltaStClass::DeltaSt { prefix_len: 1 }
        ));
        // one guard bound serves both witnesses after the merge
        let golden = parse_formula(
            "Ast n. E h. (mag(h) < 1/n & A y. E k. (mag(k) < 1/n & P(h, k, x, y)))",
        )
        .unwrap();
        assert!(alpha_equal(&out, &golden), "got {out}");
    }

    #[test]
    fn adjacent_same_kind_merges() {
        let (out, trace) = rewrite("Ein h. Ein k. P(h, k)");
        replay(&trace).unwrap();
        assert!(matches!(
            classify_delta_st(&out),
            DeltaStClass::DeltaSt { prefix_len: 1 }
        ));
        assert!(trace.iter().any(|e| e.rule == RuleName::StQuantifierMerge));
    }

    #[test]
    fn universal_pair_with_trailing_plain() {
        let (out, trace) = rewrite("Ain h. Ain k. A y. P(h, k, y)");
        replay(&trace).unwrap();
        assert!(matches!(classify_delta_st(&out), DeltaStClass::DeltaSt { .. }));
    }

    #[test]
    fn mixed_blocks() {
        let (out, trace) = rewrite("A u. Ain h. E v. Ein k. P(u, h, v, k)");
        replay(&trace).unwrap();
        assert!(matches!(classify_delta_st(&out), DeltaStClass::DeltaSt { .. }));
    }

    #[test]
    fn plain_only_is_a_no_op() {
        let f = parse_formula("A x. E y. P(x, y)").unwrap();
        let (out, trace) = rewrite_to_delta_st(&f).unwrap();
        assert_eq!(out, f);
        assert!(trace.is_empty());
    }

    #[test]
    fn already_block_is_a_no_op() {
        let f = parse_formula("Ast m. A x. mag(x) < 1/m").unwrap();
        let (out, trace) = rewrite_to_delta_st(&f).unwrap();
        assert_eq!(out, f);
        assert!(trace.is_empty());
    }

    #[test]
    fn unsupported_shape_names_the_offender() {
        let err = rewrite_to_delta_st(&parse_formula("Ain h. Ein k. Ain j. P(h, k, j)").unwrap())
            .unwrap_err();
        match err {
            FormulaError::UnsupportedShape { quantifier, .. } => {
                assert_eq!(quantifier, "Ain j");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn trace_chains_and_tampering_is_detected() {
        let (_, mut trace) = rewrite("Ain h. Ein k. P(h, k)");
        assert!(trace.len() >= 5);
        for w in trace.windows(2) {
            assert_eq!(w[0].after, w[1].before);
        }
        // tamper with one step
        trace[2].after = parse_formula("P(a, b)").unwrap();
        assert!(matches!(replay(&trace), Err(FormulaError::TraceMismatch { .. })));
    }

    #[test]
    fn collapse_pipeline_erases_marks() {
        let (out, trace) =
            rewrite_and_collapse(&parse_formula("Ain h. Ein k. P(h, k)").unwrap()).unwrap();
        replay(&trace).unwrap();
        assert_eq!(trace.last().unwrap().rule, RuleName::TransferCollapse);
        let golden = parse_formula(
            "A m:posint. E n:posint. A x. (mag(x) < 1/n -> E y. (mag(y) < 1/m & P(x, y)))",
        )
        .unwrap();
        assert!(alpha_equal(&out, &golden), "got {out}");
    }
}
