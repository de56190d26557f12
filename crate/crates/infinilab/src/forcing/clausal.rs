//! Clause-by-clause forcing evaluation with a tri-state verdict.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::fiber::{Condition, Fiber, FiberRep, Tuple, ValueSet};
use super::formula::{SetFormula, SetTerm};
use super::hfset::HFSet;
use super::index_set::{lcm, IndexSet};
use super::los::truth_set;
use super::{ForcingError, Result};

/// Three-valued answer to "does this condition force the formula?".
///
/// `Forced` certifies the condition forces it; `Refuted` certifies the
/// condition forces its negation (equivalently: no extension whatsoever forces
/// it); `Unknown` means neither certificate was found — in particular when an
/// extension forcing the formula exists but the condition itself does not
/// force it, the question is genuinely undecided at this condition.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClausalVerdict {
    Forced,
    Refuted,
    Unknown,
}

impl fmt::Display for ClausalVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClausalVerdict::Forced => write!(f, "forced"),
            ClausalVerdict::Refuted => write!(f, "refuted"),
            ClausalVerdict::Unknown => write!(f, "unknown"),
        }
    }
}

/// Size caps for the enumerated condition space.
#[derive(Clone, Debug, Serialize)]
pub struct SpaceCaps {
    /// Tuple entries are drawn from the sets of rank at most this.
    pub value_pool_rank: usize,
    /// Largest fiber rank enumerated.
    pub max_rank: usize,
    /// Most tuples per fiber value at ranks 0 and 1.
    pub cell_cap_rank1: usize,
    /// Most tuples per fiber value at rank 2 and above.
    pub cell_cap_rank2: usize,
    pub fiber_prelude_max: usize,
    pub fiber_period_max: usize,
    pub index_prelude_max: usize,
    pub index_period_max: usize,
}

impl Default for SpaceCaps {
    fn default() -> Self {
        SpaceCaps {
            value_pool_rank: 1,
            max_rank: 2,
            cell_cap_rank1: 2,
            cell_cap_rank2: 1,
            fiber_prelude_max: 2,
            fiber_period_max: 2,
            index_prelude_max: 2,
            index_period_max: 2,
        }
    }
}

impl SpaceCaps {
    fn cell_cap(&self, rank: usize) -> usize {
        if rank <= 1 {
            self.cell_cap_rank1
        } else {
            self.cell_cap_rank2
        }
    }
}

impl fmt::Display for SpaceCaps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "value pool rank <= {}, fiber rank <= {}, tuples per value <= {} (<= {} from rank 2), \
             fiber prelude <= {}, fiber period <= {}, index prelude <= {}, index period <= {}",
            self.value_pool_rank,
            self.max_rank,
            self.cell_cap_rank1,
            self.cell_cap_rank2,
            self.fiber_prelude_max,
            self.fiber_period_max,
            self.index_prelude_max,
            self.index_period_max
        )
    }
}

fn bit_patterns(len: usize) -> Vec<Vec<bool>> {
    (0..1usize << len)
        .map(|mask| (0..len).map(|j| mask >> j & 1 == 1).collect())
        .collect()
}

/// Every choice of `len` cells from the pool, in pool order.
fn cell_rows(pool: &[ValueSet], len: usize) -> Vec<Vec<ValueSet>> {
    let mut rows: Vec<Vec<ValueSet>> = vec![vec![]];
    for _ in 0..len {
        rows = rows
            .into_iter()
            .flat_map(|row| {
                pool.iter().map(move |cell| {
                    let mut r = row.clone();
                    r.push(cell.clone());
                    r
                })
            })
            .collect();
    }
    rows
}

/// The deterministic exhaustive space of conditions under the caps: every
/// unbounded index set and every tabular fiber whose representation fits,
/// duplicates removed after normalization, sorted by their text form.
pub fn enumerate_conditions(caps: &SpaceCaps) -> Vec<Condition> {
    let mut index_sets: Vec<IndexSet> = Vec::new();
    let mut seen = BTreeSet::new();
    for pl in 0..=caps.index_prelude_max {
        for prelude in bit_patterns(pl) {
            for dl in 1..=caps.index_period_max {
                for period in bit_patterns(dl) {
                    let Ok(s) = IndexSet::new(prelude.clone(), period) else {
                        continue;
                    };
                    if s.is_unbounded() && seen.insert(s.to_string()) {
                        index_sets.push(s);
                    }
                }
            }
        }
    }
    index_sets.sort_by_key(|s| s.to_string());

    let pool_elems = HFSet::universe(caps.value_pool_rank);
    let mut fibers: Vec<Fiber> = Vec::new();
    let mut seen_fibers = BTreeSet::new();
    for rank in 0..=caps.max_rank {
        // All tuples over the pool, then all nonempty tuple sets within cap.
        let mut tuples: Vec<Tuple> = vec![vec![]];
        for _ in 0..rank {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    pool_elems.iter().map(move |z| {
                        let mut t = t.clone();
                        t.push(z.clone());
                        t
                    })
                })
                .collect();
        }
        let cap = caps.cell_cap(rank);
        let mut cells: Vec<ValueSet> = Vec::new();
        for mask in 1u32..1 << tuples.len() {
            if (mask.count_ones() as usize) <= cap {
                let chosen: Vec<Tuple> = tuples
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| mask >> j & 1 == 1)
                    .map(|(_, t)| t.clone())
                    .collect();
                cells.push(ValueSet::new(chosen));
            }
        }
        cells.sort_by_key(|c| c.to_string());
        cells.dedup();
        for pl in 0..=caps.fiber_prelude_max {
            for prelude in cell_rows(&cells, pl) {
                for dl in 1..=caps.fiber_period_max {
                    for period in cell_rows(&cells, dl) {
                        let Ok(q) = Fiber::tabular(rank, prelude.clone(), period) else {
                            continue;
                        };
                        if seen_fibers.insert(q.to_string()) {
                            fibers.push(q);
                        }
                    }
                }
            }
        }
    }
    fibers.sort_by_key(|q| (q.rank(), q.to_string()));

    let mut out = Vec::with_capacity(index_sets.len() * fibers.len());
    for q in &fibers {
        for p in &index_sets {
            out.push(Condition {
                p: p.clone(),
                q: q.clone(),
            });
        }
    }
    out
}

/// Evaluates forcing clause by clause.
///
/// Atomic formulas and standardness atoms are decided exactly (the almost-all
/// scans are finite); negations consult the exact does-any-extension-force
/// characterization where one exists and otherwise fall back to searching
/// `space`, so a `Forced` negation from the fallback is sound relative to the
/// searched space. Existentials certify through a name witness at the
/// condition itself, then through the space.
pub fn forces_clausal(
    c: &Condition,
    phi: &SetFormula,
    space: &[Condition],
    r: usize,
) -> Result<ClausalVerdict> {
    if let Some(n) = phi.names_max() {
        if n >= c.rank() {
            return Err(ForcingError::RankSideCondition {
                index: n,
                rank: c.rank(),
            });
        }
    }
    if let Some(v) = phi.free_vars().into_iter().next() {
        return Err(ForcingError::Parse {
            at: 0,
            msg: format!("free variable `{v}` in formula"),
        });
    }
    let universe = HFSet::universe(r);
    verdict(c, phi, space, &universe)
}

fn verdict(
    c: &Condition,
    phi: &SetFormula,
    space: &[Condition],
    universe: &[HFSet],
) -> Result<ClausalVerdict> {
    match phi {
        SetFormula::Eq(..) | SetFormula::Mem(..) => {
            if atomic_forced(c, phi)? {
                Ok(ClausalVerdict::Forced)
            } else if atomic_extension_exists(c, phi)? {
                Ok(ClausalVerdict::Unknown)
            } else {
                Ok(ClausalVerdict::Refuted)
            }
        }
        SetFormula::St(SetTerm::Const(_)) => Ok(ClausalVerdict::Forced),
        SetFormula::St(SetTerm::Name(n)) => {
            if st_forced(c, *n)? {
                Ok(ClausalVerdict::Forced)
            } else if st_extension_exists(c, *n)? {
                Ok(ClausalVerdict::Unknown)
            } else {
                Ok(ClausalVerdict::Refuted)
            }
        }
        SetFormula::St(SetTerm::Var(v)) => Err(ForcingError::Parse {
            at: 0,
            msg: format!("unbound variable `{v}`"),
        }),
        SetFormula::Not(f) => {
            if verdict(c, f, space, universe)? == ClausalVerdict::Forced {
                return Ok(ClausalVerdict::Refuted);
            }
            if extension_exists(c, f, space, universe)? {
                Ok(ClausalVerdict::Unknown)
            } else {
                Ok(ClausalVerdict::Forced)
            }
        }
        SetFormula::And(a, b) => {
            let va = verdict(c, a, space, universe)?;
            let vb = verdict(c, b, space, universe)?;
            if va == ClausalVerdict::Forced && vb == ClausalVerdict::Forced {
                Ok(ClausalVerdict::Forced)
            } else if va == ClausalVerdict::Refuted || vb == ClausalVerdict::Refuted {
                // A conjunct no extension can force blocks the conjunction.
                Ok(ClausalVerdict::Refuted)
            } else {
                Ok(ClausalVerdict::Unknown)
            }
        }
        SetFormula::Exists(v, f) => {
            for m in 0..c.rank() {
                let inst = f.subst_var(v, &SetTerm::Name(m));
                if verdict(c, &inst, space, universe)? == ClausalVerdict::Forced {
                    // Forcing is monotone, so this witness survives under
                    // every extension.
                    return Ok(ClausalVerdict::Forced);
                }
            }
            if space_certifies_exists(c, v, f, space, universe)? {
                Ok(ClausalVerdict::Forced)
            } else {
                Ok(ClausalVerdict::Unknown)
            }
        }
    }
}

/// Does some extension of `c` (in the full ordering, not merely the space)
/// force `f`? Exact for atomic and standardness formulas; otherwise searches
/// the space.
fn extension_exists(
    c: &Condition,
    f: &SetFormula,
    space: &[Condition],
    universe: &[HFSet],
) -> Result<bool> {
    match f {
        SetFormula::Eq(..) | SetFormula::Mem(..) => atomic_extension_exists(c, f),
        // Every condition forces st of a constant, starting with c itself.
        SetFormula::St(SetTerm::Const(_)) => Ok(true),
        SetFormula::St(SetTerm::Name(n)) => st_extension_exists(c, *n),
        _ => {
            for e in space {
                if e.extends(c) == Ok(true)
                    && verdict(e, f, space, universe)? == ClausalVerdict::Forced
                {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// The bounded search for the existential clause: every enumerated extension
/// of `c` (and `c` itself) must see some further extension carrying a forced
/// name instance.
fn space_certifies_exists(
    c: &Condition,
    v: &str,
    f: &SetFormula,
    space: &[Condition],
    universe: &[HFSet],
) -> Result<bool> {
    let mut frontier: Vec<&Condition> = vec![c];
    frontier.extend(space.iter().filter(|e| e.extends(c) == Ok(true)));
    'outer: for e in frontier {
        let mut candidates: Vec<&Condition> = vec![e];
        candidates.extend(space.iter().filter(|e2| e2.extends(e) == Ok(true)));
        for e2 in candidates {
            for m in 0..e2.rank() {
                let inst = f.subst_var(v, &SetTerm::Name(m));
                if verdict(e2, &inst, space, universe)? == ClausalVerdict::Forced {
                    continue 'outer;
                }
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// Pointwise truth of an atomic formula at one tuple, by clause shape.
fn atom_at(phi: &SetFormula, x: &[Tuple]) -> Result<bool> {
    // x is a one-element slice holding the tuple; kept as a slice so the
    // clause arms below read uniformly.
    let t = &x[0];
    let val = |term: &SetTerm| -> Result<HFSet> {
        match term {
            SetTerm::Name(n) => t.get(*n).cloned().ok_or(ForcingError::RankSideCondition {
                index: *n,
                rank: t.len(),
            }),
            SetTerm::Const(z) => Ok(z.clone()),
            SetTerm::Var(v) => Err(ForcingError::Parse {
                at: 0,
                msg: format!("unbound variable `{v}`"),
            }),
        }
    };
    match phi {
        SetFormula::Eq(a, b) => Ok(val(a)? == val(b)?),
        SetFormula::Mem(a, b) => Ok(val(b)?.contains(&val(a)?)),
        _ => Err(ForcingError::Internal {
            detail: "atom_at called on a non-atomic formula".to_string(),
        }),
    }
}

/// Clauses for atomic formulas: constants compare absolutely; names read the
/// tuple coordinates, almost-all over the condition's index set.
fn atomic_forced(c: &Condition, phi: &SetFormula) -> Result<bool> {
    if phi.names_max().is_none() {
        // Name-free atoms have an absolute truth value; no index is consulted.
        return atom_at(phi, &[vec![]]);
    }
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
                    if !atom_at(phi, &[x.clone()])? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        FiberRep::Generative { templates } => {
            let mut truth = IndexSet::full();
            for tpl in templates {
                truth = truth.intersect(&truth_set(phi, tpl, &[])?);
            }
            Ok(c.p.difference(&truth).is_bounded())
        }
    }
}

/// Whether any extension of `c` forces the atomic formula: exactly when the
/// indices carrying at least one satisfying tuple form an unbounded set
/// (restrict to them and keep only satisfying tuples).
fn atomic_extension_exists(c: &Condition, phi: &SetFormula) -> Result<bool> {
    if phi.names_max().is_none() {
        return atom_at(phi, &[vec![]]);
    }
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
                    if atom_at(phi, &[x.clone()])? {
                        // This index recurs periodically, always in p, always
                        // carrying this tuple.
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        }
        FiberRep::Generative { templates } => {
            let mut hits = IndexSet::empty();
            for tpl in templates {
                hits = hits.union(&truth_set(phi, tpl, &[])?);
            }
            Ok(c.p.intersect(&hits).is_unbounded())
        }
    }
}

/// Eventual constancy of the n-th coordinate: one value across all tuples for
/// almost all indices of p.
fn st_forced(c: &Condition, n: usize) -> Result<bool> {
    if n >= c.rank() {
        return Err(ForcingError::RankSideCondition {
            index: n,
            rank: c.rank(),
        });
    }
    match c.q.rep() {
        FiberRep::Tabular { .. } => {
            let (l_q, p_q) = c.q.window_shape().expect("tabular");
            let l = l_q.max(c.p.prelude_len());
            let p = lcm(p_q, c.p.period_len());
            let mut values = BTreeSet::new();
            for i in l..l + p {
                if !c.p.contains(i) {
                    continue;
                }
                for x in c.q.value_at(i).tuples() {
                    values.insert(x[n].clone());
                }
            }
            Ok(values.len() == 1)
        }
        FiberRep::Generative { templates } => {
            let mut value = None;
            for tpl in templates {
                if tpl[n].max_shift().is_some() {
                    // The coordinate grows with the index; never constant.
                    return Ok(false);
                }
                let v = tpl[n].eval(0);
                if *value.get_or_insert(v.clone()) != v {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Whether any extension forces st(G_n): a single coordinate value must recur
/// unboundedly within p, so the extension can restrict to those indices.
fn st_extension_exists(c: &Condition, n: usize) -> Result<bool> {
    if n >= c.rank() {
        return Err(ForcingError::RankSideCondition {
            index: n,
            rank: c.rank(),
        });
    }
    match c.q.rep() {
        // Some value occupies a periodic position inside p and recurs forever.
        FiberRep::Tabular { .. } => Ok(true),
        FiberRep::Generative { templates } => {
            // An index-independent coordinate recurs at every index; a growing
            // one meets any fixed value finitely often.
            Ok(templates.iter().any(|tpl| tpl[n].max_shift().is_none()))
        }
    }
}
