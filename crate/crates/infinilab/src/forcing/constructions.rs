//! Named condition constructions: constant naming, diagonal names, membership
//! staircases, pseudo-generic chains, and the fiber-splitting recursion.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_integer::gcd;
use serde::Serialize;

use super::fiber::{Condition, Fiber, FiberRep, RuleTerm, Tuple};
use super::formula::{SetFormula, SetTerm};
use super::hfset::HFSet;
use super::index_set::IndexSet;
use super::los::{eq_solutions, forces_los, matrix_holds, truth_set};
use super::{ForcingError, Result, DEFAULT_UNIVERSE_RANK};

/// Members of a bounded index set (normalization puts them all in the prelude).
fn finite_members(s: &IndexSet) -> Vec<usize> {
    debug_assert!(s.is_bounded());
    s.members_below(s.prelude_len())
}

/// One branch step: extend `(p, q)` to decide the atomic formula, following
/// the construction that keeps the fiber whole on the positive branch and
/// filters out satisfying tuples on the negative one. Returns the new index
/// set, fiber, and which way it decided.
fn branch(p: &IndexSet, q: &Fiber, atom: &SetFormula) -> Result<(IndexSet, Fiber, bool)> {
    match q.rep() {
        FiberRep::Tabular { .. } => {
            let (l_q, p_q) = q.window_shape().expect("tabular");
            let l = l_q.max(p.prelude_len());
            let per = super::index_set::lcm(p_q, p.period_len());
            let all_true = IndexSet::from_fn(l, per, |i| {
                q.value_at(i)
                    .tuples()
                    .iter()
                    .all(|x| matrix_holds(atom, x, &[]).unwrap_or(false))
            });
            let c_set = p.intersect(&all_true);
            if c_set.is_unbounded() {
                Ok((c_set, q.clone(), true))
            } else {
                let p_next = p.difference(&c_set);
                let q_next = q.filter_on(&p_next, &|x: &Tuple| {
                    !matrix_holds(atom, x, &[]).unwrap_or(true)
                })?;
                Ok((p_next, q_next, false))
            }
        }
        FiberRep::Generative { templates } => {
            let truths: Vec<IndexSet> = templates
                .iter()
                .map(|tpl| truth_set(atom, tpl, &[]))
                .collect::<Result<_>>()?;
            let mut all_true = IndexSet::full();
            for t in &truths {
                all_true = all_true.intersect(t);
            }
            let c_set = p.intersect(&all_true);
            if c_set.is_unbounded() {
                Ok((c_set, q.clone(), true))
            } else {
                // Keep the templates that satisfy the atom only boundedly
                // often; their tuples fail it from some point on. Templates
                // true cofinitely cannot all survive here, or the positive
                // branch would have been unbounded.
                let kept: Vec<Vec<RuleTerm>> = templates
                    .iter()
                    .zip(&truths)
                    .filter(|(_, t)| t.is_bounded())
                    .map(|(tpl, _)| tpl.clone())
                    .collect();
                if kept.is_empty() {
                    return Err(ForcingError::Internal {
                        detail: "negative branch with no surviving template".to_string(),
                    });
                }
                let mut p_next = p.difference(&c_set);
                for (tpl, t) in templates.iter().zip(&truths) {
                    if kept.contains(tpl) {
                        p_next = p_next.difference(t);
                    }
                }
                let q_next = Fiber::generative(q.rank(), kept)?;
                Ok((p_next, q_next, false))
            }
        }
    }
}

/// Extends the condition to decide the atomic formula one way or the other.
/// The boolean reports which way. Name-free atoms are decided by the
/// condition itself.
pub fn decide_atomic(c: &Condition, atom: &SetFormula) -> Result<(Condition, bool)> {
    match atom {
        SetFormula::Eq(..) | SetFormula::Mem(..) => {}
        _ => {
            return Err(ForcingError::Parse {
                at: 0,
                msg: "decide_atomic expects an atomic formula".to_string(),
            })
        }
    }
    if let Some(n) = atom.names_max() {
        if n >= c.rank() {
            return Err(ForcingError::RankSideCondition {
                index: n,
                rank: c.rank(),
            });
        }
    } else {
        let truth = matrix_holds(atom, &[], &[])?;
        return Ok((c.clone(), truth));
    }
    let (p, q, positive) = branch(&c.p, &c.q, atom)?;
    Ok((Condition::new(p, q)?, positive))
}

/// Appends a column pinned to the constant `z`, returning the extension and
/// the index of the fresh name it forces equal to `z`.
pub fn fix_constant(c: &Condition, z: &HFSet) -> (Condition, usize) {
    let m = c.rank();
    let q = c.q.append_constant_column(z);
    (
        Condition {
            p: c.p.clone(),
            q,
        },
        m,
    )
}

/// Appends the diagonal column whose value at index i is the i-th von Neumann
/// numeral, yielding a name forced different from every fixed numeral.
pub fn diag_name(c: &Condition) -> Result<(Condition, usize)> {
    let m = c.rank();
    let q = c.q.append_index_column()?;
    Ok((
        Condition {
            p: c.p.clone(),
            q,
        },
        m,
    ))
}

fn membership_atom(n: usize, m: usize) -> SetFormula {
    SetFormula::Mem(
        SetTerm::Const(HFSet::von_neumann(n)),
        SetTerm::Name(m),
    )
}

/// Extends the condition so that `n ∈ G_m` is decided for every `n ≤ bound`,
/// by the staircase construction: a chain of branch steps, each dropping the
/// least element of its index set, reassembled band by band between the
/// successive least elements.
pub fn decide_membership(c: &Condition, m: usize, bound: usize) -> Result<Condition> {
    if m >= c.rank() {
        return Err(ForcingError::RankSideCondition {
            index: m,
            rank: c.rank(),
        });
    }
    let mut stages: Vec<(IndexSet, Fiber)> = vec![(c.p.clone(), c.q.clone())];
    for n in 0..=bound {
        let (pn, qn) = stages.last().unwrap();
        let (p_pre, q_next, _) = branch(pn, qn, &membership_atom(n, m))?;
        let least = p_pre.min_element().ok_or(ForcingError::Internal {
            detail: "branch produced an empty index set".to_string(),
        })?;
        stages.push((p_pre.without(least), q_next));
    }
    if c.q.is_generative() {
        // Bands cannot be materialized for rule fibers; the chain tail
        // already decides every n ≤ bound and extends the input.
        let (p_tail, q_tail) = stages.pop().unwrap();
        return Condition::new(p_tail, q_tail);
    }
    let cuts: Vec<usize> = stages
        .iter()
        .map(|(p, _)| {
            p.min_element().ok_or(ForcingError::Internal {
                detail: "stage index set empty".to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let cutoff = *cuts.last().unwrap();
    let mut bits = vec![false; cutoff];
    for (i, bit) in bits.iter_mut().enumerate() {
        let band = match cuts.iter().rposition(|&cut| cut <= i) {
            Some(b) => b,
            None => continue,
        };
        *bit = stages[band].0.contains(i);
    }
    let p_final = stages.last().unwrap().0.splice_prefix(&bits);
    let mut bands = vec![(0usize, stages[0].1.clone())];
    for (j, (_, qj)) in stages.iter().enumerate().skip(1) {
        bands.push((cuts[j], qj.clone()));
    }
    let q_final = Fiber::piecewise(&bands)?;
    Condition::new(p_final, q_final)
}

/// Reads off the bits `n ∈ G_m` for `n ≤ bound` from a condition that decides
/// them all (for instance the output of [`decide_membership`]).
pub fn standard_part_name(c: &Condition, m: usize, bound: usize) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(bound + 1);
    for n in 0..=bound {
        let atom = membership_atom(n, m);
        if forces_los(c, &atom, DEFAULT_UNIVERSE_RANK)? {
            bits.push(true);
        } else if forces_los(c, &SetFormula::not(atom), DEFAULT_UNIVERSE_RANK)? {
            bits.push(false);
        } else {
            return Err(ForcingError::Undecided { n });
        }
    }
    Ok(bits)
}

/// A density requirement paired with the procedure that meets it.
#[derive(Clone, Debug)]
pub enum DenseRule {
    /// Extend by a fresh column forced equal to the constant.
    FixConstant(HFSet),
    /// Extend by the diagonal column.
    Diagonal,
    /// Restrict the index set to its intersection with the given set.
    Restrict(IndexSet),
    /// Decide `n ∈ G_name` for all `n ≤ bound`.
    DecideMembership { name: usize, bound: usize },
}

impl DenseRule {
    pub fn description(&self) -> String {
        match self {
            DenseRule::FixConstant(z) => format!("fix constant {z}"),
            DenseRule::Diagonal => "append diagonal column".to_string(),
            DenseRule::Restrict(s) => format!("restrict index set to {s}"),
            DenseRule::DecideMembership { name, bound } => {
                format!("decide n in G{name} for n <= {bound}")
            }
        }
    }

    pub fn apply(&self, c: &Condition) -> Result<Condition> {
        match self {
            DenseRule::FixConstant(z) => Ok(fix_constant(c, z).0),
            DenseRule::Diagonal => diag_name(c).map(|(c, _)| c),
            DenseRule::Restrict(s) => Condition::new(c.p.intersect(s), c.q.clone()),
            DenseRule::DecideMembership { name, bound } => decide_membership(c, *name, *bound),
        }
    }
}

impl fmt::Display for DenseRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenseRule::FixConstant(z) => write!(f, "fix({z})"),
            DenseRule::Diagonal => write!(f, "diag"),
            DenseRule::Restrict(s) => write!(f, "restrict({s})"),
            DenseRule::DecideMembership { name, bound } => {
                write!(f, "decide(name={name} bound={bound})")
            }
        }
    }
}

impl FromStr for DenseRule {
    type Err = ForcingError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "diag" {
            return Ok(DenseRule::Diagonal);
        }
        let parse_err = |msg: &str| ForcingError::Parse { at: 0, msg: msg.to_string() };
        let inner = |prefix: &str| -> Option<&str> {
            s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')
        };
        if let Some(body) = inner("fix") {
            return Ok(DenseRule::FixConstant(body.trim().parse()?));
        }
        if let Some(body) = inner("restrict") {
            return Ok(DenseRule::Restrict(body.trim().parse()?));
        }
        if let Some(body) = inner("decide") {
            let mut name = None;
            let mut bound = None;
            for field in body.split_whitespace() {
                if let Some(v) = field.strip_prefix("name=") {
                    name = Some(v.parse::<usize>().map_err(|e| {
                        parse_err(&format!("bad name in decide rule: {e}"))
                    })?);
                } else if let Some(v) = field.strip_prefix("bound=") {
                    bound = Some(v.parse::<usize>().map_err(|e| {
                        parse_err(&format!("bad bound in decide rule: {e}"))
                    })?);
                } else {
                    return Err(parse_err(&format!(
                        "unexpected field {field:?} in decide rule"
                    )));
                }
            }
            return Ok(DenseRule::DecideMembership {
                name: name.ok_or_else(|| parse_err("decide rule needs name="))?,
                bound: bound.ok_or_else(|| parse_err("decide rule needs bound="))?,
            });
        }
        Err(parse_err(&format!(
            "expected fix(z), diag, restrict(set), or decide(name=m bound=B); got {s:?}"
        )))
    }
}

/// Runs the rules in order, each extending the previous condition, and
/// verifies every link of the descending chain. The chain starts with `start`
/// and gains one condition per rule.
pub fn pseudo_generic(start: &Condition, rules: &[DenseRule]) -> Result<Vec<Condition>> {
    let mut chain = vec![start.clone()];
    for rule in rules {
        let cur = chain.last().unwrap();
        let next = rule.apply(cur)?;
        if next.extends(cur) != Ok(true) {
            return Err(ForcingError::ContractViolation {
                rule: rule.description(),
            });
        }
        chain.push(next);
    }
    Ok(chain)
}

/// One stage of the splitting recursion: at the `stage`-th step the scan
/// reached position `n` (counted within p), read original index `index`,
/// found `alpha` as the least last-occurrence among the values there, and
/// selected `s`.
#[derive(Clone, Debug, Serialize)]
pub struct SplitStage {
    pub stage: usize,
    pub n: usize,
    pub index: usize,
    pub alpha: usize,
    pub s: Vec<HFSet>,
}

/// Output of [`split_fibers`]: the recorded stages and the two disjoint
/// unbounded index sets built from their even and odd halves.
#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub stages: Vec<SplitStage>,
    pub p1: IndexSet,
    pub p2: IndexSet,
}

// Von Neumann values at index i have 2^i nodes, so scanning stops once the
// next index would materialize beyond this.
const SPLIT_INDEX_CAP: usize = 18;

/// Splits along a rank-1 rule fiber whose every value occurs at boundedly
/// many indices: the recursion selects, at each reached position, the values
/// whose last occurrence comes soonest, then alternates the reached positions
/// into two disjoint unbounded sets with stage-wise disjoint selections.
pub fn split_fibers(r: &Fiber, p: &IndexSet) -> Result<SplitReport> {
    if r.rank() != 1 {
        return Err(ForcingError::InvalidTransform {
            detail: format!("splitting needs a rank-1 fiber, got rank {}", r.rank()),
        });
    }
    let templates = match r.rep() {
        FiberRep::Generative { templates } => templates,
        FiberRep::Tabular { .. } => {
            return Err(ForcingError::InvalidTransform {
                detail: "splitting needs a rule fiber".to_string(),
            })
        }
    };
    for tpl in templates {
        if tpl[0].max_shift().is_none() {
            return Err(ForcingError::UnboundedValue {
                detail: format!("value {} recurs at every index", tpl[0].eval(0)),
            });
        }
    }
    if p.is_bounded() {
        return Err(ForcingError::BoundedIndexSet);
    }

    // Position of the last occurrence of x within p, counted as an ordinal of
    // p (the recursion works along p remapped increasingly onto 0,1,2,…).
    let mut memo: HashMap<HFSet, usize> = HashMap::new();
    let mut last_pos = |x: &HFSet| -> Result<usize> {
        if let Some(&v) = memo.get(x) {
            return Ok(v);
        }
        let mut best: Option<usize> = None;
        for tpl in templates {
            let sols = eq_solutions(&tpl[0], &RuleTerm::Const(x.clone()))?;
            if sols.is_unbounded() {
                return Err(ForcingError::UnboundedValue {
                    detail: format!("value {x} recurs unboundedly"),
                });
            }
            for i in finite_members(&sols) {
                if p.contains(i) {
                    best = Some(best.map_or(i, |b: usize| b.max(i)));
                }
            }
        }
        let i = best.ok_or(ForcingError::Internal {
            detail: format!("value {x} never occurs inside p"),
        })?;
        let ord = p.member_ordinal(i).ok_or(ForcingError::Internal {
            detail: "ordinal lookup failed".to_string(),
        })?;
        memo.insert(x.clone(), ord);
        Ok(ord)
    };

    let mut stages: Vec<SplitStage> = Vec::new();
    // Extends the stage list toward `len`; stops short (Ok(false)) when the
    // next index would cross the materialization cap.
    let mut run_to = |stages: &mut Vec<SplitStage>, len: usize| -> Result<bool> {
        while stages.len() < len {
            let n = stages.last().map_or(0, |st| st.alpha + 1);
            let index = p.nth_member(n).ok_or(ForcingError::BoundedIndexSet)?;
            if index > SPLIT_INDEX_CAP {
                return Ok(false);
            }
            let values: Vec<HFSet> = r
                .value_at(index)
                .tuples()
                .iter()
                .map(|t| t[0].clone())
                .collect();
            let mut alpha = usize::MAX;
            for x in &values {
                alpha = alpha.min(last_pos(x)?);
            }
            let s: Vec<HFSet> = {
                let mut s = Vec::new();
                for x in &values {
                    if last_pos(x)? == alpha {
                        s.push(x.clone());
                    }
                }
                s
            };
            stages.push(SplitStage {
                stage: stages.len(),
                n,
                index,
                alpha,
                s,
            });
        }
        Ok(true)
    };

    // The scan positions grow affinely once the rule structure settles; find
    // the shortest repeating difference pattern, even-length so the parity
    // classes repeat too, then align it to p's period for translation back.
    let ord_prelude = p.members_below(p.prelude_len()).len();
    let mut found: Option<(usize, usize)> = None;
    for probe in [6usize, 9, 12, 16, 20] {
        run_to(&mut stages, probe)?;
        'search: for c_len in 1..=8usize {
            for l0 in 0..stages.len() {
                if stages[l0].n < ord_prelude || l0 + 2 * c_len >= stages.len() {
                    continue;
                }
                let delta = stages[l0 + c_len].n - stages[l0].n;
                if (l0..l0 + c_len).all(|j| stages[j + c_len].n == stages[j].n + delta) {
                    found = Some((l0, c_len));
                    break 'search;
                }
            }
        }
        if found.is_some() || stages.len() < probe {
            break;
        }
    }
    let (l0, c_raw) = found.ok_or(ForcingError::Internal {
        detail: "no repeating pattern in the splitting recursion within the scan horizon"
            .to_string(),
    })?;
    let c_even = if c_raw % 2 == 1 { 2 * c_raw } else { c_raw };
    if !run_to(&mut stages, l0 + 2 * c_even + 1)? {
        return Err(ForcingError::Internal {
            detail: "scan horizon reached before the pattern closed".to_string(),
        });
    }
    let delta_even = stages[l0 + c_even].n - stages[l0].n;
    let w = p.ones_per_period();
    let k = w / gcd(delta_even, w);
    let c_fin = c_even * k;
    let delta_fin = delta_even * k;
    if !run_to(&mut stages, l0 + 2 * c_fin + 1)? {
        return Err(ForcingError::Internal {
            detail: "scan horizon reached before the aligned pattern closed".to_string(),
        });
    }
    for j in l0..l0 + c_fin {
        if stages[j + c_fin].n != stages[j].n + delta_fin {
            return Err(ForcingError::Internal {
                detail: "splitting pattern failed verification".to_string(),
            });
        }
    }

    // Stage-wise disjointness of the selections, checked over the horizon.
    for (a, sa) in stages.iter().enumerate() {
        for sb in stages.iter().skip(a + 1) {
            if sa.s.iter().any(|x| sb.s.contains(x)) {
                return Err(ForcingError::Internal {
                    detail: format!("selections at stages {} and {} overlap", sa.stage, sb.stage),
                });
            }
        }
    }

    let stride = delta_fin / w * p.period_len();
    let prelude_len = stages[l0 + c_fin].index;
    let evens: std::collections::BTreeSet<usize> = stages
        .iter()
        .filter(|st| st.stage % 2 == 0)
        .map(|st| st.index)
        .collect();
    let odds: std::collections::BTreeSet<usize> = stages
        .iter()
        .filter(|st| st.stage % 2 == 1)
        .map(|st| st.index)
        .collect();
    let p1 = IndexSet::from_fn(prelude_len, stride, |i| evens.contains(&i));
    let p2 = IndexSet::from_fn(prelude_len, stride, |i| odds.contains(&i));
    if !p1.is_unbounded()
        || !p2.is_unbounded()
        || !p1.intersect(&p2).is_empty_set()
        || !p1.is_subset_of(p)
        || !p2.is_subset_of(p)
    {
        return Err(ForcingError::Internal {
            detail: "split parts failed the disjoint-unbounded check".to_string(),
        });
    }
    stages.truncate(l0 + 2 * c_fin + 1);
    Ok(SplitReport { stages, p1, p2 })
}

#[cfg(test)]
mod tests {
    use super::super::fiber::ValueSet;
    use super::*;

    fn base() -> Condition {
        Condition::one_point_one()
    }

    #[test]
    fn constant_columns_stack() {
        let (c1, m1) = fix_constant(&base(), &HFSet::singleton(HFSet::empty()));
        assert_eq!((c1.rank(), m1), (1, 0));
        assert_eq!(c1.extends(&base()), Ok(true));
        assert_eq!(
            forces_los(&c1, &"G0 = {0}".parse().unwrap(), 3),
            Ok(true)
        );
        let (c2, m2) = fix_constant(&c1, &HFSet::empty());
        assert_eq!((c2.rank(), m2), (2, 1));
        assert_eq!(forces_los(&c2, &"G0 = {0}".parse().unwrap(), 3), Ok(true));
        assert_eq!(forces_los(&c2, &"G1 = 0".parse().unwrap(), 3), Ok(true));
        assert_eq!(c2.extends(&c1), Ok(true));
    }

    #[test]
    fn diagonal_name_avoids_every_numeral() {
        let (c, m) = diag_name(&base()).unwrap();
        assert_eq!(m, 0);
        assert_eq!(c.extends(&base()), Ok(true));
        for n in 0..=3 {
            let phi: SetFormula = format!("!(G0 = {})", HFSet::von_neumann(n)).parse().unwrap();
            assert_eq!(forces_los(&c, &phi, 3), Ok(true), "n = {n}");
        }
    }

    #[test]
    fn staircase_on_the_diagonal_column() {
        let (c, m) = diag_name(&base()).unwrap();
        let d = decide_membership(&c, m, 3).unwrap();
        assert_eq!(d.extends(&c), Ok(true));
        assert_eq!(standard_part_name(&d, m, 3), Ok(vec![true; 4]));
    }

    #[test]
    fn staircase_selects_a_parity_class() {
        // Alternating column: {0} contains 0, {{0}} does not.
        let q = Fiber::tabular(
            1,
            vec![],
            vec![
                ValueSet::singleton(vec![HFSet::singleton(HFSet::empty())]),
                ValueSet::singleton(vec![HFSet::singleton(HFSet::singleton(HFSet::empty()))]),
            ],
        )
        .unwrap();
        let c = Condition::new(IndexSet::full(), q).unwrap();
        let d = decide_membership(&c, 0, 0).unwrap();
        assert_eq!(d.extends(&c), Ok(true));
        let bits = standard_part_name(&d, 0, 0).unwrap();
        // The construction decided 0 ∈ G0; the positive class is the evens.
        // The band below the first staircase cut keeps the original indices,
        // so only the tail must fall into the selected class.
        assert_eq!(bits, vec![true]);
        for i in [4usize, 6, 8, 10] {
            assert!(d.p.contains(i), "{i} missing");
        }
        for i in [3usize, 5, 7, 9, 11] {
            assert!(!d.p.contains(i), "{i} should be gone");
        }
    }

    #[test]
    fn single_step_on_a_constant_column() {
        let (c, m) = fix_constant(&base(), &HFSet::von_neumann(2));
        let d = decide_membership(&c, m, 0).unwrap();
        assert_eq!(standard_part_name(&d, m, 0), Ok(vec![true]));
        assert_eq!(standard_part_name(&d, m, 1), Ok(vec![true, true]));
    }

    #[test]
    fn pseudo_generic_chains() {
        let rules = vec![
            DenseRule::FixConstant(HFSet::empty()),
            DenseRule::Restrict(IndexSet::evens()),
        ];
        let chain = pseudo_generic(&base(), &rules).unwrap();
        assert_eq!(chain.len(), 3);
        assert_eq!(chain[2].p, IndexSet::evens());
        assert!(pseudo_generic(&base(), &[]).unwrap().len() == 1);

        let (start, m) = fix_constant(&base(), &HFSet::von_neumann(2));
        let rules = vec![
            DenseRule::DecideMembership { name: m, bound: 0 },
            DenseRule::DecideMembership { name: m, bound: 1 },
        ];
        let chain = pseudo_generic(&start, &rules).unwrap();
        assert_eq!(
            standard_part_name(chain.last().unwrap(), m, 1),
            Ok(vec![true, true])
        );
    }

    #[test]
    fn restriction_must_stay_unbounded() {
        let rule = DenseRule::Restrict(IndexSet::finite(&[0, 1]));
        assert!(matches!(
            pseudo_generic(&base(), &[rule]),
            Err(ForcingError::BoundedIndexSet)
        ));
    }

    #[test]
    fn splitting_the_diagonal_gives_parities() {
        let r = Fiber::generative(1, vec![vec![RuleTerm::vn()]]).unwrap();
        let report = split_fibers(&r, &IndexSet::full()).unwrap();
        assert_eq!(report.p1, IndexSet::evens());
        assert_eq!(report.p2, IndexSet::odds());
        for st in report.stages.iter().take(4) {
            assert_eq!(st.n, st.stage);
            assert_eq!(st.alpha, st.stage);
            assert_eq!(st.s, vec![HFSet::von_neumann(st.stage)]);
        }
    }

    #[test]
    fn splitting_with_two_templates() {
        let r = Fiber::generative(
            1,
            vec![vec![RuleTerm::vn()], vec![RuleTerm::VN(1)]],
        )
        .unwrap();
        let report = split_fibers(&r, &IndexSet::full()).unwrap();
        // Values at i are vN(i) and vN(i+1); the last occurrence of vN(j) is
        // index j, so each stage selects the smaller value.
        assert_eq!(report.p1, IndexSet::evens());
        assert_eq!(report.stages[2].s, vec![HFSet::von_neumann(2)]);
    }

    #[test]
    fn splitting_respects_the_index_set() {
        let r = Fiber::generative(1, vec![vec![RuleTerm::vn()]]).unwrap();
        let report = split_fibers(&r, &IndexSet::evens()).unwrap();
        for i in [0usize, 4, 8] {
            assert!(report.p1.contains(i), "{i} missing");
        }
        assert!(!report.p1.contains(2));
        assert!(report.p2.contains(2));
        assert!(report.p1.intersect(&report.p2).is_empty_set());
    }

    #[test]
    fn splitting_rejects_recurring_values() {
        let r = Fiber::generative(1, vec![vec![RuleTerm::Const(HFSet::empty())]]).unwrap();
        assert!(matches!(
            split_fibers(&r, &IndexSet::full()),
            Err(ForcingError::UnboundedValue { .. })
        ));
    }
}
