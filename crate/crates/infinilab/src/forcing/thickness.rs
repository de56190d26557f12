//! Thick and thin families of finite sets of naturals, their covering
//! numbers, and the diagonal union construction.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{ForcingError, Result};

/// Decidable membership rules for families of finite subsets of ℕ. Every
/// rule is invariant under permutations fixing the mentioned elements, which
/// is what makes the symmetry-reduced checks below exhaustive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyRule {
    Contains(usize),
    CardAtLeast(usize),
    CardAtMost(usize),
    And(Box<FamilyRule>, Box<FamilyRule>),
    Or(Box<FamilyRule>, Box<FamilyRule>),
    Not(Box<FamilyRule>),
}

impl FamilyRule {
    fn eval(&self, a: &BTreeSet<usize>) -> bool {
        match self {
            FamilyRule::Contains(x) => a.contains(x),
            FamilyRule::CardAtLeast(c) => a.len() >= *c,
            FamilyRule::CardAtMost(c) => a.len() <= *c,
            FamilyRule::And(l, r) => l.eval(a) && r.eval(a),
            FamilyRule::Or(l, r) => l.eval(a) || r.eval(a),
            FamilyRule::Not(f) => !f.eval(a),
        }
    }

    fn collect(&self, designated: &mut BTreeSet<usize>, card_max: &mut usize) {
        match self {
            FamilyRule::Contains(x) => {
                designated.insert(*x);
            }
            FamilyRule::CardAtLeast(c) | FamilyRule::CardAtMost(c) => *card_max = (*card_max).max(*c),
            FamilyRule::And(l, r) | FamilyRule::Or(l, r) => {
                l.collect(designated, card_max);
                r.collect(designated, card_max);
            }
            FamilyRule::Not(f) => f.collect(designated, card_max),
        }
    }
}

impl fmt::Display for FamilyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyRule::Contains(x) => write!(f, "contains({x})"),
            FamilyRule::CardAtLeast(c) => write!(f, "card>={c}"),
            FamilyRule::CardAtMost(c) => write!(f, "card<={c}"),
            FamilyRule::And(l, r) => write!(f, "({l} & {r})"),
            FamilyRule::Or(l, r) => write!(f, "({l} | {r})"),
            FamilyRule::Not(inner) => write!(f, "!{inner}"),
        }
    }
}

/// A family of finite subsets of ℕ given by a [`FamilyRule`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinFamily {
    rule: FamilyRule,
}

impl FinFamily {
    pub fn new(rule: FamilyRule) -> Self {
        FinFamily { rule }
    }

    pub fn rule(&self) -> &FamilyRule {
        &self.rule
    }

    pub fn member(&self, a: &BTreeSet<usize>) -> bool {
        self.rule.eval(a)
    }

    /// Elements the rule mentions by name.
    pub fn designated(&self) -> BTreeSet<usize> {
        let mut d = BTreeSet::new();
        let mut c = 0;
        self.rule.collect(&mut d, &mut c);
        d
    }

    /// Largest cardinality constant appearing in the rule.
    pub fn card_bound(&self) -> usize {
        let mut d = BTreeSet::new();
        let mut c = 0;
        self.rule.collect(&mut d, &mut c);
        c
    }

    pub fn and(&self, other: &FinFamily) -> FinFamily {
        FinFamily::new(FamilyRule::And(
            Box::new(self.rule.clone()),
            Box::new(other.rule.clone()),
        ))
    }

    pub fn minus(&self, other: &FinFamily) -> FinFamily {
        FinFamily::new(FamilyRule::And(
            Box::new(self.rule.clone()),
            Box::new(FamilyRule::Not(Box::new(other.rule.clone()))),
        ))
    }
}

impl fmt::Display for FinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.rule.fmt(f)
    }
}

impl Serialize for FinFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

struct RuleParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> RuleParser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(ForcingError::Parse {
            at: self.pos,
            msg: msg.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(kw.as_bytes()) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ForcingError::Parse {
                at: start,
                msg: "number too large".to_string(),
            })
    }

    fn disjunction(&mut self) -> Result<FamilyRule> {
        let mut left = self.conjunction()?;
        while self.eat(b'|') {
            let right = self.conjunction()?;
            left = FamilyRule::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<FamilyRule> {
        let mut left = self.unary()?;
        while self.eat(b'&') {
            let right = self.unary()?;
            left = FamilyRule::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<FamilyRule> {
        if self.eat(b'!') {
            return Ok(FamilyRule::Not(Box::new(self.unary()?)));
        }
        if self.eat(b'(') {
            let inner = self.disjunction()?;
            if !self.eat(b')') {
                return self.err("expected `)`");
            }
            return Ok(inner);
        }
        if self.keyword("contains") {
            if !self.eat(b'(') {
                return self.err("expected `(` after contains");
            }
            let x = self.number()?;
            if !self.eat(b')') {
                return self.err("expected `)`");
            }
            return Ok(FamilyRule::Contains(x));
        }
        if self.keyword("card>=") {
            return Ok(FamilyRule::CardAtLeast(self.number()?));
        }
        if self.keyword("card<=") {
            return Ok(FamilyRule::CardAtMost(self.number()?));
        }
        self.err("expected contains(..), card>=.., card<=.., `!`, or `(`")
    }
}

impl FromStr for FinFamily {
    type Err = ForcingError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = RuleParser {
            bytes: s.as_bytes(),
            pos: 0,
        };
        let rule = p.disjunction()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return p.err("trailing input");
        }
        Ok(FinFamily::new(rule))
    }
}

/// Result of the covering-number computation at one test size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThickOutcome {
    /// Least n such that every test set of size ≤ m extends to a member of
    /// size ≤ n.
    Nu(usize),
    /// A test set with no superset in the family at all.
    Thin { witness: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThicknessRow {
    pub m: usize,
    pub outcome: ThickOutcome,
}

/// All subsets of `pool` with at most `max_len` elements.
fn subsets_up_to(pool: &[usize], max_len: usize) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..1 << pool.len() {
        if (mask.count_ones() as usize) <= max_len {
            out.push(
                pool.iter()
                    .enumerate()
                    .filter(|(j, _)| mask >> *j & 1 == 1)
                    .map(|(_, &x)| x)
                    .collect(),
            );
        }
    }
    out
}

/// Least size of a member extending `a`, searching supersets built from the
/// remaining designated elements plus interchangeable padding. Any superset
/// at all can be reshaped into one within the cap: membership depends only on
/// the designated elements present and the total size, and sizes beyond every
/// cardinality constant behave alike.
fn mu(fam: &FinFamily, a: &BTreeSet<usize>, pad_base: usize, cap: usize) -> Option<usize> {
    let extra: Vec<usize> = fam.designated().difference(a).copied().collect();
    for size in a.len()..=cap {
        for d in subsets_up_to(&extra, size - a.len()) {
            let t = size - a.len() - d.len();
            let mut b = a.clone();
            b.extend(d);
            b.extend((0..t).map(|j| pad_base + j));
            if fam.member(&b) {
                return Some(size);
            }
        }
    }
    None
}

/// For each m ≤ m_max, the covering number ν(m) — the least n such that every
/// set of at most m elements extends to a family member of size at most n —
/// or a thinness witness. Test sets range over the designated elements plus m
/// fresh ones; rule invariance under permutations fixing the designated
/// elements makes this exhaustive.
pub fn thickness_nu(fam: &FinFamily, m_max: usize) -> Vec<ThicknessRow> {
    let designated: Vec<usize> = fam.designated().into_iter().collect();
    let top = designated
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(fam.card_bound())
        + 1;
    let mut rows = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let mut pool = designated.clone();
        pool.extend(top..top + m);
        let pad_base = top + m;
        let cap = designated.len() + m + fam.card_bound() + 2;
        let mut nu = 0usize;
        let mut thin: Option<Vec<usize>> = None;
        for a in subsets_up_to(&pool, m) {
            match mu(fam, &a, pad_base, cap) {
                Some(n) => nu = nu.max(n),
                None => {
                    thin = Some(a.into_iter().collect());
                    break;
                }
            }
        }
        rows.push(ThicknessRow {
            m,
            outcome: match thin {
                Some(witness) => ThickOutcome::Thin { witness },
                None => ThickOutcome::Nu(nu),
            },
        });
    }
    rows
}

/// Report of the diagonal construction: the composite family, the guard used
/// at each level, its thickness up to the checked size, and for each chain
/// position the uniform size bound on members escaping that family.
#[derive(Clone, Debug, Serialize)]
pub struct DiagonalReport {
    pub composite: FinFamily,
    /// (level m, chain index used, guard ν).
    pub guards: Vec<(usize, usize, usize)>,
    pub rows: Vec<ThicknessRow>,
    /// (chain position n, size bound k on members outside chain[n]).
    pub diff_bounds: Vec<(usize, usize)>,
}

/// Membership check over representative shapes only: which designated
/// elements are present and how large the set is. Exhaustive by symmetry.
fn shape_check(
    designated: &[usize],
    size_cap: usize,
    mut violated: impl FnMut(&BTreeSet<usize>) -> bool,
) -> Option<BTreeSet<usize>> {
    let pad_base = designated.iter().copied().max().unwrap_or(0) + 1;
    for d in subsets_up_to(designated, designated.len()) {
        for size in d.len()..=size_cap {
            let mut a = d.clone();
            a.extend((0..size - d.len()).map(|j| pad_base + j));
            if violated(&a) {
                return Some(a);
            }
        }
    }
    None
}

/// Builds the diagonal union of a descending chain of thick families: level m
/// contributes the members of the (stabilized) chain family at m whose size
/// stays within that level's covering number. Verifies thickness of the
/// composite up to `m_check` and the per-position escape bounds.
pub fn diagonal_thick(chain: &[FinFamily], m_check: usize) -> Result<DiagonalReport> {
    if chain.is_empty() {
        return Err(ForcingError::InvalidTransform {
            detail: "empty chain".to_string(),
        });
    }
    let designated: Vec<usize> = chain
        .iter()
        .flat_map(|f| f.designated())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let max_card = chain.iter().map(|f| f.card_bound()).max().unwrap();
    let size_cap = designated.len() + m_check.max(chain.len()) + max_card + 3;

    // The chain must be descending for the escape bounds to make sense.
    for (m, pair) in chain.windows(2).enumerate() {
        if let Some(a) = shape_check(&designated, size_cap, |a| {
            pair[1].member(a) && !pair[0].member(a)
        }) {
            return Err(ForcingError::InvalidTransform {
                detail: format!(
                    "chain is not descending at position {}: {:?} separates",
                    m + 1,
                    a
                ),
            });
        }
    }

    let levels = m_check.max(chain.len() - 1);
    let mut guards = Vec::new();
    let mut composite_rule: Option<FamilyRule> = None;
    for m in 0..=levels {
        let idx = m.min(chain.len() - 1);
        let row = thickness_nu(&chain[idx], m).pop().unwrap();
        let nu = match row.outcome {
            ThickOutcome::Nu(nu) => nu,
            ThickOutcome::Thin { .. } => return Err(ForcingError::ThinLink { pos: idx, m }),
        };
        guards.push((m, idx, nu));
        let level = FamilyRule::And(
            Box::new(chain[idx].rule().clone()),
            Box::new(FamilyRule::CardAtMost(nu)),
        );
        composite_rule = Some(match composite_rule {
            None => level,
            Some(acc) => FamilyRule::Or(Box::new(acc), Box::new(level)),
        });
    }
    let composite = FinFamily::new(composite_rule.unwrap());
    let rows = thickness_nu(&composite, m_check);

    let mut diff_bounds = Vec::new();
    for n in 1..chain.len() {
        let k = guards[..n].iter().map(|&(_, _, nu)| nu).max().unwrap();
        // Everything in the composite but outside chain[n] must fit in k.
        if let Some(a) = shape_check(&designated, size_cap, |a| {
            a.len() > k && composite.member(a) && !chain[n].member(a)
        }) {
            return Err(ForcingError::Internal {
                detail: format!("escape bound {k} fails at position {n}: {a:?}"),
            });
        }
        diff_bounds.push((n, k));
    }

    Ok(DiagonalReport {
        composite,
        guards,
        rows,
        diff_bounds,
    })
}
