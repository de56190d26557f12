//! Simplified forcing: conditions are bare index sets and names are
//! eventually periodic functions from indices to sets.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::fiber::{Fiber, Reindex, ValueSet};
use super::hfset::HFSet;
use super::index_set::{lcm, IndexSet};
use super::{ForcingError, Result};

/// An eventually periodic function ℕ → sets, kept normalized (minimal period,
/// shortest prelude) so equal functions compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleName {
    // Rank-1 fiber with singleton values; reuses its normalization and
    // reindexing machinery.
    fiber: Fiber,
}

impl SimpleName {
    pub fn new(prelude: Vec<HFSet>, period: Vec<HFSet>) -> Result<Self> {
        let cell = |z: HFSet| ValueSet::singleton(vec![z]);
        let fiber = Fiber::tabular(
            1,
            prelude.into_iter().map(cell).collect(),
            period.into_iter().map(cell).collect(),
        )?;
        Ok(SimpleName { fiber })
    }

    pub fn constant(z: HFSet) -> Self {
        SimpleName {
            fiber: Fiber::constant(vec![z]),
        }
    }

    pub fn value_at(&self, i: usize) -> HFSet {
        self.fiber.value_at(i).tuples()[0][0].clone()
    }

    /// The composition self ∘ γ, again eventually periodic.
    pub fn compose(&self, gamma: &Reindex) -> Result<SimpleName> {
        Ok(SimpleName {
            fiber: self.fiber.reindex(gamma)?,
        })
    }

    fn window(&self) -> (usize, usize) {
        self.fiber.window_shape().expect("simple names are tabular")
    }
}

impl fmt::Display for SimpleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, p) = self.window();
        write!(f, "prelude=[")?;
        for i in 0..l {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.value_at(i))?;
        }
        write!(f, "] period=[")?;
        for j in 0..p {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.value_at(l + j))?;
        }
        write!(f, "]")
    }
}

impl Serialize for SimpleName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Formulas of the simplified calculus: atomic comparisons between names,
/// standardness of a name, and single negations of those.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimpleFormula {
    Eq(SimpleName, SimpleName),
    Mem(SimpleName, SimpleName),
    St(SimpleName),
    Not(Box<SimpleFormula>),
}

fn names(phi: &SimpleFormula) -> Vec<&SimpleName> {
    match phi {
        SimpleFormula::Eq(a, b) | SimpleFormula::Mem(a, b) => vec![a, b],
        SimpleFormula::St(a) => vec![a],
        SimpleFormula::Not(f) => names(f),
    }
}

/// Scan window covering the preludes and a full common period of everything
/// involved.
fn window(p: &IndexSet, phi: &SimpleFormula) -> (usize, usize) {
    let mut l = p.prelude_len();
    let mut per = p.period_len();
    for f in names(phi) {
        let (lf, pf) = f.window();
        l = l.max(lf);
        per = lcm(per, pf);
    }
    (l, per)
}

/// Decides whether the index set forces the formula: atomic comparisons hold
/// almost everywhere on p, standardness means the name is eventually constant
/// on p, and a negation holds when no unbounded subset of p could force the
/// formula.
pub fn simple_forces(p: &IndexSet, phi: &SimpleFormula) -> Result<bool> {
    if p.is_bounded() {
        return Err(ForcingError::BoundedIndexSet);
    }
    let (l, per) = window(p, phi);
    match phi {
        SimpleFormula::Eq(a, b) => Ok((l..l + per)
            .filter(|&i| p.contains(i))
            .all(|i| a.value_at(i) == b.value_at(i))),
        SimpleFormula::Mem(a, b) => Ok((l..l + per)
            .filter(|&i| p.contains(i))
            .all(|i| b.value_at(i).contains(&a.value_at(i)))),
        SimpleFormula::St(a) => {
            let values: BTreeSet<HFSet> = (l..l + per)
                .filter(|&i| p.contains(i))
                .map(|i| a.value_at(i))
                .collect();
            Ok(values.len() == 1)
        }
        SimpleFormula::Not(f) => match f.as_ref() {
            SimpleFormula::Eq(a, b) => Ok((l..l + per)
                .filter(|&i| p.contains(i))
                .all(|i| a.value_at(i) != b.value_at(i))),
            SimpleFormula::Mem(a, b) => Ok((l..l + per)
                .filter(|&i| p.contains(i))
                .all(|i| !b.value_at(i).contains(&a.value_at(i)))),
            // Some periodic value recurs unboundedly in p, so a restriction
            // forcing standardness always exists.
            SimpleFormula::St(_) => Ok(false),
            SimpleFormula::Not(_) => Err(ForcingError::Internal {
                detail: "nested negation is outside the simplified calculus".to_string(),
            }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parity() -> SimpleName {
        SimpleName::new(vec![], vec![HFSet::empty(), HFSet::singleton(HFSet::empty())]).unwrap()
    }

    #[test]
    fn equality_on_a_parity_class() {
        let flag = parity();
        let zero = SimpleName::constant(HFSet::empty());
        let eq = SimpleFormula::Eq(flag.clone(), zero.clone());
        assert_eq!(simple_forces(&IndexSet::evens(), &eq), Ok(true));
        assert_eq!(simple_forces(&IndexSet::full(), &eq), Ok(false));
        assert_eq!(
            simple_forces(&IndexSet::odds(), &SimpleFormula::Not(Box::new(eq))),
            Ok(true)
        );
    }

    #[test]
    fn standardness_means_eventual_constancy() {
        assert_eq!(
            simple_forces(
                &IndexSet::full(),
                &SimpleFormula::St(SimpleName::constant(HFSet::von_neumann(2)))
            ),
            Ok(true)
        );
        assert_eq!(
            simple_forces(&IndexSet::full(), &SimpleFormula::St(parity())),
            Ok(false)
        );
        assert_eq!(
            simple_forces(&IndexSet::evens(), &SimpleFormula::St(parity())),
            Ok(true)
        );
        // A restriction forcing standardness always exists, so the negation
        // is never forced.
        assert_eq!(
            simple_forces(
                &IndexSet::full(),
                &SimpleFormula::Not(Box::new(SimpleFormula::St(parity())))
            ),
            Ok(false)
        );
    }

    #[test]
    fn membership_scans_the_window() {
        let one = SimpleName::new(
            vec![],
            vec![
                HFSet::singleton(HFSet::empty()),
                HFSet::singleton(HFSet::singleton(HFSet::empty())),
            ],
        )
        .unwrap();
        let zero = SimpleName::constant(HFSet::empty());
        let mem = SimpleFormula::Mem(zero, one);
        assert_eq!(simple_forces(&IndexSet::evens(), &mem), Ok(true));
        assert_eq!(simple_forces(&IndexSet::full(), &mem), Ok(false));
    }

    #[test]
    fn composition_matches_pullback() {
        // γ maps ℕ increasingly onto the evens; parity ∘ γ is constant.
        let gamma = Reindex::new(IndexSet::full(), IndexSet::evens()).unwrap();
        let pulled = parity().compose(&gamma).unwrap();
        assert_eq!(pulled, SimpleName::constant(HFSet::empty()));
        assert_eq!(
            simple_forces(&IndexSet::full(), &SimpleFormula::St(pulled)),
            simple_forces(&IndexSet::evens(), &SimpleFormula::St(parity())),
        );
    }
}
