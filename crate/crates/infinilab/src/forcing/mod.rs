//! A desk-scale condition algebra: eventually periodic index sets, fibers of
//! tuple values over a finite set universe, a forcing relation with both a
//! pointwise and a clausal evaluator, the named constructions built on top of
//! them, and the thick/thin combinatorics for families of finite sets.

mod clausal;
mod constructions;
mod fiber;
mod formula;
mod hfset;
mod index_set;
mod los;
mod simple;
mod thickness;

pub use clausal::{enumerate_conditions, forces_clausal, ClausalVerdict, SpaceCaps};
pub use constructions::{
    decide_atomic, decide_membership, diag_name, fix_constant, pseudo_generic, split_fibers,
    standard_part_name, DenseRule, SplitReport, SplitStage,
};
pub use fiber::{Condition, Fiber, FiberRep, Reindex, RuleTerm, Tuple, ValueSet};
pub use formula::{SetFormula, SetTerm};
pub use hfset::HFSet;
pub use index_set::IndexSet;
pub use los::forces_los;
pub use simple::{simple_forces, SimpleFormula, SimpleName};
pub use thickness::{
    diagonal_thick, thickness_nu, DiagonalReport, FamilyRule, FinFamily, ThickOutcome,
    ThicknessRow,
};

use thiserror::Error;

/// Default rank bound for the finite set universe quantifiers range over.
pub const DEFAULT_UNIVERSE_RANK: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForcingError {
    /// A name index in the formula is not below the fiber rank.
    #[error("name index {index} is not below fiber rank {rank}")]
    RankSideCondition { index: usize, rank: usize },
    /// A check on a generative fiber has no certificate; the honest answer is
    /// "unknown", reported as an error so boolean results stay boolean.
    #[error("no certificate for {what}; result is undecided")]
    Uncertified { what: String },
    #[error("index set of a condition must be unbounded")]
    BoundedIndexSet,
    #[error("fiber values must be nonempty")]
    EmptyFiberValue,
    #[error("tuple of length {len} does not match fiber rank {rank}")]
    TupleLength { len: usize, rank: usize },
    #[error("invalid transform: {detail}")]
    InvalidTransform { detail: String },
    #[error("rule {rule:?} produced a condition that does not extend its input")]
    ContractViolation { rule: String },
    #[error("membership of {n} is not decided by the condition")]
    Undecided { n: usize },
    #[error("chain member {pos} is thin at m = {m}")]
    ThinLink { pos: usize, m: usize },
    #[error("bounded-occurrence property fails: {detail}")]
    UnboundedValue { detail: String },
    /// The pointwise evaluator covers membership formulas only.
    #[error("standardness atoms have no pointwise reading")]
    StOutsidePointwise,
    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
    #[error("internal invariant violated: {detail}")]
    Internal { detail: String },
}

pub type Result<T> = std::result::Result<T, ForcingError>;
