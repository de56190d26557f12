//! Executable infinitesimal analysis on exact rationals.
//!
//! The crate has four layers:
//!
//! * [`hyper`] — a truncated fragment of the field of rational-coefficient
//!   power series in a designated infinitesimal `eps`: exact arithmetic,
//!   ordering, classification, shadows (standard parts), and a 0/1 decimal
//!   coding of bit sequences.
//! * [`calculus`] — derivatives as shadows of difference quotients, Riemann
//!   integrals as closed-form hyperfinite sums with certified infinitesimal
//!   remainders, tagged-sum comparisons, Euler polygons on exact rational
//!   grids, interval-union measures, a sigma-subadditivity ledger, and a
//!   Frechet differential check.
//! * [`formula`] — a small first-order language with plain, standard, and
//!   infinitesimal quantifiers; a rewriter that normalizes supported
//!   quantifier prefixes into standard-quantifier prefix form with a
//!   replayable trace; and a finite-grid refutation semantics.
//! * [`forcing`] — desk-scale forcing over eventually periodic index sets and
//!   fibers of tuples of hereditarily finite sets: an exact almost-everywhere
//!   evaluator, a clause-by-clause forcing checker over enumerated condition
//!   spaces, and the classical condition constructions (constant columns,
//!   diagonal names, membership deciders, projections, amalgamation,
//!   thickness analysis, fiber splitting).
//!
//! The `cli` module backs the `infinilab` binary, which exposes each
//! capability as a subcommand.

pub mod calculus;
pub mod cli;
pub mod expr;
pub mod forcing;
pub mod formula;
pub mod hyper;
pub mod rational;
