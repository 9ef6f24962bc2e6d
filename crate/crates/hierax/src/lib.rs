//! Hierarchical reasoning in chains of local theory extensions.
//!
//! A base theory (dense linear orders, total orders, linear rational
//! arithmetic, or pure equality) is extended level by level with new
//! function symbols constrained by universal clauses. Ground satisfiability
//! in the extended theory is decided by instantiating the clauses over a
//! finite set of ground terms, flattening and purifying the result, and
//! handing the residue to the base theory. On top of that reduction the
//! crate synthesizes weakest universal constraints on designated parameter
//! symbols (symbol elimination by quantifier elimination) and computes
//! ground interpolants via two-sided amalgamation closures.

pub mod core;
pub mod base;
pub mod locality;
pub mod symelim;
pub mod interpolation;
pub mod frontend;
