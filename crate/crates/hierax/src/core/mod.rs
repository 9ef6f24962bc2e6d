//! Core syntax: terms, literals, clauses, formulas, signatures.

pub mod term;
pub mod formula;
pub mod signature;
pub mod analysis;

pub use term::{FreshGen, Term, TermNode, TermPool};
pub use formula::{clausify, Clause, Formula, Literal, Rel, Substitution};
pub use signature::{FuncDecl, Signature};
pub use analysis::{check_flat_linear, est_terms, ClauseShape, FlatLinearReport, Flatness};
