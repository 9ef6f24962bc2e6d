//! Structural analysis of clause sets relative to one extension level:
//! extension ground terms (the default instantiation set) and
//! flatness/linearity classification.

use super::formula::Clause;
use super::signature::Signature;
use super::term::{Term, TermNode};
use std::collections::BTreeSet;

/// Ground terms rooted at a level-`level` extension symbol occurring anywhere
/// in the given clauses (nested occurrences included). Arity-0 declared
/// symbols count: a clause mentioning such a constant forces it into every
/// instantiation set.
pub fn est_terms<'a>(
    clauses: impl IntoIterator<Item = &'a Clause>,
    sig: &Signature,
    level: usize,
) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for c in clauses {
        for t in c.subterms() {
            if !t.is_ground() {
                continue;
            }
            let rooted = match t.node() {
                TermNode::App(f, _) => sig.level_of(f) == Some(level),
                TermNode::Const(c) => sig.level_of(c) == Some(level),
                _ => false,
            };
            if rooted {
                out.insert(t);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flatness {
    Flat,
    QuasiFlat,
    NonFlat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseShape {
    pub ground: bool,
    pub flatness: Flatness,
    pub linear: bool,
    /// Every variable of the clause occurs below some level-Σ function —
    /// the condition that makes all instances of the clause ground.
    pub vars_covered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatLinearReport {
    pub shapes: Vec<ClauseShape>,
}

impl FlatLinearReport {
    pub fn all_flat(&self) -> bool {
        self.shapes.iter().all(|s| s.flatness == Flatness::Flat)
    }

    pub fn all_linear(&self) -> bool {
        self.shapes.iter().all(|s| s.linear)
    }

    pub fn all_vars_covered(&self) -> bool {
        self.shapes.iter().all(|s| s.vars_covered)
    }
}

/// Classifies each clause as flat / quasi-flat / non-flat and linear or not
/// with respect to the level-`level` extension symbols.
///
/// A non-ground clause is flat when every argument of a Σ-rooted term is a
/// variable, and quasi-flat when arguments are variables or ground
/// extension-free terms. A ground clause is flat when the arguments are
/// constants. Linearity: a variable (constant, for ground clauses) occurring
/// in two distinct Σ-rooted terms, or twice in one, breaks it.
pub fn check_flat_linear(clauses: &[Clause], sig: &Signature, level: usize) -> FlatLinearReport {
    let shapes = clauses
        .iter()
        .map(|c| classify_clause(c, sig, level))
        .collect();
    FlatLinearReport { shapes }
}

fn is_level_rooted(t: &Term, sig: &Signature, level: usize) -> bool {
    match t.node() {
        TermNode::App(f, _) => sig.level_of(f) == Some(level),
        _ => false,
    }
}

fn contains_extension_function(t: &Term, sig: &Signature) -> bool {
    match t.node() {
        TermNode::App(f, args) => {
            (sig.is_extension(f) && sig.lookup(f).map(|d| d.arity > 0) == Some(true))
                || args.iter().any(|a| contains_extension_function(a, sig))
        }
        _ => false,
    }
}

fn classify_clause(c: &Clause, sig: &Signature, level: usize) -> ClauseShape {
    let ground = c.is_ground();
    // Distinct Σ-rooted subterms (maximal or nested, each counted once).
    let ext_terms: Vec<Term> = c
        .subterms()
        .into_iter()
        .filter(|t| is_level_rooted(t, sig, level))
        .collect();

    let mut flatness = Flatness::Flat;
    for t in &ext_terms {
        for a in t.args() {
            let arg_ok_flat = if ground {
                matches!(a.node(), TermNode::Const(_) | TermNode::Num(_))
            } else {
                a.is_var()
            };
            if arg_ok_flat {
                continue;
            }
            let arg_ok_quasi = a.is_ground() && !contains_extension_function(a, sig);
            flatness = match (flatness, arg_ok_quasi) {
                (_, false) => Flatness::NonFlat,
                (Flatness::NonFlat, _) => Flatness::NonFlat,
                _ => Flatness::QuasiFlat,
            };
            if flatness == Flatness::NonFlat {
                break;
            }
        }
    }

    let keys = |t: &Term| -> Vec<String> {
        // Leaf occurrences that drive linearity: variables for non-ground
        // clauses, constants for ground ones (with multiplicity).
        let mut out = Vec::new();
        fn walk(t: &Term, ground: bool, out: &mut Vec<String>) {
            match t.node() {
                TermNode::Var(v) if !ground => out.push(v.clone()),
                TermNode::Const(c) if ground => out.push(c.clone()),
                TermNode::App(_, args) => {
                    for a in args {
                        walk(a, ground, out);
                    }
                }
                _ => {}
            }
        }
        walk(t, ground, &mut out);
        out
    };

    let mut linear = true;
    // (i) the same leaf in two distinct Σ-rooted terms
    for (i, t) in ext_terms.iter().enumerate() {
        let keys_t: BTreeSet<String> = keys(t).into_iter().collect();
        for u in ext_terms.iter().skip(i + 1) {
            let keys_u: BTreeSet<String> = keys(u).into_iter().collect();
            if keys_t.intersection(&keys_u).next().is_some() {
                linear = false;
            }
        }
        // (ii) the same leaf twice within one Σ-rooted term
        let occs = keys(t);
        let distinct: BTreeSet<&String> = occs.iter().collect();
        if distinct.len() != occs.len() {
            linear = false;
        }
    }

    let covered_vars: BTreeSet<String> = ext_terms
        .iter()
        .flat_map(|t| t.vars())
        .collect();
    let vars_covered = c.vars().iter().all(|v| covered_vars.contains(v));

    ClauseShape { ground, flatness, linear, vars_covered }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::formula::{Literal, Rel};
    use crate::core::term::TermPool;

    fn sig_fgh() -> Signature {
        let mut sig = Signature::new();
        sig.declare("f", 1, 1).unwrap();
        sig.declare("g", 1, 1).unwrap();
        sig.declare("h", 1, 1).unwrap();
        sig
    }

    #[test]
    fn est_collects_nested_ground_extension_terms() {
        let p = TermPool::new();
        let sig = sig_fgh();
        // d <= g(a)  and  f(b) occurring nested in  f(b) <= c
        let c1 = Clause::unit(Literal::pos(Rel::Le, p.cst("d"), p.app("g", vec![p.cst("a")])));
        let c2 = Clause::unit(Literal::pos(Rel::Le, p.app("f", vec![p.cst("b")]), p.cst("c")));
        let est = est_terms([&c1, &c2], &sig, 1);
        assert_eq!(est.len(), 2);
        assert!(est.contains(&p.app("g", vec![p.cst("a")])));
        assert!(est.contains(&p.app("f", vec![p.cst("b")])));
    }

    #[test]
    fn est_ignores_non_ground_and_other_levels() {
        let p = TermPool::new();
        let mut sig = sig_fgh();
        sig.declare("k", 1, 2).unwrap();
        let c = Clause::new(vec![
            Literal::pos(Rel::Le, p.app("f", vec![p.var("x")]), p.var("x")),
            Literal::pos(Rel::Le, p.app("k", vec![p.cst("a")]), p.cst("a")),
        ]);
        assert!(est_terms([&c], &sig, 1).is_empty());
        assert_eq!(est_terms([&c], &sig, 2).len(), 1);
    }

    #[test]
    fn est_includes_declared_constants() {
        let p = TermPool::new();
        let mut sig = Signature::new();
        sig.declare("c", 0, 1).unwrap();
        sig.declare("f", 1, 1).unwrap();
        let c = Clause::unit(Literal::pos(Rel::Le, p.cst("c"), p.app("f", vec![p.cst("a")])));
        let est = est_terms([&c], &sig, 1);
        assert!(est.contains(&p.cst("c")));
        assert!(est.contains(&p.app("f", vec![p.cst("a")])));
    }

    #[test]
    fn sgc_clause_is_flat_but_not_linear_wrt_both_functions() {
        // x <= g(y) -> f(x) <= y : flat; x and y each occur in only one
        // Σ-term, so it is linear w.r.t. {f,g} — but the monotonicity shape
        // x <= c -> g(x) =? f(x) shares x between g(x) and f(x).
        let p = TermPool::new();
        let sig = sig_fgh();
        let shared = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.cst("c")),
            Literal::pos(Rel::Eq, p.app("g", vec![p.var("x")]), p.app("f", vec![p.var("x")])),
        ]);
        let rep = check_flat_linear(&[shared], &sig, 1);
        assert_eq!(rep.shapes[0].flatness, Flatness::Flat);
        assert!(!rep.shapes[0].linear);
        assert!(rep.shapes[0].vars_covered);
    }

    #[test]
    fn linear_when_levels_separate_the_functions() {
        // Same clause, but f,h at level 1 and g at level 2: w.r.t. level 2
        // the only Σ-term is g(x), which is flat and linear.
        let p = TermPool::new();
        let mut sig = Signature::new();
        sig.declare("f", 1, 1).unwrap();
        sig.declare("g", 1, 2).unwrap();
        let shared = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.cst("c")),
            Literal::pos(Rel::Eq, p.app("g", vec![p.var("x")]), p.app("f", vec![p.var("x")])),
        ]);
        let rep = check_flat_linear(&[shared], &sig, 2);
        assert_eq!(rep.shapes[0].flatness, Flatness::Flat);
        assert!(rep.shapes[0].linear);
        assert!(rep.shapes[0].vars_covered);
    }

    #[test]
    fn two_binder_clause_flat_and_linear() {
        // x <= g(y) -> f(x) <= y  w.r.t. {f,g}
        let p = TermPool::new();
        let sig = sig_fgh();
        let sgc = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.app("g", vec![p.var("y")])),
            Literal::pos(Rel::Le, p.app("f", vec![p.var("x")]), p.var("y")),
        ]);
        let rep = check_flat_linear(&[sgc], &sig, 1);
        assert_eq!(rep.shapes[0].flatness, Flatness::Flat);
        assert!(rep.shapes[0].linear);
        assert!(rep.shapes[0].vars_covered);
    }

    #[test]
    fn nested_extension_argument_is_non_flat() {
        let p = TermPool::new();
        let sig = sig_fgh();
        let c = Clause::unit(Literal::pos(
            Rel::Le,
            p.app("f", vec![p.app("g", vec![p.var("x")])]),
            p.var("x"),
        ));
        let rep = check_flat_linear(&[c], &sig, 1);
        assert_eq!(rep.shapes[0].flatness, Flatness::NonFlat);
    }

    #[test]
    fn ground_flatness_uses_constants() {
        let p = TermPool::new();
        let sig = sig_fgh();
        let flat = Clause::unit(Literal::pos(Rel::Le, p.app("f", vec![p.cst("a")]), p.cst("b")));
        let rep = check_flat_linear(&[flat], &sig, 1);
        assert!(rep.shapes[0].ground);
        assert_eq!(rep.shapes[0].flatness, Flatness::Flat);
        assert!(rep.shapes[0].linear);

        // a occurs in two distinct Σ-terms: ground but not linear.
        let nonlin = Clause::unit(Literal::pos(
            Rel::Le,
            p.app("f", vec![p.cst("a")]),
            p.app("g", vec![p.cst("a")]),
        ));
        let rep = check_flat_linear(&[nonlin], &sig, 1);
        assert!(!rep.shapes[0].linear);
    }

    #[test]
    fn uncovered_variable_is_reported() {
        let p = TermPool::new();
        let sig = sig_fgh();
        let c = Clause::new(vec![
            Literal::pos(Rel::Le, p.app("f", vec![p.var("x")]), p.var("z")),
        ]);
        let rep = check_flat_linear(&[c], &sig, 1);
        assert!(!rep.shapes[0].vars_covered);
    }
}
