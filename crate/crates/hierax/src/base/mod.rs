//! Base theories and their decision machinery.
//!
//! Four base theories are built in: dense linear orders without endpoints
//! (`DLO`), plain total orders (`TOrd`), linear rational arithmetic (`LRA`),
//! and pure equality (`EQ`). `DLO` and `LRA` admit quantifier elimination
//! directly; `TOrd` and `EQ` are handled in their model completions (`DLO`
//! and the theory of an infinite set), which decides satisfiability of
//! ground problems because satisfiability transfers between a universal
//! theory and any co-theory of it.
//!
//! Three decision paths are provided. The production eliminator ([`qe`])
//! works disjunct by disjunct on a disjunctive normal form, combining lower
//! and upper bounds (Fourier–Motzkin for `LRA`). The entailment checker
//! ([`decide_entails`]) decides satisfiability by virtual-substitution-style
//! test-point search and shares no elimination logic with the production
//! path, so the two can cross-check each other. Ground satisfiability
//! ([`decide_ground_sat`], [`decide_ground_entails`]) is decided by a branch
//! search with exact conjunction tests, which scales to the clause sets that
//! hierarchical reduction produces.

pub mod atoms;
mod dnf_qe;
mod ground;
mod vs_qe;

use crate::core::{Clause, Formula, Literal, Rel, Term, TermNode, TermPool};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseTheoryId {
    Dlo,
    TOrd,
    Lra,
    Eq,
}

impl BaseTheoryId {
    pub fn name(self) -> &'static str {
        match self {
            BaseTheoryId::Dlo => "DLO",
            BaseTheoryId::TOrd => "TOrd",
            BaseTheoryId::Lra => "LRA",
            BaseTheoryId::Eq => "EQ",
        }
    }

    pub fn parse(s: &str) -> Option<BaseTheoryId> {
        match s {
            "DLO" => Some(BaseTheoryId::Dlo),
            "TOrd" => Some(BaseTheoryId::TOrd),
            "LRA" => Some(BaseTheoryId::Lra),
            "EQ" => Some(BaseTheoryId::Eq),
            _ => None,
        }
    }

    /// Does the theory itself eliminate quantifiers, or only its model
    /// completion?
    pub fn has_native_qe(self) -> bool {
        matches!(self, BaseTheoryId::Dlo | BaseTheoryId::Lra)
    }

    /// Human-readable description of where elimination actually runs.
    pub fn qe_label(self) -> &'static str {
        match self {
            BaseTheoryId::Dlo => "DLO",
            BaseTheoryId::TOrd => "DLO (model completion of TOrd)",
            BaseTheoryId::Lra => "LRA",
            BaseTheoryId::Eq => "infinite-set theory (model completion of EQ)",
        }
    }

    /// Engine family used by both eliminators.
    pub(crate) fn engine(self) -> Engine {
        match self {
            BaseTheoryId::Dlo | BaseTheoryId::TOrd => Engine::Order,
            BaseTheoryId::Lra => Engine::Linear,
            BaseTheoryId::Eq => Engine::PureEq,
        }
    }

    /// Order atoms (`<=`, `<`) make sense in this theory.
    pub fn has_order(self) -> bool {
        self != BaseTheoryId::Eq
    }

    /// Numeric literals make sense in this theory.
    pub fn has_numerals(self) -> bool {
        self == BaseTheoryId::Lra
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Engine {
    Order,
    Linear,
    PureEq,
}

#[derive(Debug, Clone)]
pub struct QeConfig {
    /// Hard cap on disjuncts produced by normal-form expansion; exceeding it
    /// is an engine-limit error, not a wrong answer.
    pub max_disjuncts: usize,
}

impl Default for QeConfig {
    fn default() -> Self {
        QeConfig { max_disjuncts: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QeError {
    NonLinearAtom(String),
    UnsupportedPredicate { theory: &'static str, lit: String },
    NonBaseSymbol { theory: &'static str, term: String },
    DisjunctCap(usize),
    NotGround(String),
    Unsupported(String),
}

impl fmt::Display for QeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QeError::NonLinearAtom(t) => write!(f, "non-linear term `{t}`"),
            QeError::UnsupportedPredicate { theory, lit } => {
                write!(f, "predicate of `{lit}` is not part of {theory}")
            }
            QeError::NonBaseSymbol { theory, term } => {
                write!(f, "term `{term}` uses symbols outside {theory}")
            }
            QeError::DisjunctCap(n) => {
                write!(f, "normal-form expansion exceeded the {n}-disjunct cap")
            }
            QeError::NotGround(what) => write!(f, "{what} must be ground"),
            QeError::Unsupported(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for QeError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Sat => write!(f, "SAT"),
            Verdict::Unsat => write!(f, "UNSAT"),
        }
    }
}

/// Quantifier elimination (production engine). The result is
/// quantifier-free and equivalent to the input in the theory (for `TOrd`
/// and `EQ`: in the model completion, which preserves satisfiability of the
/// ground problems this crate produces). Free symbols of the output are a
/// subset of the input's.
pub fn qe(theory: BaseTheoryId, pool: &TermPool, f: &Formula, cfg: &QeConfig) -> Result<Formula, QeError> {
    validate_base_formula(theory, f)?;
    dnf_qe::eliminate(theory, pool, f, cfg)
}

/// Satisfiability of a set of ground clauses w.r.t. the base theory
/// (constants read existentially), by branch search with exact conjunction
/// tests.
pub fn decide_ground_sat(
    theory: BaseTheoryId,
    pool: &TermPool,
    clauses: &[Clause],
    cfg: &QeConfig,
) -> Result<Verdict, QeError> {
    for c in clauses {
        if !c.is_ground() {
            return Err(QeError::NotGround(format!("clause {c}")));
        }
    }
    let f = Formula::and(clauses.iter().map(Clause::to_formula).collect());
    decide_ground_formula_sat(theory, pool, &f, cfg)
}

/// Satisfiability of a ground (possibly quantified) formula. Quantified
/// subformulas are eliminated first; the quantifier-free remainder is
/// decided by branch search.
pub fn decide_ground_formula_sat(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Verdict, QeError> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(QeError::NotGround(format!("formula with free variable `{v}`")));
    }
    validate_base_formula(theory, f)?;
    ground::decide_sat(theory, pool, f, cfg)
}

/// Entailment `T |= phi -> psi` for ground quantifier-free formulas, decided
/// by the branch-search engine. Unlike [`decide_entails`] this handles the
/// large conjunctions-of-clauses the reduction layers produce: no
/// disjunctive normal form is ever materialized, and a conjunction on the
/// right decomposes into one query per conjunct, so each query starts from
/// the conjunct's negation as unit facts.
pub fn decide_ground_entails(
    theory: BaseTheoryId,
    pool: &TermPool,
    phi: &Formula,
    psi: &Formula,
    cfg: &QeConfig,
) -> Result<bool, QeError> {
    let full = Formula::and(vec![phi.clone(), Formula::not(psi.clone())]);
    if !full.is_quantifier_free() {
        return Err(QeError::Unsupported(
            "ground entailment requires quantifier-free formulas".into(),
        ));
    }
    if let Some(v) = full.free_vars().into_iter().next() {
        return Err(QeError::NotGround(format!("formula with free variable `{v}`")));
    }
    validate_base_formula(theory, &full)?;
    let conjuncts: Vec<Formula> = match psi {
        Formula::And(fs) => fs.clone(),
        other => vec![other.clone()],
    };
    for c in conjuncts {
        let query = Formula::and(vec![phi.clone(), Formula::not(c)]);
        if ground::decide_sat(theory, pool, &query, cfg)? == Verdict::Sat {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Entailment `T |= forall (phi -> psi)` (free variables and constants
/// universally read). Decided by the independent virtual-substitution
/// engine; for closed inputs this bottoms out in literal evaluation.
pub fn decide_entails(
    theory: BaseTheoryId,
    pool: &TermPool,
    phi: &Formula,
    psi: &Formula,
    cfg: &QeConfig,
) -> Result<bool, QeError> {
    let query = Formula::and(vec![phi.clone(), Formula::not(psi.clone())]);
    validate_base_formula(theory, &query)?;
    Ok(vs_qe::decide_sat(theory, pool, &query, cfg)? == Verdict::Unsat)
}

/// Exhaustive oracle for ground order/equality clause sets: assigns the k
/// constants to positions in a chain of length `min(n, k)` (collisions
/// allowed) and evaluates. Complete for `TOrd`/`EQ` ground problems when
/// `n >= k` because a satisfying model restricts to a total order on the
/// constants' values.
///
/// Panics if a clause contains non-leaf terms — the oracle is only meant
/// for flattened base clauses.
pub fn finite_order_oracle(clauses: &[Clause], n: usize) -> Verdict {
    let mut consts: Vec<String> = Vec::new();
    for c in clauses {
        for l in c.lits() {
            for t in l.terms() {
                match t.node() {
                    TermNode::Const(name) => {
                        if !consts.contains(name) {
                            consts.push(name.clone());
                        }
                    }
                    TermNode::Var(_) | TermNode::Num(_) | TermNode::App(..) => {
                        panic!("finite_order_oracle requires ground clauses over constants")
                    }
                }
            }
        }
    }
    consts.sort();
    let k = consts.len();
    if k == 0 {
        // No atoms at all: an empty clause is unsatisfiable, otherwise SAT.
        return if clauses.iter().any(|c| c.lits().is_empty()) {
            Verdict::Unsat
        } else {
            Verdict::Sat
        };
    }
    let m = n.max(1).min(k);
    let index: BTreeMap<&str, usize> =
        consts.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut ranks = vec![0usize; k];
    loop {
        let assignment_ok = clauses.iter().all(|c| {
            c.lits().iter().any(|l| {
                let rank = |t: &Term| match t.node() {
                    TermNode::Const(name) => ranks[index[name.as_str()]],
                    _ => unreachable!(),
                };
                let (a, b) = (rank(&l.lhs), rank(&l.rhs));
                let holds = match l.rel {
                    Rel::Eq => a == b,
                    Rel::Le => a <= b,
                    Rel::Lt => a < b,
                };
                holds == l.positive
            })
        });
        if assignment_ok {
            return Verdict::Sat;
        }
        // next assignment in base-m counting
        let mut i = 0;
        loop {
            if i == k {
                return Verdict::Unsat;
            }
            ranks[i] += 1;
            if ranks[i] < m {
                break;
            }
            ranks[i] = 0;
            i += 1;
        }
    }
}

/// Equivalence-preserving cleanup of a quantifier-free formula (applied to
/// quantifier matrices otherwise): disjunctive normal form with
/// trivially-true literals dropped, contradictory or theory-unsatisfiable
/// disjuncts removed, bound pairs merged (`a<=b, b<=a` to `a=b`;
/// `a<=b, a!=b` to `a<b`), and subsumed disjuncts pruned.
pub fn simplify(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    validate_base_formula(theory, f)?;
    let sat = |lits: &[Literal]| decide_lits_sat(theory, pool, lits, cfg);
    let out = simplify_with(theory, f, cfg, &sat)?;
    #[cfg(debug_assertions)]
    {
        if f.free_vars().is_empty()
            && f.constants().len() <= 8
            && formula_size(f) <= 40
        {
            assert!(
                decide_entails(theory, pool, f, &out, cfg)?
                    && decide_entails(theory, pool, &out, f, cfg)?,
                "simplify changed the {} meaning of {f}",
                theory.name()
            );
        }
    }
    Ok(out)
}

/// [`simplify`] with a caller-supplied satisfiability test for literal
/// conjunctions — used by the reduction layers to prune with extension
/// functions present (flatten + congruence + base decision).
pub fn simplify_with(
    theory: BaseTheoryId,
    f: &Formula,
    cfg: &QeConfig,
    disjunct_sat: &dyn Fn(&[Literal]) -> Result<bool, QeError>,
) -> Result<Formula, QeError> {
    match f {
        Formula::Exists(vs, g) => Ok(Formula::exists(
            vs.clone(),
            simplify_with(theory, g, cfg, disjunct_sat)?,
        )),
        Formula::Forall(vs, g) => Ok(Formula::forall(
            vs.clone(),
            simplify_with(theory, g, cfg, disjunct_sat)?,
        )),
        _ if f.is_quantifier_free() => simplify_qf(theory, f, cfg, disjunct_sat),
        Formula::Not(g) => Ok(Formula::not(simplify_with(theory, g, cfg, disjunct_sat)?)),
        Formula::And(fs) => Ok(Formula::and(
            fs.iter()
                .map(|g| simplify_with(theory, g, cfg, disjunct_sat))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Or(fs) => Ok(Formula::or(
            fs.iter()
                .map(|g| simplify_with(theory, g, cfg, disjunct_sat))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Implies(p, q) => Ok(Formula::implies(
            simplify_with(theory, p, cfg, disjunct_sat)?,
            simplify_with(theory, q, cfg, disjunct_sat)?,
        )),
        _ => unreachable!("quantifier-free formulas handled above"),
    }
}

fn simplify_qf(
    _theory: BaseTheoryId,
    f: &Formula,
    cfg: &QeConfig,
    disjunct_sat: &dyn Fn(&[Literal]) -> Result<bool, QeError>,
) -> Result<Formula, QeError> {
    let disjuncts = f
        .dnf(cfg.max_disjuncts)
        .map_err(|e| QeError::DisjunctCap(e.0))?;
    let mut kept: Vec<Vec<Literal>> = Vec::new();
    'next: for lits in disjuncts {
        let mut lits = match normalize_conjunct(lits) {
            Some(l) => l,
            None => continue 'next, // structurally contradictory
        };
        if !disjunct_sat(&lits)? {
            continue 'next;
        }
        lits.sort();
        if !kept.contains(&lits) {
            kept.push(lits);
        }
    }
    // subsumption: a disjunct whose literal set contains another is redundant
    let snapshot = kept.clone();
    kept.retain(|d| {
        !snapshot
            .iter()
            .any(|other| other != d && other.iter().all(|l| d.contains(l)))
    });
    kept.sort();
    Ok(Formula::or(
        kept.into_iter()
            .map(|lits| Formula::and(lits.into_iter().map(Formula::Atom).collect()))
            .collect(),
    ))
}

/// Structural cleanup of a literal conjunction: trivial literals dropped,
/// bound pairs merged. Returns `None` when the conjunction is contradictory
/// on structural grounds alone.
pub fn normalize_conjunct(lits: Vec<Literal>) -> Option<Vec<Literal>> {
    #[derive(Default)]
    struct PairFlags {
        eq: bool,
        ne: bool,
        le_fwd: bool,
        le_bwd: bool,
        lt_fwd: bool,
        lt_bwd: bool,
    }

    let mut pairs: BTreeMap<(Term, Term), PairFlags> = BTreeMap::new();
    for l in lits {
        match literal_trivial(&l) {
            Some(true) => continue,
            Some(false) => return None,
            None => {}
        }
        // canonical orientation: smaller term first
        let (a, b, fwd) = if l.lhs <= l.rhs {
            (l.lhs.clone(), l.rhs.clone(), true)
        } else {
            (l.rhs.clone(), l.lhs.clone(), false)
        };
        let flags = pairs.entry((a, b)).or_default();
        match (l.positive, l.rel, fwd) {
            (true, Rel::Eq, _) => flags.eq = true,
            (false, Rel::Eq, _) => flags.ne = true,
            (true, Rel::Le, true) | (false, Rel::Lt, false) => flags.le_fwd = true,
            (true, Rel::Le, false) | (false, Rel::Lt, true) => flags.le_bwd = true,
            (true, Rel::Lt, true) | (false, Rel::Le, false) => flags.lt_fwd = true,
            (true, Rel::Lt, false) | (false, Rel::Le, true) => flags.lt_bwd = true,
        }
    }

    let mut out = Vec::new();
    for ((a, b), mut f) in pairs {
        if f.le_fwd && f.le_bwd {
            f.eq = true;
            f.le_fwd = false;
            f.le_bwd = false;
        }
        if f.eq && (f.ne || f.lt_fwd || f.lt_bwd) {
            return None;
        }
        if f.lt_fwd && (f.lt_bwd || f.le_bwd) {
            return None;
        }
        if f.lt_bwd && f.le_fwd {
            return None;
        }
        if f.ne && f.le_fwd {
            f.lt_fwd = true;
            f.ne = false;
            f.le_fwd = false;
        }
        if f.ne && f.le_bwd {
            f.lt_bwd = true;
            f.ne = false;
            f.le_bwd = false;
        }
        if f.lt_fwd || f.lt_bwd {
            f.ne = false;
            f.le_fwd = false;
            f.le_bwd = false;
        }
        if f.eq {
            out.push(Literal::pos(Rel::Eq, a.clone(), b.clone()));
        }
        if f.ne {
            out.push(Literal::neg(Rel::Eq, a.clone(), b.clone()));
        }
        if f.le_fwd {
            out.push(Literal::pos(Rel::Le, a.clone(), b.clone()));
        }
        if f.le_bwd {
            out.push(Literal::pos(Rel::Le, b.clone(), a.clone()));
        }
        if f.lt_fwd {
            out.push(Literal::pos(Rel::Lt, a.clone(), b.clone()));
        }
        if f.lt_bwd {
            out.push(Literal::pos(Rel::Lt, b.clone(), a.clone()));
        }
    }
    Some(out)
}

/// Truth of a literal decided by structure alone (identical sides, numeric
/// comparisons).
pub fn literal_trivial(l: &Literal) -> Option<bool> {
    if let (TermNode::Num(a), TermNode::Num(b)) = (l.lhs.node(), l.rhs.node()) {
        let holds = match l.rel {
            Rel::Eq => a == b,
            Rel::Le => a <= b,
            Rel::Lt => a < b,
        };
        return Some(holds == l.positive);
    }
    if l.lhs == l.rhs {
        let holds = matches!(l.rel, Rel::Eq | Rel::Le);
        return Some(holds == l.positive);
    }
    None
}

/// Satisfiability of a literal conjunction (free variables and constants
/// both read existentially), via the exact conjunction tests of the
/// branch-search engine.
pub fn decide_lits_sat(
    theory: BaseTheoryId,
    _pool: &TermPool,
    lits: &[Literal],
    cfg: &QeConfig,
) -> Result<bool, QeError> {
    match theory.engine() {
        Engine::Order | Engine::PureEq => {
            let atoms: Vec<atoms::OrdLit> = lits
                .iter()
                .map(|l| atoms::ord_lit(theory, l))
                .collect::<Result<_, _>>()?;
            Ok(ground::ord_feasible(&atoms))
        }
        Engine::Linear => {
            let atoms: Vec<atoms::LinLit> =
                lits.iter().map(atoms::lin_lit).collect::<Result<_, _>>()?;
            ground::lin_feasible(&atoms, cfg)
        }
    }
}

/// Replaces every free constant with a fresh existential variable.
pub(crate) fn close_constants(pool: &TermPool, f: &Formula) -> (Formula, BTreeMap<String, String>) {
    let consts = f.constants();
    let mut map = BTreeMap::new();
    let mut term_map = BTreeMap::new();
    for (i, c) in consts.iter().enumerate() {
        let v = format!("?c{i}");
        map.insert(c.clone(), v.clone());
        term_map.insert(c.clone(), pool.var(v));
    }
    let body = f.replace_constants(pool, &term_map);
    let vars: Vec<String> = map.values().cloned().collect();
    (Formula::exists(vars, body), map)
}

fn formula_size(f: &Formula) -> usize {
    let mut n = 0;
    f.visit_literals(&mut |_| n += 1);
    n
}

/// Validates that a formula only uses the base theory's syntax.
pub fn validate_base_formula(theory: BaseTheoryId, f: &Formula) -> Result<(), QeError> {
    let mut err = None;
    f.visit_literals(&mut |l| {
        if err.is_some() {
            return;
        }
        let check = match theory.engine() {
            Engine::Order | Engine::PureEq => atoms::ord_lit(theory, l).map(|_| ()),
            Engine::Linear => atoms::lin_lit(l).map(|_| ()),
        };
        if let Err(e) = check {
            err = Some(e);
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
