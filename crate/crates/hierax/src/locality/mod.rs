//! Hierarchical reduction of ground satisfiability over a chain of theory
//! extensions to the base theory.
//!
//! A chain declares extension function symbols level by level, each level
//! axiomatized by clauses whose variables all occur below that level's
//! functions. Reduction proceeds from the top level down: the level's axioms
//! are instantiated over the ground extension terms of the current goal,
//! the instances and the goal are flattened and purified (every term rooted
//! at a current-level function is replaced by a fresh constant, recorded as
//! a definition), and congruence instances for same-function definition
//! pairs are added. The result of the last step is a set of ground clauses
//! over the base signature, decided by the [`crate::base`] engines. The
//! verdict is faithful to the original problem whenever each extension in
//! the chain is local for the instantiation sets used — an assumption the
//! caller declares, not something this module proves.

use crate::base::{self, BaseTheoryId, QeConfig, QeError, Verdict};
use crate::core::signature::SignatureError;
use crate::core::{
    check_flat_linear, est_terms, Clause, Flatness, FreshGen, Literal, Rel, Signature,
    Substitution, Term, TermNode, TermPool,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

// ---------------------------------------------------------------------------
// Theory specifications
// ---------------------------------------------------------------------------

/// One extension level: the function symbols it introduces (with arities;
/// arity 0 declares a signature constant) and the clauses axiomatizing them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub functions: Vec<(String, usize)>,
    pub axioms: Vec<Clause>,
}

/// Closure applied to the collected extension terms before instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosureOperator {
    /// Subterm closure: the collected terms together with all their
    /// subterms. Terms not rooted at a current-level function never match
    /// anything, so this is the identity as far as instantiation goes.
    #[default]
    Subterms,
}

impl ClosureOperator {
    pub fn apply(&self, terms: &BTreeSet<Term>) -> BTreeSet<Term> {
        match self {
            ClosureOperator::Subterms => {
                let mut out = BTreeSet::new();
                for t in terms {
                    t.collect_subterms(&mut out);
                }
                out
            }
        }
    }
}

/// A base theory extended by an ordered chain of extension levels, with a
/// designated set of parameter symbols (the extension symbols allowed to
/// survive symbol elimination).
#[derive(Debug, Clone)]
pub struct TheorySpec {
    base: BaseTheoryId,
    levels: Vec<Level>,
    params: BTreeSet<String>,
    closure: ClosureOperator,
    sig: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    Signature(SignatureError),
    /// A declared symbol is used with the wrong number of arguments.
    ArityMismatch { symbol: String, expected: usize, found: usize },
    /// An axiom mentions a symbol introduced at a later level.
    HigherLevelSymbol { symbol: String, level: usize, clause: String },
    /// An axiom mentions no symbol of its own level.
    MissingLevelSymbol { level: usize, clause: String },
    /// An axiom variable does not occur below any own-level function, so
    /// its instances could never all be ground.
    UncoveredVariable { var: String, clause: String },
    /// An own-level function in an axiom has an argument that is neither a
    /// variable nor a ground extension-free term.
    NonFlatAxiom { level: usize, clause: String },
    /// A parameter symbol was never declared.
    UnknownParam(String),
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Signature(e) => write!(f, "{e}"),
            SpecError::ArityMismatch { symbol, expected, found } => write!(
                f,
                "symbol `{symbol}` declared with arity {expected} but used with {found} arguments"
            ),
            SpecError::HigherLevelSymbol { symbol, level, clause } => write!(
                f,
                "axiom at level {level} uses symbol `{symbol}` from a later level: {clause}"
            ),
            SpecError::MissingLevelSymbol { level, clause } => {
                write!(f, "axiom at level {level} mentions no level-{level} symbol: {clause}")
            }
            SpecError::UncoveredVariable { var, clause } => write!(
                f,
                "variable `{var}` does not occur below an own-level function in: {clause}"
            ),
            SpecError::NonFlatAxiom { level, clause } => write!(
                f,
                "level-{level} function argument is neither a variable nor extension-free in: {clause}"
            ),
            SpecError::UnknownParam(p) => write!(f, "parameter `{p}` is not a declared symbol"),
        }
    }
}

impl std::error::Error for SpecError {}

impl From<SignatureError> for SpecError {
    fn from(e: SignatureError) -> Self {
        SpecError::Signature(e)
    }
}

impl TheorySpec {
    /// Builds and validates a chain specification. Levels are numbered from
    /// 1 (the first entry of `levels`) upward.
    pub fn new(
        base: BaseTheoryId,
        levels: Vec<Level>,
        params: impl IntoIterator<Item = String>,
    ) -> Result<TheorySpec, SpecError> {
        let mut sig = Signature::new();
        for (i, lvl) in levels.iter().enumerate() {
            for (name, arity) in &lvl.functions {
                sig.declare(name, *arity, i + 1)?;
            }
        }
        for (i, lvl) in levels.iter().enumerate() {
            let level = i + 1;
            for clause in &lvl.axioms {
                check_arities(clause, &sig)?;
                let mut own_symbol = false;
                for t in clause.subterms() {
                    let name = match t.node() {
                        TermNode::App(f, _) => Some(f.as_str()),
                        TermNode::Const(c) => Some(c.as_str()),
                        _ => None,
                    };
                    if let Some(l) = name.and_then(|n| sig.level_of(n)) {
                        if l > level {
                            return Err(SpecError::HigherLevelSymbol {
                                symbol: name.unwrap().to_string(),
                                level,
                                clause: clause.to_string(),
                            });
                        }
                        own_symbol |= l == level;
                    }
                }
                if !own_symbol {
                    return Err(SpecError::MissingLevelSymbol { level, clause: clause.to_string() });
                }
                let report = check_flat_linear(std::slice::from_ref(clause), &sig, level);
                let shape = &report.shapes[0];
                if !shape.vars_covered {
                    let covered: BTreeSet<String> = clause
                        .subterms()
                        .into_iter()
                        .filter(|t| is_level_rooted(t, &sig, level))
                        .flat_map(|t| t.vars())
                        .collect();
                    let var = clause
                        .vars()
                        .into_iter()
                        .find(|v| !covered.contains(v))
                        .unwrap_or_default();
                    return Err(SpecError::UncoveredVariable { var, clause: clause.to_string() });
                }
                if shape.flatness == Flatness::NonFlat {
                    return Err(SpecError::NonFlatAxiom { level, clause: clause.to_string() });
                }
            }
        }
        let params: BTreeSet<String> = params.into_iter().collect();
        for p in &params {
            if !sig.is_extension(p) {
                return Err(SpecError::UnknownParam(p.clone()));
            }
        }
        Ok(TheorySpec { base, levels, params, closure: ClosureOperator::default(), sig })
    }

    pub fn with_closure(mut self, closure: ClosureOperator) -> TheorySpec {
        self.closure = closure;
        self
    }

    pub fn base(&self) -> BaseTheoryId {
        self.base
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Axioms of a level, 1-based.
    pub fn axioms_at(&self, level: usize) -> &[Clause] {
        &self.levels[level - 1].axioms
    }

    pub fn params(&self) -> &BTreeSet<String> {
        &self.params
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.contains(name)
    }

    pub fn closure(&self) -> ClosureOperator {
        self.closure
    }

    /// Replaces the parameter set (validated against the signature).
    pub fn with_params(
        mut self,
        params: impl IntoIterator<Item = String>,
    ) -> Result<TheorySpec, SpecError> {
        let params: BTreeSet<String> = params.into_iter().collect();
        for p in &params {
            if !self.sig.is_extension(p) {
                return Err(SpecError::UnknownParam(p.clone()));
            }
        }
        self.params = params;
        Ok(self)
    }
}

fn check_arities(clause: &Clause, sig: &Signature) -> Result<(), SpecError> {
    for t in clause.subterms() {
        match t.node() {
            TermNode::App(f, args) => {
                if let Some(d) = sig.lookup(f) {
                    if d.arity != args.len() {
                        return Err(SpecError::ArityMismatch {
                            symbol: f.clone(),
                            expected: d.arity,
                            found: args.len(),
                        });
                    }
                }
            }
            TermNode::Const(c) => {
                if let Some(d) = sig.lookup(c) {
                    if d.arity != 0 {
                        return Err(SpecError::ArityMismatch {
                            symbol: c.clone(),
                            expected: d.arity,
                            found: 0,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalityError {
    /// The goal must consist of ground clauses.
    NonGroundGoal { clause: String },
    /// A clause variable is not below any current-level function, so its
    /// instances would not be ground.
    NonGroundInstance { var: String, clause: String },
    Base(QeError),
}

impl fmt::Display for LocalityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalityError::NonGroundGoal { clause } => {
                write!(f, "goal clause is not ground: {clause}")
            }
            LocalityError::NonGroundInstance { var, clause } => write!(
                f,
                "variable `{var}` cannot be instantiated to a ground term in: {clause}"
            ),
            LocalityError::Base(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LocalityError {}

impl From<QeError> for LocalityError {
    fn from(e: QeError) -> Self {
        LocalityError::Base(e)
    }
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

fn is_level_rooted(t: &Term, sig: &Signature, level: usize) -> bool {
    match t.node() {
        TermNode::App(f, _) => sig.level_of(f) == Some(level),
        TermNode::Const(c) => sig.level_of(c) == Some(level),
        _ => false,
    }
}

/// All instances of `clauses` in which every subterm rooted at a
/// level-`level` symbol belongs to `terms`.
///
/// Substitutions are found by matching each non-ground level-rooted
/// occurrence of a clause against same-root members of `terms`, intersecting
/// the variable assignments across occurrences. Candidate instances whose
/// level-rooted subterms are not all in `terms` (for example because a
/// substituted variable smuggled one in) are discarded rather than reported.
pub fn instantiate(
    pool: &TermPool,
    sig: &Signature,
    level: usize,
    clauses: &[Clause],
    terms: &BTreeSet<Term>,
) -> Result<Vec<Clause>, LocalityError> {
    let targets: Vec<&Term> = terms.iter().filter(|t| is_level_rooted(t, sig, level)).collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for clause in clauses {
        let patterns: Vec<Term> = clause
            .subterms()
            .into_iter()
            .filter(|t| is_level_rooted(t, sig, level) && !t.is_ground())
            .collect();
        let covered: BTreeSet<String> = patterns.iter().flat_map(|t| t.vars()).collect();
        if let Some(var) = clause.vars().into_iter().find(|v| !covered.contains(v)) {
            return Err(LocalityError::NonGroundInstance { var, clause: clause.to_string() });
        }
        let mut emit = |subst: &Substitution| {
            let inst = clause.apply(pool, subst);
            let admitted = inst
                .subterms()
                .iter()
                .all(|t| !is_level_rooted(t, sig, level) || terms.contains(t));
            if admitted && seen.insert(inst.clone()) {
                out.push(inst);
            }
        };
        let mut subst = Substitution::new();
        match_all(&patterns, 0, &targets, &mut subst, &mut emit);
    }
    Ok(out)
}

fn match_all(
    patterns: &[Term],
    i: usize,
    targets: &[&Term],
    subst: &mut Substitution,
    emit: &mut impl FnMut(&Substitution),
) {
    if i == patterns.len() {
        emit(subst);
        return;
    }
    for target in targets {
        let saved = subst.clone();
        if match_term(&patterns[i], target, subst) {
            match_all(patterns, i + 1, targets, subst, emit);
        }
        *subst = saved;
    }
}

fn match_term(pattern: &Term, target: &Term, subst: &mut Substitution) -> bool {
    match (pattern.node(), target.node()) {
        (TermNode::Var(v), _) => subst.bind_consistent(v, target),
        (TermNode::Const(a), TermNode::Const(b)) => a == b,
        (TermNode::Num(a), TermNode::Num(b)) => a == b,
        (TermNode::App(f, pa), TermNode::App(g, ta)) => {
            f == g && pa.len() == ta.len() && pa.iter().zip(ta).all(|(p, t)| match_term(p, t, subst))
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Flattening and purification
// ---------------------------------------------------------------------------

/// A ground congruence instance for a pair of definitions, `trivial` when
/// some literal already holds syntactically (the reflexive pairs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConInstance {
    pub clause: Clause,
    pub trivial: bool,
}

/// Outcome of flattening and purification at one level: the definitions
/// `fresh constant = named term` in introduction order, the purified clauses
/// aligned with the input order, and the congruence instances for the
/// definitions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PurificationResult {
    pub defs: Vec<(Term, Term)>,
    pub purified: Vec<Clause>,
    pub con0: Vec<ConInstance>,
}

impl PurificationResult {
    /// Replaces every defined constant by its named term, undoing
    /// purification. Used for round-trip checks and back-substitution.
    pub fn unpurify_term(&self, pool: &TermPool, t: &Term) -> Term {
        let map: BTreeMap<Term, Term> = self.defs.iter().cloned().collect();
        unpurify(pool, &map, t)
    }
}

fn unpurify(pool: &TermPool, defs: &BTreeMap<Term, Term>, t: &Term) -> Term {
    if let Some(named) = defs.get(t) {
        return unpurify(pool, defs, named);
    }
    match t.node() {
        TermNode::App(f, args) => {
            pool.app(f.clone(), args.iter().map(|a| unpurify(pool, defs, a)).collect())
        }
        _ => t.clone(),
    }
}

/// Bottom-up replacement of every subterm rooted at a level-`level` function
/// of arity >= 1 by a fresh constant. Identical terms share one constant;
/// declared arity-0 symbols and deeper-level subterms are left in place.
pub fn flatten_purify(
    pool: &TermPool,
    sig: &Signature,
    level: usize,
    clauses: &[Clause],
    fresh: &FreshGen,
) -> PurificationResult {
    let mut map: BTreeMap<Term, Term> = BTreeMap::new();
    let mut defs: Vec<(Term, Term)> = Vec::new();
    let purified = clauses
        .iter()
        .map(|c| c.map_terms(&mut |t| purify_term(pool, sig, level, t, fresh, &mut map, &mut defs)))
        .collect();
    let con0 = congruence_instances(&defs);
    PurificationResult { defs, purified, con0 }
}

fn purify_term(
    pool: &TermPool,
    sig: &Signature,
    level: usize,
    t: &Term,
    fresh: &FreshGen,
    map: &mut BTreeMap<Term, Term>,
    defs: &mut Vec<(Term, Term)>,
) -> Term {
    match t.node() {
        TermNode::App(f, args) => {
            let rewritten = pool.app(
                f.clone(),
                args.iter()
                    .map(|a| purify_term(pool, sig, level, a, fresh, map, defs))
                    .collect(),
            );
            if sig.level_of(f) == Some(level) {
                if let Some(c) = map.get(&rewritten) {
                    return c.clone();
                }
                let c = fresh.next_const(pool);
                map.insert(rewritten.clone(), c.clone());
                defs.push((c.clone(), rewritten));
                c
            } else {
                rewritten
            }
        }
        _ => t.clone(),
    }
}

/// One congruence instance per unordered pair of same-function definitions,
/// the reflexive diagonal included (emitted with `trivial` set — they carry
/// the defined terms' arguments into later reduction levels).
pub fn congruence_instances(defs: &[(Term, Term)]) -> Vec<ConInstance> {
    let mut out = Vec::new();
    for (i, (ci, ti)) in defs.iter().enumerate() {
        for (cj, tj) in defs.iter().skip(i) {
            if ti.root() != tj.root() {
                continue;
            }
            // Equalities are oriented by term order, so the instance set
            // does not depend on the order definitions were introduced in.
            let oriented = |positive: bool, a: &Term, b: &Term| {
                let (l, r) = if a <= b { (a, b) } else { (b, a) };
                Literal::new(positive, Rel::Eq, l.clone(), r.clone())
            };
            let mut lits: Vec<Literal> = ti
                .args()
                .iter()
                .zip(tj.args())
                .map(|(a, b)| oriented(false, a, b))
                .collect();
            lits.push(oriented(true, ci, cj));
            let clause = Clause::new(lits);
            let trivial =
                clause.lits().iter().any(|l| base::literal_trivial(l) == Some(true));
            out.push(ConInstance { clause, trivial });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Level-by-level reduction
// ---------------------------------------------------------------------------

/// Extra instantiation terms per level (in the source signature; the chain
/// driver rewrites them through the definitions accumulated by earlier
/// levels) and an optional split of the goal into two independently
/// instantiated parts.
#[derive(Debug, Clone, Default)]
pub struct ReduceOptions {
    pub seeds: BTreeMap<usize, Vec<Term>>,
    pub split: Option<SplitGoal>,
}

/// Splits the goal clause list: the first `at` clauses and the rest each
/// get their own instantiation term sets (with separate extra seeds for the
/// second part), while purification and congruence generation remain joint.
#[derive(Debug, Clone, Default)]
pub struct SplitGoal {
    pub at: usize,
    pub seeds_b: BTreeMap<usize, Vec<Term>>,
}

/// Everything produced while reducing one level.
#[derive(Debug, Clone)]
pub struct StepReduction {
    pub level: usize,
    /// Instantiation term set used (closure applied), in term order.
    pub inst_terms: Vec<Term>,
    /// Axiom instances before purification.
    pub instances: Vec<Clause>,
    /// Definitions introduced at this level.
    pub defs: Vec<(Term, Term)>,
    /// Purified instances.
    pub k0: Vec<Clause>,
    /// Purified goal.
    pub g0: Vec<Clause>,
    /// Congruence instances for this level's definitions.
    pub con0: Vec<ConInstance>,
}

impl StepReduction {
    /// The goal for the next level down: purified instances and goal plus
    /// the congruence instances.
    pub fn output(&self) -> Vec<Clause> {
        let mut out = self.k0.clone();
        out.extend(self.g0.iter().cloned());
        out.extend(self.con0.iter().map(|c| c.clause.clone()));
        out
    }
}

/// Result of reducing a goal through the whole chain.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// Per-level records, top level first.
    pub steps: Vec<StepReduction>,
    /// Final ground clauses over the base signature.
    pub base_clauses: Vec<Clause>,
    /// All definitions, in introduction order (top level first).
    pub defs: Vec<(Term, Term)>,
}

impl Reduction {
    /// Replaces defined constants by their named terms, through all levels.
    pub fn unpurify_term(&self, pool: &TermPool, t: &Term) -> Term {
        let map: BTreeMap<Term, Term> = self.defs.iter().cloned().collect();
        unpurify(pool, &map, t)
    }

    pub fn def_map(&self) -> BTreeMap<Term, Term> {
        self.defs.iter().cloned().collect()
    }
}

/// Internal bucket layout while reducing: goal part A, goal part B (when
/// split), and clauses visible to both sides (joint congruence instances).
struct Buckets {
    a: Vec<Clause>,
    b: Vec<Clause>,
    shared: Vec<Clause>,
    split: bool,
}

/// Reduces one level: instantiate, purify, add congruence instances.
/// `goal` must be ground over the base signature plus levels `<= level`;
/// `seeds` are extra instantiation terms already in the goal's current form.
pub fn reduce_step(
    spec: &TheorySpec,
    pool: &TermPool,
    level: usize,
    goal: &[Clause],
    seeds: &BTreeSet<Term>,
    fresh: &FreshGen,
) -> Result<StepReduction, LocalityError> {
    for c in goal {
        if !c.is_ground() {
            return Err(LocalityError::NonGroundGoal { clause: c.to_string() });
        }
    }
    let buckets =
        Buckets { a: goal.to_vec(), b: Vec::new(), shared: Vec::new(), split: false };
    let (step, _) = reduce_level(spec, pool, level, &buckets, seeds, &BTreeSet::new(), fresh)?;
    Ok(step)
}

fn reduce_level(
    spec: &TheorySpec,
    pool: &TermPool,
    level: usize,
    buckets: &Buckets,
    seeds_a: &BTreeSet<Term>,
    seeds_b: &BTreeSet<Term>,
    fresh: &FreshGen,
) -> Result<(StepReduction, Buckets), LocalityError> {
    let axioms = spec.axioms_at(level);
    let collect = |goal_part: &[Clause], seeds: &BTreeSet<Term>| {
        let mut t = est_terms(axioms.iter().chain(goal_part).chain(&buckets.shared), spec.sig(), level);
        t.extend(seeds.iter().cloned());
        spec.closure().apply(&t)
    };
    let terms_a = collect(&buckets.a, seeds_a);
    let inst_a = instantiate(pool, spec.sig(), level, axioms, &terms_a)?;
    let (terms_b, inst_b) = if buckets.split {
        let terms_b = collect(&buckets.b, seeds_b);
        let inst_b: Vec<Clause> = instantiate(pool, spec.sig(), level, axioms, &terms_b)?
            .into_iter()
            .filter(|c| !inst_a.contains(c))
            .collect();
        (terms_b, inst_b)
    } else {
        (BTreeSet::new(), Vec::new())
    };

    // Joint purification over all segments keeps shared terms shared.
    let (na, nb, ng_a, ng_b) = (inst_a.len(), inst_b.len(), buckets.a.len(), buckets.b.len());
    let mut all: Vec<Clause> = Vec::with_capacity(na + nb + ng_a + ng_b + buckets.shared.len());
    all.extend(inst_a.iter().cloned());
    all.extend(inst_b.iter().cloned());
    all.extend(buckets.a.iter().cloned());
    all.extend(buckets.b.iter().cloned());
    all.extend(buckets.shared.iter().cloned());
    let pr = flatten_purify(pool, spec.sig(), level, &all, fresh);

    let purified = &pr.purified;
    let k0: Vec<Clause> = purified[..na + nb].to_vec();
    let g0: Vec<Clause> = purified[na + nb..].to_vec();

    let next = if buckets.split {
        // Side attribution: a definition belongs to a side when its constant
        // occurs in that side's purified clauses; congruence instances go to
        // the union of their definitions' sides, cross-side ones to `shared`.
        let a_slice: Vec<&Clause> = purified[..na]
            .iter()
            .chain(&purified[na + nb..na + nb + ng_a])
            .collect();
        let b_slice: Vec<&Clause> = purified[na..na + nb]
            .iter()
            .chain(&purified[na + nb + ng_a..na + nb + ng_a + ng_b])
            .collect();
        let shared_slice: Vec<&Clause> = purified[na + nb + ng_a + ng_b..].iter().collect();
        let side_of = |c: &Term| -> (bool, bool) {
            let occurs = |cs: &[&Clause]| cs.iter().any(|cl| cl.subterms().contains(c));
            let in_shared = occurs(&shared_slice);
            (occurs(&a_slice) || in_shared, occurs(&b_slice) || in_shared)
        };
        let sides: BTreeMap<&Term, (bool, bool)> =
            pr.defs.iter().map(|(c, _)| (c, side_of(c))).collect();
        let mut next = Buckets {
            a: a_slice.into_iter().cloned().collect(),
            b: b_slice.into_iter().cloned().collect(),
            shared: shared_slice.into_iter().cloned().collect(),
            split: true,
        };
        for con in &pr.con0 {
            let (mut in_a, mut in_b) = (false, false);
            for (c, _) in &pr.defs {
                if con.clause.subterms().contains(c) {
                    let (a, b) = sides[c];
                    in_a |= a;
                    in_b |= b;
                }
            }
            match (in_a, in_b) {
                (true, false) => next.a.push(con.clause.clone()),
                (false, true) => next.b.push(con.clause.clone()),
                _ => next.shared.push(con.clause.clone()),
            }
        }
        next
    } else {
        let mut a = k0.clone();
        a.extend(g0.iter().cloned());
        a.extend(pr.con0.iter().map(|c| c.clause.clone()));
        Buckets { a, b: Vec::new(), shared: Vec::new(), split: false }
    };

    let mut inst_terms: Vec<Term> = terms_a.union(&terms_b).cloned().collect();
    inst_terms.sort();
    let mut instances = inst_a;
    instances.extend(inst_b);
    let step = StepReduction {
        level,
        inst_terms,
        instances,
        defs: pr.defs,
        k0,
        g0,
        con0: pr.con0,
    };
    Ok((step, next))
}

/// Reduces a ground goal through every level of the chain, top level first.
/// Fresh purification names restart at `#1` for every call.
pub fn reduce_chain(
    spec: &TheorySpec,
    pool: &TermPool,
    goal: &[Clause],
    opts: &ReduceOptions,
) -> Result<Reduction, LocalityError> {
    for c in goal {
        if !c.is_ground() {
            return Err(LocalityError::NonGroundGoal { clause: c.to_string() });
        }
    }
    let fresh = FreshGen::new();
    let mut buckets = match &opts.split {
        Some(split) => Buckets {
            a: goal[..split.at].to_vec(),
            b: goal[split.at..].to_vec(),
            shared: Vec::new(),
            split: true,
        },
        None => Buckets { a: goal.to_vec(), b: Vec::new(), shared: Vec::new(), split: false },
    };
    let mut steps = Vec::new();
    let mut defs: Vec<(Term, Term)> = Vec::new();
    let mut rewrites: BTreeMap<Term, Term> = BTreeMap::new();
    for level in (1..=spec.num_levels()).rev() {
        let seed_set = |m: &BTreeMap<usize, Vec<Term>>| -> BTreeSet<Term> {
            m.get(&level)
                .into_iter()
                .flatten()
                .map(|t| rewrite_through(pool, &rewrites, t))
                .collect()
        };
        let seeds_a = seed_set(&opts.seeds);
        let seeds_b = match &opts.split {
            Some(split) => seed_set(&split.seeds_b),
            None => BTreeSet::new(),
        };
        let (step, next) = reduce_level(spec, pool, level, &buckets, &seeds_a, &seeds_b, &fresh)?;
        for (c, t) in &step.defs {
            rewrites.insert(t.clone(), c.clone());
        }
        defs.extend(step.defs.iter().cloned());
        buckets = next;
        steps.push(step);
    }
    let mut base_clauses = buckets.a;
    base_clauses.extend(buckets.b);
    base_clauses.extend(buckets.shared);
    Ok(Reduction { steps, base_clauses, defs })
}

/// Rewrites a term bottom-up through the accumulated definitions, so seed
/// terms given in the source signature line up with already-purified goals.
pub(crate) fn rewrite_through(pool: &TermPool, rewrites: &BTreeMap<Term, Term>, t: &Term) -> Term {
    let rebuilt = match t.node() {
        TermNode::App(f, args) => pool.app(
            f.clone(),
            args.iter().map(|a| rewrite_through(pool, rewrites, a)).collect(),
        ),
        _ => t.clone(),
    };
    rewrites.get(&rebuilt).cloned().unwrap_or(rebuilt)
}

/// The decision produced by [`decide_sat_extension`]: the verdict plus the
/// reduction that led to it, for reporting.
#[derive(Debug, Clone)]
pub struct ExtensionDecision {
    pub verdict: Verdict,
    pub reduction: Reduction,
}

/// Satisfiability of a ground goal w.r.t. the base theory extended by the
/// whole chain: reduce, then decide in the base theory.
pub fn decide_sat_extension(
    spec: &TheorySpec,
    pool: &TermPool,
    goal: &[Clause],
    opts: &ReduceOptions,
    cfg: &QeConfig,
) -> Result<ExtensionDecision, LocalityError> {
    let reduction = reduce_chain(spec, pool, goal, opts)?;
    let verdict = base::decide_ground_sat(spec.base(), pool, &reduction.base_clauses, cfg)?;
    Ok(ExtensionDecision { verdict, reduction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::Verdict;

    fn pool() -> TermPool {
        TermPool::new()
    }

    /// f, g monotone, with `x <= g(y) -> f(x) <= y`, one level.
    fn galois_spec() -> (TermPool, TheorySpec) {
        let p = pool();
        let mon = |fun: &str| {
            Clause::new(vec![
                Literal::neg(Rel::Le, p.var("x"), p.var("y")),
                Literal::pos(
                    Rel::Le,
                    p.app(fun, vec![p.var("x")]),
                    p.app(fun, vec![p.var("y")]),
                ),
            ])
        };
        let sgc = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.app("g", vec![p.var("y")])),
            Literal::pos(Rel::Le, p.app("f", vec![p.var("x")]), p.var("y")),
        ]);
        let spec = TheorySpec::new(
            BaseTheoryId::TOrd,
            vec![Level {
                functions: vec![("f".into(), 1), ("g".into(), 1)],
                axioms: vec![sgc, mon("f"), mon("g")],
            }],
            [],
        )
        .unwrap();
        (p, spec)
    }

    /// Two-level chain: free f, h and constant c below a case-defined g.
    fn case_split_spec() -> (TermPool, TheorySpec) {
        let p = pool();
        let low = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.cst("c")),
            Literal::pos(
                Rel::Eq,
                p.app("g", vec![p.var("x")]),
                p.app("f", vec![p.var("x")]),
            ),
        ]);
        let high = Clause::new(vec![
            Literal::neg(Rel::Lt, p.cst("c"), p.var("x")),
            Literal::pos(
                Rel::Eq,
                p.app("g", vec![p.var("x")]),
                p.app("h", vec![p.var("x")]),
            ),
        ]);
        let spec = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![
                Level {
                    functions: vec![("f".into(), 1), ("h".into(), 1), ("c".into(), 0)],
                    axioms: vec![],
                },
                Level { functions: vec![("g".into(), 1)], axioms: vec![low, high] },
            ],
            ["f".to_string(), "h".to_string(), "c".to_string()],
        )
        .unwrap();
        (p, spec)
    }

    fn galois_goal(p: &TermPool) -> Vec<Clause> {
        vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("d"), p.app("g", vec![p.cst("a")]))),
            Clause::unit(Literal::pos(Rel::Le, p.cst("a"), p.cst("c"))),
            Clause::unit(Literal::pos(Rel::Le, p.cst("b"), p.cst("d"))),
            Clause::unit(Literal::neg(Rel::Le, p.app("f", vec![p.cst("b")]), p.cst("c"))),
        ]
    }

    #[test]
    fn spec_rejects_uncovered_variables_and_misuse() {
        let p = pool();
        let bad = Clause::new(vec![Literal::pos(Rel::Le, p.app("f", vec![p.var("x")]), p.var("z"))]);
        let err = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![Level { functions: vec![("f".into(), 1)], axioms: vec![bad] }],
            [],
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::UncoveredVariable { ref var, .. } if var == "z"));

        let no_own = Clause::unit(Literal::pos(Rel::Le, p.cst("a"), p.cst("b")));
        let err = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![Level { functions: vec![("f".into(), 1)], axioms: vec![no_own] }],
            [],
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::MissingLevelSymbol { .. }));

        let wrong_arity =
            Clause::unit(Literal::pos(Rel::Le, p.app("f", vec![p.var("x"), p.var("x")]), p.var("x")));
        let err = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![Level { functions: vec![("f".into(), 1)], axioms: vec![wrong_arity] }],
            [],
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::ArityMismatch { expected: 1, found: 2, .. }));

        let err = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![Level { functions: vec![("f".into(), 1)], axioms: vec![] }],
            ["q".to_string()],
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::UnknownParam(ref q) if q == "q"));
    }

    #[test]
    fn spec_rejects_later_level_symbols_in_axioms() {
        let p = pool();
        let uses_g = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.app("g", vec![p.var("x")])),
            Literal::pos(Rel::Le, p.app("f", vec![p.var("x")]), p.var("x")),
        ]);
        let err = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![
                Level { functions: vec![("f".into(), 1)], axioms: vec![uses_g] },
                Level { functions: vec![("g".into(), 1)], axioms: vec![] },
            ],
            [],
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::HigherLevelSymbol { ref symbol, .. } if symbol == "g"));
    }

    #[test]
    fn instantiate_matches_across_occurrences() {
        let (p, spec) = galois_spec();
        let terms: BTreeSet<Term> =
            [p.app("f", vec![p.cst("b")]), p.app("g", vec![p.cst("a")])].into();
        let sgc = &spec.axioms_at(1)[0..1];
        let inst = instantiate(&p, spec.sig(), 1, sgc, &terms).unwrap();
        assert_eq!(
            inst,
            vec![Clause::new(vec![
                Literal::neg(Rel::Le, p.cst("b"), p.app("g", vec![p.cst("a")])),
                Literal::pos(Rel::Le, p.app("f", vec![p.cst("b")]), p.cst("a")),
            ])]
        );

        let mon = &spec.axioms_at(1)[1..];
        let inst = instantiate(&p, spec.sig(), 1, mon, &terms).unwrap();
        let refl = |fun: &str, c: &str| {
            Clause::new(vec![
                Literal::neg(Rel::Le, p.cst(c), p.cst(c)),
                Literal::pos(
                    Rel::Le,
                    p.app(fun, vec![p.cst(c)]),
                    p.app(fun, vec![p.cst(c)]),
                ),
            ])
        };
        assert_eq!(inst, vec![refl("f", "b"), refl("g", "a")]);
    }

    #[test]
    fn instantiate_requires_both_occurrences_in_the_term_set() {
        let (p, spec) = galois_spec();
        let sgc = &spec.axioms_at(1)[0..1];
        let only_f: BTreeSet<Term> = [p.app("f", vec![p.cst("b")])].into();
        assert!(instantiate(&p, spec.sig(), 1, sgc, &only_f).unwrap().is_empty());
        let empty: BTreeSet<Term> = BTreeSet::new();
        assert!(instantiate(&p, spec.sig(), 1, sgc, &empty).unwrap().is_empty());
    }

    #[test]
    fn instantiate_discards_instances_with_new_extension_terms() {
        let (p, spec) = galois_spec();
        let sgc = &spec.axioms_at(1)[0..1];
        // Matching g(y) against g(g(a)) puts the unlisted g(a) into the
        // conclusion f(..) <= g(a) — the candidate must be dropped.
        let nested: BTreeSet<Term> = [
            p.app("g", vec![p.app("g", vec![p.cst("a")])]),
            p.app("f", vec![p.cst("b")]),
        ]
        .into();
        assert!(instantiate(&p, spec.sig(), 1, sgc, &nested).unwrap().is_empty());
        // Adding g(a) itself legitimizes the instance.
        let closed: BTreeSet<Term> = [
            p.app("g", vec![p.app("g", vec![p.cst("a")])]),
            p.app("g", vec![p.cst("a")]),
            p.app("f", vec![p.cst("b")]),
        ]
        .into();
        assert_eq!(instantiate(&p, spec.sig(), 1, sgc, &closed).unwrap().len(), 2);
    }

    #[test]
    fn instantiate_reports_unbindable_variables() {
        let p = pool();
        let spec = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![Level { functions: vec![("f".into(), 1)], axioms: vec![] }],
            [],
        )
        .unwrap();
        let loose = Clause::unit(Literal::pos(Rel::Le, p.var("x"), p.cst("a")));
        let terms: BTreeSet<Term> = BTreeSet::new();
        let err = instantiate(&p, spec.sig(), 1, &[loose], &terms).unwrap_err();
        assert!(matches!(err, LocalityError::NonGroundInstance { ref var, .. } if var == "x"));
    }

    #[test]
    fn monotonicity_of_instantiation_in_the_term_set() {
        let (p, spec) = galois_spec();
        let axioms = spec.axioms_at(1);
        let small: BTreeSet<Term> = [p.app("f", vec![p.cst("b")])].into();
        let large: BTreeSet<Term> =
            [p.app("f", vec![p.cst("b")]), p.app("g", vec![p.cst("a")])].into();
        let inst_small = instantiate(&p, spec.sig(), 1, axioms, &small).unwrap();
        let inst_large = instantiate(&p, spec.sig(), 1, axioms, &large).unwrap();
        for c in &inst_small {
            assert!(inst_large.contains(c), "missing instance {c}");
        }
    }

    #[test]
    fn purify_shares_names_and_unwinds() {
        let (p, spec) = galois_spec();
        let fresh = FreshGen::new();
        let clauses = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("d"), p.app("g", vec![p.cst("a")]))),
            Clause::unit(Literal::neg(Rel::Le, p.app("f", vec![p.cst("b")]), p.cst("c"))),
            Clause::unit(Literal::pos(Rel::Le, p.app("g", vec![p.cst("a")]), p.cst("c"))),
        ];
        let pr = flatten_purify(&p, spec.sig(), 1, &clauses, &fresh);
        assert_eq!(
            pr.defs,
            vec![
                (p.cst("#1"), p.app("g", vec![p.cst("a")])),
                (p.cst("#2"), p.app("f", vec![p.cst("b")])),
            ]
        );
        assert_eq!(pr.purified[0], Clause::unit(Literal::pos(Rel::Le, p.cst("d"), p.cst("#1"))));
        assert_eq!(pr.purified[2], Clause::unit(Literal::pos(Rel::Le, p.cst("#1"), p.cst("c"))));
        // Round-trip: unpurifying restores the inputs.
        for (orig, pur) in clauses.iter().zip(&pr.purified) {
            let back = pur.map_terms(&mut |t| pr.unpurify_term(&p, t));
            assert_eq!(&back, orig);
        }
    }

    #[test]
    fn purify_is_bottom_up_for_nested_terms() {
        let p = pool();
        let spec = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![Level { functions: vec![("f".into(), 1), ("g".into(), 1)], axioms: vec![] }],
            [],
        )
        .unwrap();
        let fresh = FreshGen::new();
        let c = Clause::unit(Literal::pos(
            Rel::Le,
            p.app("f", vec![p.app("g", vec![p.cst("a")])]),
            p.cst("b"),
        ));
        let pr = flatten_purify(&p, spec.sig(), 1, &[c.clone()], &fresh);
        assert_eq!(
            pr.defs,
            vec![
                (p.cst("#1"), p.app("g", vec![p.cst("a")])),
                (p.cst("#2"), p.app("f", vec![p.cst("#1")])),
            ]
        );
        assert_eq!(pr.purified[0], Clause::unit(Literal::pos(Rel::Le, p.cst("#2"), p.cst("b"))));
        let back = pr.purified[0].map_terms(&mut |t| pr.unpurify_term(&p, t));
        assert_eq!(back, c);
    }

    #[test]
    fn congruence_covers_same_function_pairs_and_diagonal() {
        let p = pool();
        let defs = vec![
            (p.cst("f1"), p.app("f", vec![p.cst("c1")])),
            (p.cst("f2"), p.app("f", vec![p.cst("c2")])),
            (p.cst("h1"), p.app("h", vec![p.cst("c1")])),
        ];
        let con = congruence_instances(&defs);
        let nontrivial: Vec<&Clause> =
            con.iter().filter(|c| !c.trivial).map(|c| &c.clause).collect();
        assert_eq!(
            nontrivial,
            vec![&Clause::new(vec![
                Literal::neg(Rel::Eq, p.cst("c1"), p.cst("c2")),
                Literal::pos(Rel::Eq, p.cst("f1"), p.cst("f2")),
            ])]
        );
        // Diagonals are present, flagged, and carry the argument terms.
        assert_eq!(con.len(), 4);
        assert_eq!(con.iter().filter(|c| c.trivial).count(), 3);
    }

    #[test]
    fn congruence_instances_are_orientation_insensitive() {
        let p = pool();
        let d1 = (p.cst("f1"), p.app("f", vec![p.cst("c1")]));
        let d2 = (p.cst("f2"), p.app("f", vec![p.cst("c2")]));
        let fwd = congruence_instances(&[d1.clone(), d2.clone()]);
        let bwd = congruence_instances(&[d2, d1]);
        let clause_set = |v: &[ConInstance]| -> BTreeSet<Clause> {
            v.iter().map(|c| c.clause.clone()).collect()
        };
        assert_eq!(clause_set(&fwd), clause_set(&bwd));
    }

    #[test]
    fn galois_reduction_produces_the_expected_tables() {
        let (p, spec) = galois_spec();
        let goal = galois_goal(&p);
        let red = reduce_chain(&spec, &p, &goal, &ReduceOptions::default()).unwrap();
        assert_eq!(red.steps.len(), 1);
        let step = &red.steps[0];

        // Definitions: one name per extension term, in first-use order.
        assert_eq!(
            step.defs,
            vec![
                (p.cst("#1"), p.app("g", vec![p.cst("a")])),
                (p.cst("#2"), p.app("f", vec![p.cst("b")])),
            ]
        );

        // Purified instances: the cross instance and both reflexive
        // monotonicity instances.
        let a1 = p.cst("#1");
        let b1 = p.cst("#2");
        assert_eq!(
            step.k0,
            vec![
                Clause::new(vec![
                    Literal::neg(Rel::Le, p.cst("b"), a1.clone()),
                    Literal::pos(Rel::Le, b1.clone(), p.cst("a")),
                ]),
                Clause::new(vec![
                    Literal::neg(Rel::Le, p.cst("b"), p.cst("b")),
                    Literal::pos(Rel::Le, b1.clone(), b1.clone()),
                ]),
                Clause::new(vec![
                    Literal::neg(Rel::Le, p.cst("a"), p.cst("a")),
                    Literal::pos(Rel::Le, a1.clone(), a1.clone()),
                ]),
            ]
        );

        // Purified goal.
        assert_eq!(
            step.g0,
            vec![
                Clause::unit(Literal::pos(Rel::Le, p.cst("d"), a1.clone())),
                Clause::unit(Literal::pos(Rel::Le, p.cst("a"), p.cst("c"))),
                Clause::unit(Literal::pos(Rel::Le, p.cst("b"), p.cst("d"))),
                Clause::unit(Literal::neg(Rel::Le, b1.clone(), p.cst("c"))),
            ]
        );

        // Congruence: the two reflexive instances, marked trivial.
        let expected_con = vec![
            Clause::new(vec![
                Literal::neg(Rel::Eq, p.cst("a"), p.cst("a")),
                Literal::pos(Rel::Eq, a1.clone(), a1.clone()),
            ]),
            Clause::new(vec![
                Literal::neg(Rel::Eq, p.cst("b"), p.cst("b")),
                Literal::pos(Rel::Eq, b1.clone(), b1.clone()),
            ]),
        ];
        assert_eq!(
            step.con0.iter().map(|c| c.clause.clone()).collect::<Vec<_>>(),
            expected_con
        );
        assert!(step.con0.iter().all(|c| c.trivial));
    }

    #[test]
    fn galois_goal_is_unsat_and_base_engines_agree() {
        let (p, spec) = galois_spec();
        let goal = galois_goal(&p);
        let cfg = QeConfig::default();
        let dec = decide_sat_extension(&spec, &p, &goal, &ReduceOptions::default(), &cfg).unwrap();
        assert_eq!(dec.verdict, Verdict::Unsat);
        assert_eq!(base::finite_order_oracle(&dec.reduction.base_clauses, 8), Verdict::Unsat);
    }

    #[test]
    fn galois_goal_without_one_side_is_sat() {
        let (p, spec) = galois_spec();
        let goal = galois_goal(&p)[..2].to_vec();
        let cfg = QeConfig::default();
        let dec = decide_sat_extension(&spec, &p, &goal, &ReduceOptions::default(), &cfg).unwrap();
        assert_eq!(dec.verdict, Verdict::Sat);
    }

    #[test]
    fn case_split_chain_reduces_level_by_level() {
        let (p, spec) = case_split_spec();
        let g1 = p.app("g", vec![p.cst("c1")]);
        let g2 = p.app("g", vec![p.cst("c2")]);
        let goal = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c2"))),
            Clause::unit(Literal::pos(Rel::Lt, g2.clone(), g1.clone())),
        ];
        let red = reduce_chain(&spec, &p, &goal, &ReduceOptions::default()).unwrap();
        assert_eq!(red.steps.len(), 2);

        let top = &red.steps[0];
        assert_eq!(top.level, 2);
        assert_eq!(top.instances.len(), 4);
        assert_eq!(
            top.defs,
            vec![(p.cst("#1"), g1.clone()), (p.cst("#2"), g2.clone())]
        );

        let bottom = &red.steps[1];
        assert_eq!(bottom.level, 1);
        assert!(bottom.instances.is_empty());
        assert_eq!(
            bottom.defs,
            vec![
                (p.cst("#3"), p.app("f", vec![p.cst("c1")])),
                (p.cst("#4"), p.app("f", vec![p.cst("c2")])),
                (p.cst("#5"), p.app("h", vec![p.cst("c1")])),
                (p.cst("#6"), p.app("h", vec![p.cst("c2")])),
            ]
        );

        // Full definition list mirrors the two purification rounds.
        assert_eq!(red.defs.len(), 6);

        // The final clause set, trivial congruence instances aside: the four
        // guarded case instances, one congruence hook per function, and the
        // goal.
        let imp = |guard: Literal, concl: Literal| Clause::new(vec![guard.negated(), concl]);
        let eq = |a: &Term, b: &Term| Literal::pos(Rel::Eq, a.clone(), b.clone());
        let n = |k: u32| p.cst(format!("#{k}"));
        let expected: BTreeSet<Clause> = [
            imp(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c")), eq(&n(1), &n(3))),
            imp(Literal::pos(Rel::Le, p.cst("c2"), p.cst("c")), eq(&n(2), &n(4))),
            imp(Literal::pos(Rel::Lt, p.cst("c"), p.cst("c1")), eq(&n(1), &n(5))),
            imp(Literal::pos(Rel::Lt, p.cst("c"), p.cst("c2")), eq(&n(2), &n(6))),
            imp(eq(&p.cst("c1"), &p.cst("c2")), eq(&n(1), &n(2))),
            imp(eq(&p.cst("c1"), &p.cst("c2")), eq(&n(3), &n(4))),
            imp(eq(&p.cst("c1"), &p.cst("c2")), eq(&n(5), &n(6))),
            Clause::unit(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c2"))),
            Clause::unit(Literal::pos(Rel::Lt, n(2), n(1))),
        ]
        .into();
        let trivial: BTreeSet<Clause> = red
            .steps
            .iter()
            .flat_map(|s| s.con0.iter())
            .filter(|c| c.trivial)
            .map(|c| c.clause.clone())
            .collect();
        let essential: BTreeSet<Clause> = red
            .base_clauses
            .iter()
            .filter(|c| !trivial.contains(c))
            .cloned()
            .collect();
        assert_eq!(essential, expected);
    }

    #[test]
    fn case_split_goals_decide_both_ways() {
        let (p, spec) = case_split_spec();
        let cfg = QeConfig::default();
        // An unconstrained g need not be monotone.
        let non_mono = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c2"))),
            Clause::unit(Literal::pos(
                Rel::Lt,
                p.app("g", vec![p.cst("c2")]),
                p.app("g", vec![p.cst("c1")]),
            )),
        ];
        let dec =
            decide_sat_extension(&spec, &p, &non_mono, &ReduceOptions::default(), &cfg).unwrap();
        assert_eq!(dec.verdict, Verdict::Sat);

        // Below the threshold g agrees with f.
        let sat = vec![
            Clause::unit(Literal::pos(
                Rel::Eq,
                p.app("g", vec![p.cst("a")]),
                p.app("f", vec![p.cst("a")]),
            )),
            Clause::unit(Literal::pos(Rel::Le, p.cst("a"), p.cst("c"))),
        ];
        let dec = decide_sat_extension(&spec, &p, &sat, &ReduceOptions::default(), &cfg).unwrap();
        assert_eq!(dec.verdict, Verdict::Sat);

        // ... and contradicting f there is unsatisfiable.
        let unsat = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("a"), p.cst("c"))),
            Clause::unit(Literal::pos(
                Rel::Lt,
                p.app("g", vec![p.cst("a")]),
                p.app("f", vec![p.cst("a")]),
            )),
        ];
        let dec = decide_sat_extension(&spec, &p, &unsat, &ReduceOptions::default(), &cfg).unwrap();
        assert_eq!(dec.verdict, Verdict::Unsat);
    }

    #[test]
    fn seeds_enlarge_the_instantiation_set() {
        let (p, spec) = case_split_spec();
        let goal = vec![Clause::unit(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c2")))];
        let plain = reduce_chain(&spec, &p, &goal, &ReduceOptions::default()).unwrap();
        assert!(plain.steps[0].instances.is_empty());

        let mut opts = ReduceOptions::default();
        opts.seeds.insert(2, vec![p.app("g", vec![p.cst("c1")])]);
        let seeded = reduce_chain(&spec, &p, &goal, &opts).unwrap();
        assert_eq!(seeded.steps[0].instances.len(), 2);
    }

    #[test]
    fn seeds_are_rewritten_through_earlier_levels() {
        // A seed for a lower level mentions a term the upper level purifies;
        // the instantiation set must use the purified name.
        let p = pool();
        let mono_h = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.var("y")),
            Literal::pos(
                Rel::Le,
                p.app("h", vec![p.var("x")]),
                p.app("h", vec![p.var("y")]),
            ),
        ]);
        let spec = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![
                Level { functions: vec![("h".into(), 1)], axioms: vec![mono_h] },
                Level { functions: vec![("g".into(), 1)], axioms: vec![] },
            ],
            [],
        )
        .unwrap();
        let goal = vec![Clause::unit(Literal::pos(
            Rel::Lt,
            p.cst("a"),
            p.app("g", vec![p.cst("a")]),
        ))];
        let mut opts = ReduceOptions::default();
        opts.seeds.insert(1, vec![p.app("h", vec![p.app("g", vec![p.cst("a")])])]);
        let red = reduce_chain(&spec, &p, &goal, &opts).unwrap();
        // Level 2 names g(a) `#1`; the seed h(g(a)) must become h(#1).
        assert_eq!(red.steps[0].defs, vec![(p.cst("#1"), p.app("g", vec![p.cst("a")]))]);
        assert!(red.steps[1].inst_terms.contains(&p.app("h", vec![p.cst("#1")])));
        assert_eq!(red.steps[1].defs, vec![(p.cst("#2"), p.app("h", vec![p.cst("#1")]))]);
    }

    #[test]
    fn split_goals_instantiate_independently() {
        let (p, spec) = galois_spec();
        let goal = galois_goal(&p);
        // Joint instantiation finds the cross instance b <= g(a) -> f(b) <= a.
        let joint = reduce_chain(&spec, &p, &goal, &ReduceOptions::default()).unwrap();
        assert!(joint.steps[0].instances.iter().any(|c| c.lits().len() == 2
            && c.constants().contains("b")
            && c.constants().contains("a")));

        // Split between the first two clauses (mentioning g(a)) and the rest
        // (mentioning f(b)): neither side can build the cross instance.
        let opts = ReduceOptions {
            seeds: BTreeMap::new(),
            split: Some(SplitGoal { at: 2, seeds_b: BTreeMap::new() }),
        };
        let split = reduce_chain(&spec, &p, &goal, &opts).unwrap();
        for c in &split.steps[0].instances {
            let funcs = c.func_names();
            assert!(
                !(funcs.contains("f") && funcs.contains("g")),
                "cross instance {c} should not arise from split instantiation"
            );
        }
        // Purification still shares names across the sides, so the decision
        // runs over one coherent clause set (satisfiable without the cross
        // instance).
        let cfg = QeConfig::default();
        let verdict =
            base::decide_ground_sat(spec.base(), &p, &split.base_clauses, &cfg).unwrap();
        assert_eq!(verdict, Verdict::Sat);

        // Seeding both sides with the other side's term restores refutation.
        let mut seeds = BTreeMap::new();
        seeds.insert(1, vec![p.app("f", vec![p.cst("b")]), p.app("g", vec![p.cst("a")])]);
        let opts = ReduceOptions {
            seeds: seeds.clone(),
            split: Some(SplitGoal { at: 2, seeds_b: seeds }),
        };
        let seeded = reduce_chain(&spec, &p, &goal, &opts).unwrap();
        let verdict =
            base::decide_ground_sat(spec.base(), &p, &seeded.base_clauses, &cfg).unwrap();
        assert_eq!(verdict, Verdict::Unsat);
    }

    #[test]
    fn subterm_closure_satisfies_the_operator_laws() {
        let p = pool();
        let f_of = |inner: Term| p.app("f", vec![inner]);
        let t1: BTreeSet<Term> = [f_of(p.cst("a")), f_of(f_of(p.cst("b")))].into();
        let t2: BTreeSet<Term> = {
            let mut t = t1.clone();
            t.insert(p.app("g", vec![p.cst("c")]));
            t
        };
        let psi = ClosureOperator::Subterms;
        let c1 = psi.apply(&t1);
        // extensive
        assert!(t1.is_subset(&c1));
        // monotone
        assert!(c1.is_subset(&psi.apply(&t2)));
        // idempotent
        assert_eq!(psi.apply(&c1), c1);
        // stable under renaming constants
        let rename = |t: &Term| -> Term {
            fn go(p: &TermPool, t: &Term) -> Term {
                match t.node() {
                    TermNode::Const(c) => p.cst(format!("{c}_r")),
                    TermNode::App(f, args) => {
                        p.app(f.clone(), args.iter().map(|a| go(p, a)).collect())
                    }
                    _ => t.clone(),
                }
            }
            go(&p, t)
        };
        let renamed: BTreeSet<Term> = t1.iter().map(rename).collect();
        let renamed_closure: BTreeSet<Term> = c1.iter().map(rename).collect();
        assert_eq!(psi.apply(&renamed), renamed_closure);
    }
}
