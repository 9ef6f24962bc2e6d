//! Ground interpolation for separable theory extensions.
//!
//! Given ground formulas `A` and `B` that are jointly unsatisfiable over a
//! chain of theory extensions, this module computes a ground interpolant
//! `I`: a formula over the symbols common to both sides with `A ⊨ I` and
//! `B ∧ I` unsatisfiable. The construction instantiates the extension
//! axioms over a closure of each side's terms (so that instances never mix
//! side-local symbols), then runs the symbol-elimination pipeline on the
//! `A`-side with the shared symbols as parameters; the back-substituted
//! result is the interpolant. Separability of the extension with respect to
//! the chosen closure is an assumption recorded in the report, not a proven
//! fact; an independent verification pass checks the interpolant contract
//! after the fact.

use crate::base::{BaseTheoryId, QeConfig, QeError, Verdict};
use crate::core::formula::DnfOverflow;
use crate::core::{Clause, Formula, Signature, Term, TermNode, TermPool};
use crate::locality::{self, LocalityError, ReduceOptions, SplitGoal, TheorySpec};
use crate::symelim::{self, ElimOptions, SymElimError, SymElimResult};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

// ---------------------------------------------------------------------------
// Shared symbols
// ---------------------------------------------------------------------------

/// The symbols an interpolant may mention, besides base-theory material.
///
/// `functions` holds declared extension symbols (of any arity, including
/// declared constants) that count as common to both sides: two extension
/// symbols are linked when they occur in the same axiom clause, and a
/// symbol is common when its link-class reaches both `A` and `B`.
/// `constants` holds the undeclared constants occurring in both `A` and `B`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SharedSymbols {
    pub functions: BTreeSet<String>,
    pub constants: BTreeSet<String>,
}

impl SharedSymbols {
    /// Restricts the extension-symbol part to the given set, keeping the
    /// shared source constants. Used when the problem designates a narrower
    /// parameter vocabulary for the interpolant.
    pub fn narrow(&mut self, allowed: &BTreeSet<String>) {
        self.functions.retain(|f| allowed.contains(f));
    }
}

/// Extension symbols (declared functions and constants) occurring in a
/// clause set.
fn extension_symbols(sig: &Signature, clauses: &[Clause]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for c in clauses {
        out.extend(c.func_names().into_iter().filter(|f| sig.is_extension(f)));
        out.extend(c.constants().into_iter().filter(|n| sig.is_extension(n)));
    }
    out
}

/// Constants of a clause set that are not declared symbols.
fn free_constants(sig: &Signature, clauses: &[Clause]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for c in clauses {
        out.extend(c.constants().into_iter().filter(|n| !sig.is_extension(n)));
    }
    out
}

/// Computes the symbols common to `a` and `b`: extension symbols whose
/// co-occurrence class (symbols appearing together in some axiom clause,
/// closed transitively) has a member in `a` and a member in `b`, plus the
/// undeclared constants present on both sides.
pub fn shared_symbols(spec: &TheorySpec, a: &[Clause], b: &[Clause]) -> SharedSymbols {
    let sig = spec.sig();
    let symbols: Vec<String> = sig.all().map(|d| d.name.clone()).collect();
    let index: BTreeMap<&str, usize> =
        symbols.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..symbols.len()).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for level in spec.levels() {
        for clause in &level.axioms {
            let members = extension_symbols(sig, std::slice::from_ref(clause));
            let mut ids = members.iter().filter_map(|m| index.get(m.as_str()).copied());
            if let Some(first) = ids.next() {
                for other in ids {
                    let (ra, rb) = (find(&mut parent, first), find(&mut parent, other));
                    parent[ra] = rb;
                }
            }
        }
    }
    let touched = |side: &[Clause]| -> BTreeSet<usize> {
        extension_symbols(sig, side)
            .iter()
            .filter_map(|s| index.get(s.as_str()).copied())
            .collect()
    };
    let (in_a, in_b) = (touched(a), touched(b));
    let class_touches = |parent: &mut Vec<usize>, set: &BTreeSet<usize>, i: usize| -> bool {
        let root = find(parent, i);
        set.iter().any(|&j| find(parent, j) == root)
    };
    let mut functions = BTreeSet::new();
    for (i, s) in symbols.iter().enumerate() {
        if class_touches(&mut parent, &in_a, i) && class_touches(&mut parent, &in_b, i) {
            functions.insert(s.clone());
        }
    }
    let constants: BTreeSet<String> = free_constants(sig, a)
        .intersection(&free_constants(sig, b))
        .cloned()
        .collect();
    SharedSymbols { functions, constants }
}

// ---------------------------------------------------------------------------
// Amalgamation closures
// ---------------------------------------------------------------------------

/// Policy producing, for an ordered pair of ground term sets, the
/// instantiation terms for the first side. Both built-ins start from the
/// ground subterms of the axioms and of the first side's terms;
/// `SharedConstants` additionally applies the listed functions to the
/// constants occurring on both sides (optionally restricted to a designated
/// subset). Declared constants never feed these products; they already
/// enter through the axiom subterms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmalgClosure {
    SharedConstants {
        functions: BTreeSet<String>,
        /// When set, only these shared constants generate products.
        constants: Option<BTreeSet<String>>,
    },
    SubtermOnly,
}

impl AmalgClosure {
    pub fn shared_constants(functions: impl IntoIterator<Item = String>) -> AmalgClosure {
        AmalgClosure::SharedConstants { functions: functions.into_iter().collect(), constants: None }
    }

    /// Constants designated by the policy itself (the product restriction):
    /// renamings in the equivariance law are expected to fix these.
    pub fn designated_constants(&self) -> BTreeSet<String> {
        match self {
            AmalgClosure::SharedConstants { constants: Some(cs), .. } => cs.clone(),
            _ => BTreeSet::new(),
        }
    }
}

/// Ground subterms of every axiom in the chain.
fn axiom_ground_subterms(spec: &TheorySpec) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for level in spec.levels() {
        for clause in &level.axioms {
            out.extend(clause.subterms().into_iter().filter(Term::is_ground));
        }
    }
    out
}

/// Undeclared constant names occurring in a term set.
fn free_constants_of_terms(sig: &Signature, terms: &BTreeSet<Term>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in terms {
        out.extend(t.constants().into_iter().filter(|n| !sig.is_extension(n)));
    }
    out
}

/// Applies the closure policy to the ordered pair `(t_a, t_b)`, producing
/// the instantiation terms for the first side. The result is subterm-closed
/// and deterministically ordered.
pub fn closure_apply(
    pool: &TermPool,
    spec: &TheorySpec,
    w: &AmalgClosure,
    t_a: &BTreeSet<Term>,
    t_b: &BTreeSet<Term>,
) -> BTreeSet<Term> {
    let mut out = axiom_ground_subterms(spec);
    for t in t_a {
        t.collect_subterms(&mut out);
    }
    if let AmalgClosure::SharedConstants { functions, constants } = w {
        let sig = spec.sig();
        let mut shared: BTreeSet<String> = free_constants_of_terms(sig, t_a)
            .intersection(&free_constants_of_terms(sig, t_b))
            .cloned()
            .collect();
        if let Some(allowed) = constants {
            shared.retain(|c| allowed.contains(c));
        }
        let args: Vec<Term> = shared.iter().map(|c| pool.cst(c.clone())).collect();
        for f in functions {
            let arity = match sig.lookup(f) {
                Some(d) => d.arity,
                None => continue,
            };
            if arity == 0 {
                out.insert(pool.cst(f.clone()));
                continue;
            }
            for tuple in tuples(&args, arity) {
                out.insert(pool.app(f.clone(), tuple));
            }
        }
    }
    out
}

/// All `n`-tuples over `values`, in lexicographic order.
fn tuples(values: &[Term], n: usize) -> Vec<Vec<Term>> {
    let mut out: Vec<Vec<Term>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for prefix in &out {
            for v in values {
                let mut t = prefix.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Closure laws
// ---------------------------------------------------------------------------

/// The axiom and first-side subterms are contained in the closure output.
pub fn closure_includes_base_terms(
    pool: &TermPool,
    spec: &TheorySpec,
    w: &AmalgClosure,
    t_a: &BTreeSet<Term>,
    t_b: &BTreeSet<Term>,
) -> bool {
    let out = closure_apply(pool, spec, w, t_a, t_b);
    let mut required = axiom_ground_subterms(spec);
    for t in t_a {
        t.collect_subterms(&mut required);
    }
    required.is_subset(&out)
}

/// Growing either input never shrinks the output (callers supply supersets).
pub fn closure_monotone(
    pool: &TermPool,
    spec: &TheorySpec,
    w: &AmalgClosure,
    t_a: &BTreeSet<Term>,
    t_b: &BTreeSet<Term>,
    t_a_sup: &BTreeSet<Term>,
    t_b_sup: &BTreeSet<Term>,
) -> bool {
    debug_assert!(t_a.is_subset(t_a_sup) && t_b.is_subset(t_b_sup));
    let small = closure_apply(pool, spec, w, t_a, t_b);
    let large = closure_apply(pool, spec, w, t_a_sup, t_b_sup);
    small.is_subset(&large)
}

/// Re-applying the closure to its own two-sided output adds nothing.
pub fn closure_idempotent(
    pool: &TermPool,
    spec: &TheorySpec,
    w: &AmalgClosure,
    t_a: &BTreeSet<Term>,
    t_b: &BTreeSet<Term>,
) -> bool {
    let wa = closure_apply(pool, spec, w, t_a, t_b);
    let wb = closure_apply(pool, spec, w, t_b, t_a);
    closure_apply(pool, spec, w, &wa, &wb).is_subset(&wa)
}

/// Renaming undeclared constants commutes with the closure. The map must
/// keep one side's non-shared constants apart from the other's and fix the
/// policy's designated constants; declared symbols are never renamed.
pub fn closure_equivariant(
    pool: &TermPool,
    spec: &TheorySpec,
    w: &AmalgClosure,
    t_a: &BTreeSet<Term>,
    t_b: &BTreeSet<Term>,
    renaming: &BTreeMap<String, String>,
) -> bool {
    let sig = spec.sig();
    let apply = |terms: &BTreeSet<Term>| -> BTreeSet<Term> {
        terms.iter().map(|t| rename_constants(pool, sig, t, renaming)).collect()
    };
    let direct = closure_apply(pool, spec, w, &apply(t_a), &apply(t_b));
    let mapped = apply(&closure_apply(pool, spec, w, t_a, t_b));
    direct == mapped
}

/// Every undeclared constant in the output already occurs on the first side.
pub fn closure_side_pure(
    pool: &TermPool,
    spec: &TheorySpec,
    w: &AmalgClosure,
    t_a: &BTreeSet<Term>,
    t_b: &BTreeSet<Term>,
) -> bool {
    let sig = spec.sig();
    let out = closure_apply(pool, spec, w, t_a, t_b);
    free_constants_of_terms(sig, &out).is_subset(&free_constants_of_terms(sig, t_a))
}

fn rename_constants(
    pool: &TermPool,
    sig: &Signature,
    t: &Term,
    renaming: &BTreeMap<String, String>,
) -> Term {
    match t.node() {
        TermNode::Const(n) if !sig.is_extension(n) => match renaming.get(n) {
            Some(m) => pool.cst(m.clone()),
            None => t.clone(),
        },
        TermNode::App(f, args) => pool.app(
            f.clone(),
            args.iter().map(|a| rename_constants(pool, sig, a, renaming)).collect(),
        ),
        _ => t.clone(),
    }
}

// ---------------------------------------------------------------------------
// Problems, reports, errors
// ---------------------------------------------------------------------------

/// A two-sided ground problem over a chain specification.
#[derive(Debug, Clone)]
pub struct InterpolationProblem {
    pub a: Vec<Clause>,
    pub b: Vec<Clause>,
    /// Closure policy; `None` selects `SharedConstants` over the computed
    /// common extension functions with no constant restriction.
    pub closure: Option<AmalgClosure>,
    /// Eliminate from the `B` side instead and report the negation (which
    /// by symmetry satisfies the same contract for the ordered pair `(A, B)`
    /// and is checked against it before being reported).
    pub from_b: bool,
}

impl InterpolationProblem {
    pub fn new(a: Vec<Clause>, b: Vec<Clause>) -> InterpolationProblem {
        InterpolationProblem { a, b, closure: None, from_b: false }
    }
}

/// Everything produced while computing one interpolant.
#[derive(Debug, Clone)]
pub struct InterpolantReport {
    pub interpolant: Formula,
    pub shared: SharedSymbols,
    /// Symbols in the interpolant outside the shared vocabulary (empty
    /// means the audit passed).
    pub audit_violations: Vec<String>,
    /// First contract half: `A` together with the negated interpolant is
    /// unsatisfiable.
    pub a_implies: bool,
    /// Second contract half: `B` together with the interpolant is
    /// unsatisfiable.
    pub b_refuted: bool,
    pub qe_theory: BaseTheoryId,
    pub used_model_completion: bool,
    /// Separability of the extension w.r.t. the closure is taken on trust;
    /// only its consequences on this instance are checked.
    pub separability_assumed: bool,
    pub closure_used: AmalgClosure,
    /// Closure outputs for the two sides, in term order.
    pub w_a: Vec<Term>,
    pub w_b: Vec<Term>,
    /// The elimination run behind the interpolant (side per `from_b`).
    pub elim: SymElimResult,
}

impl InterpolantReport {
    /// True when both contract halves hold and the audit found nothing.
    pub fn verified(&self) -> bool {
        self.a_implies && self.b_refuted && self.audit_violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterpError {
    /// Both input formulas must be ground.
    NonGround { clause: String },
    /// The sides are jointly satisfiable — no interpolant exists.
    NotUnsat,
    /// The joint problem is unsatisfiable but the closure-driven instances
    /// are not enough to expose it: the chosen closure is too small for
    /// this instance (or the extension is not separable with it).
    SeparationIncomplete,
    /// The base theory has no quantifier elimination and no completion.
    MissingQe(BaseTheoryId),
    Locality(LocalityError),
    Elim(SymElimError),
    Qe(QeError),
    Overflow(usize),
}

impl fmt::Display for InterpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpError::NonGround { clause } => {
                write!(f, "interpolation inputs must be ground: {clause}")
            }
            InterpError::NotUnsat => {
                write!(f, "the two sides are jointly satisfiable; no interpolant exists")
            }
            InterpError::SeparationIncomplete => write!(
                f,
                "the closure-driven instances do not expose the joint unsatisfiability; \
                 choose a larger closure"
            ),
            InterpError::MissingQe(t) => {
                write!(f, "theory {t:?} has no quantifier elimination or completion")
            }
            InterpError::Locality(e) => write!(f, "{e}"),
            InterpError::Elim(e) => write!(f, "{e}"),
            InterpError::Qe(e) => write!(f, "{e}"),
            InterpError::Overflow(n) => write!(f, "normal form exceeded {n} disjuncts"),
        }
    }
}

impl std::error::Error for InterpError {}

impl From<LocalityError> for InterpError {
    fn from(e: LocalityError) -> Self {
        InterpError::Locality(e)
    }
}

impl From<SymElimError> for InterpError {
    fn from(e: SymElimError) -> Self {
        match e {
            SymElimError::MissingQe(t) => InterpError::MissingQe(t),
            other => InterpError::Elim(other),
        }
    }
}

impl From<QeError> for InterpError {
    fn from(e: QeError) -> Self {
        InterpError::Qe(e)
    }
}

impl From<DnfOverflow> for InterpError {
    fn from(e: DnfOverflow) -> Self {
        InterpError::Overflow(e.0)
    }
}

// ---------------------------------------------------------------------------
// Two-sided instantiation
// ---------------------------------------------------------------------------

fn check_ground(clauses: &[Clause]) -> Result<(), InterpError> {
    match clauses.iter().find(|c| !c.is_ground()) {
        Some(c) => Err(InterpError::NonGround { clause: c.to_string() }),
        None => Ok(()),
    }
}

fn term_set(clauses: &[Clause]) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for c in clauses {
        out.extend(c.subterms());
    }
    out
}

/// Distributes closure terms to the chain levels that instantiate them,
/// keyed by the level of each term's root symbol. Terms not rooted at a
/// declared symbol match no axiom pattern and are dropped.
pub fn seeds_by_level(spec: &TheorySpec, w: &BTreeSet<Term>) -> BTreeMap<usize, Vec<Term>> {
    let mut out: BTreeMap<usize, Vec<Term>> = BTreeMap::new();
    for t in w {
        let name = match t.node() {
            TermNode::App(f, _) => f.as_str(),
            TermNode::Const(c) => c.as_str(),
            _ => continue,
        };
        if let Some(level) = spec.sig().level_of(name) {
            out.entry(level).or_default().push(t.clone());
        }
    }
    out
}

/// Instantiates every level's axioms over the two closure outputs and
/// appends the respective side: the first component is the first side plus
/// the instances its closure licenses, and symmetrically for the second.
pub fn separate_instantiate(
    pool: &TermPool,
    spec: &TheorySpec,
    a: &[Clause],
    b: &[Clause],
    w: &AmalgClosure,
) -> Result<(Vec<Clause>, Vec<Clause>), InterpError> {
    check_ground(a)?;
    check_ground(b)?;
    let (st_a, st_b) = (term_set(a), term_set(b));
    let w_a = closure_apply(pool, spec, w, &st_a, &st_b);
    let w_b = closure_apply(pool, spec, w, &st_b, &st_a);
    let side = |goal: &[Clause], terms: &BTreeSet<Term>| -> Result<Vec<Clause>, InterpError> {
        let mut out = goal.to_vec();
        for level in 1..=spec.num_levels() {
            let instances =
                locality::instantiate(pool, spec.sig(), level, spec.axioms_at(level), terms)?;
            for inst in instances {
                if !out.contains(&inst) {
                    out.push(inst);
                }
            }
        }
        Ok(out)
    };
    Ok((side(a, &w_a)?, side(b, &w_b)?))
}

// ---------------------------------------------------------------------------
// Interpolant computation and verification
// ---------------------------------------------------------------------------

/// Default policy: products of all common extension functions over all
/// shared constants.
pub fn default_closure(shared: &SharedSymbols, sig: &Signature) -> AmalgClosure {
    let functions = shared
        .functions
        .iter()
        .filter(|f| sig.lookup(f).map(|d| d.arity > 0) == Some(true))
        .cloned()
        .collect();
    AmalgClosure::SharedConstants { functions, constants: None }
}

/// Symbols of `i` outside the shared vocabulary. Base-interpreted function
/// names pass; fresh purification names never do.
pub fn audit_interpolant(i: &Formula, sig: &Signature, shared: &SharedSymbols) -> Vec<String> {
    let mut bad: BTreeSet<String> = BTreeSet::new();
    for f in i.func_names() {
        if f == "+" || f == "*" {
            continue;
        }
        if !shared.functions.contains(&f) {
            bad.insert(f);
        }
    }
    for c in i.constants() {
        let ok = if sig.is_extension(&c) {
            shared.functions.contains(&c)
        } else {
            !c.starts_with('#') && shared.constants.contains(&c)
        };
        if !ok {
            bad.insert(c);
        }
    }
    bad.into_iter().collect()
}

/// Checks the interpolant contract for the ordered pair `(a, b)`: the first
/// verdict is whether `a` together with each disjunct of the negated
/// formula is unsatisfiable over the extension, the second whether `b`
/// together with each disjunct of the formula itself is. Both checks run
/// through the standard reduction, independent of how `i` was obtained.
pub fn verify_interpolant(
    spec: &TheorySpec,
    pool: &TermPool,
    a: &[Clause],
    b: &[Clause],
    i: &Formula,
    cfg: &QeConfig,
) -> Result<(bool, bool), InterpError> {
    if !i.is_quantifier_free() || !i.free_vars().is_empty() {
        return Err(InterpError::NonGround { clause: i.to_string() });
    }
    let a_ok = refuted_with_each_disjunct(spec, pool, a, &Formula::not(i.clone()), cfg)?;
    let b_ok = refuted_with_each_disjunct(spec, pool, b, i, cfg)?;
    Ok((a_ok, b_ok))
}

fn refuted_with_each_disjunct(
    spec: &TheorySpec,
    pool: &TermPool,
    side: &[Clause],
    extra: &Formula,
    cfg: &QeConfig,
) -> Result<bool, InterpError> {
    for disjunct in extra.dnf(cfg.max_disjuncts)? {
        let mut goal = side.to_vec();
        goal.extend(disjunct.into_iter().map(Clause::unit));
        let decision =
            locality::decide_sat_extension(spec, pool, &goal, &ReduceOptions::default(), cfg)?;
        if decision.verdict == Verdict::Sat {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Computes a ground interpolant for the problem's two sides.
///
/// The pipeline: check that the sides are jointly unsatisfiable; compute
/// the shared vocabulary (narrowed to the declared parameters when the
/// specification names any); apply the closure policy to both sides; check
/// that the closure-driven instances already expose the contradiction;
/// run reduction, elimination, and back-substitution on the designated
/// side with the shared symbols as parameters; audit and verify the result.
pub fn compute_interpolant(
    spec: &TheorySpec,
    pool: &TermPool,
    problem: &InterpolationProblem,
    cfg: &QeConfig,
) -> Result<InterpolantReport, InterpError> {
    check_ground(&problem.a)?;
    check_ground(&problem.b)?;
    let (qe_theory, used_model_completion) = symelim::qe_theory_for(spec.base())?;

    // The sides must be jointly unsatisfiable for an interpolant to exist.
    let mut joint = problem.a.clone();
    joint.extend(problem.b.iter().cloned());
    let plain =
        locality::decide_sat_extension(spec, pool, &joint, &ReduceOptions::default(), cfg)?;
    if plain.verdict == Verdict::Sat {
        return Err(InterpError::NotUnsat);
    }

    // Shared vocabulary, optionally narrowed by the declared parameters.
    let mut shared = shared_symbols(spec, &problem.a, &problem.b);
    if !spec.params().is_empty() {
        shared.narrow(spec.params());
    }

    // Closure outputs for both sides.
    let closure = match &problem.closure {
        Some(w) => w.clone(),
        None => default_closure(&shared_symbols(spec, &problem.a, &problem.b), spec.sig()),
    };
    let (st_a, st_b) = (term_set(&problem.a), term_set(&problem.b));
    let w_a = closure_apply(pool, spec, &closure, &st_a, &st_b);
    let w_b = closure_apply(pool, spec, &closure, &st_b, &st_a);
    let seeds_a = seeds_by_level(spec, &w_a);
    let seeds_b = seeds_by_level(spec, &w_b);

    // The closure-driven instances alone must expose the contradiction;
    // each side is instantiated over its own closure output only.
    let separated_opts = ReduceOptions {
        seeds: seeds_a.clone(),
        split: Some(SplitGoal { at: problem.a.len(), seeds_b: seeds_b.clone() }),
    };
    let separated = locality::decide_sat_extension(spec, pool, &joint, &separated_opts, cfg)?;
    if separated.verdict == Verdict::Sat {
        return Err(InterpError::SeparationIncomplete);
    }

    // Eliminate the side-local symbols from the designated side.
    let (side_goal, side_seeds) =
        if problem.from_b { (&problem.b, seeds_b) } else { (&problem.a, seeds_a) };
    let mut params: BTreeSet<String> = shared.functions.clone();
    params.extend(shared.constants.iter().cloned());
    let elim_opts = ElimOptions {
        params: Some(params),
        allowed_args: Some(shared.constants.clone()),
        seeds: side_seeds,
        split: None,
    };
    let elim = symelim::steps_1_to_4(spec, pool, side_goal, &elim_opts, cfg)?;
    let interpolant = if problem.from_b {
        symelim::simplify_ground_uif(qe_theory, pool, &Formula::not(elim.gamma2.clone()), cfg)?
    } else {
        elim.gamma2.clone()
    };

    let audit_violations = audit_interpolant(&interpolant, spec.sig(), &shared);
    let (a_implies, b_refuted) =
        verify_interpolant(spec, pool, &problem.a, &problem.b, &interpolant, cfg)?;

    Ok(InterpolantReport {
        interpolant,
        shared,
        audit_violations,
        a_implies,
        b_refuted,
        qe_theory,
        used_model_completion,
        separability_assumed: true,
        closure_used: closure,
        w_a: w_a.into_iter().collect(),
        w_b: w_b.into_iter().collect(),
        elim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{Literal, Rel};
    use crate::locality::Level;
    use crate::symelim::equivalent_ground_uif;

    fn pool() -> TermPool {
        TermPool::new()
    }

    fn names(s: &[&str]) -> BTreeSet<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    /// Total-order base extended by f, g with the semi-Galois condition
    /// `x <= g(y) -> f(x) <= y` and monotonicity of both functions.
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

    fn galois_sides(p: &TermPool) -> (Vec<Clause>, Vec<Clause>) {
        let a = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("d"), p.app("g", vec![p.cst("a")]))),
            Clause::unit(Literal::pos(Rel::Le, p.cst("a"), p.cst("c"))),
        ];
        let b = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("b"), p.cst("d"))),
            Clause::unit(Literal::neg(Rel::Le, p.app("f", vec![p.cst("b")]), p.cst("c"))),
        ];
        (a, b)
    }

    /// The tight closure for the semi-Galois pair: products only of f over
    /// the designated constant d.
    fn tight_closure() -> AmalgClosure {
        AmalgClosure::SharedConstants { functions: names(&["f"]), constants: Some(names(&["d"])) }
    }

    /// Dense-order base with one extension level holding a threshold
    /// constant c, free f and h, and a case-defined g.
    fn case_split_spec() -> (TermPool, TheorySpec) {
        let p = pool();
        let low = Clause::new(vec![
            Literal::neg(Rel::Le, p.var("x"), p.cst("c")),
            Literal::pos(Rel::Eq, p.app("g", vec![p.var("x")]), p.app("f", vec![p.var("x")])),
        ]);
        let high = Clause::new(vec![
            Literal::neg(Rel::Lt, p.cst("c"), p.var("x")),
            Literal::pos(Rel::Eq, p.app("g", vec![p.var("x")]), p.app("h", vec![p.var("x")])),
        ]);
        let spec = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![Level {
                functions: vec![
                    ("f".into(), 1),
                    ("g".into(), 1),
                    ("h".into(), 1),
                    ("c".into(), 0),
                ],
                axioms: vec![low, high],
            }],
            ["f".to_string(), "h".to_string(), "c".to_string()],
        )
        .unwrap();
        (p, spec)
    }

    fn case_split_sides(p: &TermPool) -> (Vec<Clause>, Vec<Clause>) {
        let g = |c: &str| p.app("g", vec![p.cst(c)]);
        let a = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c2"))),
            Clause::unit(Literal::pos(Rel::Eq, g("c1"), p.cst("a1"))),
            Clause::unit(Literal::pos(Rel::Eq, g("c2"), p.cst("a2"))),
            Clause::unit(Literal::pos(Rel::Lt, p.cst("a2"), p.cst("a1"))),
        ];
        let b = vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c"))),
            Clause::unit(Literal::pos(Rel::Lt, p.cst("c"), p.cst("c2"))),
            Clause::unit(Literal::pos(Rel::Eq, p.app("f", vec![p.cst("c1")]), p.cst("b1"))),
            Clause::unit(Literal::pos(Rel::Eq, p.app("h", vec![p.cst("c2")]), p.cst("b2"))),
            Clause::unit(Literal::pos(Rel::Le, p.cst("b1"), p.cst("b2"))),
        ];
        (a, b)
    }

    fn conj(clauses: &[Clause]) -> Formula {
        Formula::and(clauses.iter().map(Clause::to_formula).collect())
    }

    #[test]
    fn linked_functions_and_both_side_constants_are_shared() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let shared = shared_symbols(&spec, &a, &b);
        // f and g occur together in the semi-Galois clause; only g occurs
        // in A and only f in B, yet both are common through the link.
        assert_eq!(shared.functions, names(&["f", "g"]));
        assert_eq!(shared.constants, names(&["c", "d"]));
    }

    #[test]
    fn threshold_constant_is_shared_through_the_axioms() {
        let (p, spec) = case_split_spec();
        let (a, b) = case_split_sides(&p);
        let shared = shared_symbols(&spec, &a, &b);
        assert_eq!(shared.functions, names(&["c", "f", "g", "h"]));
        assert_eq!(shared.constants, names(&["c1", "c2"]));
    }

    #[test]
    fn default_closure_products_range_over_both_side_constants() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let shared = shared_symbols(&spec, &a, &b);
        let w = default_closure(&shared, spec.sig());
        let out = closure_apply(&p, &spec, &w, &term_set(&a), &term_set(&b));
        let mut expected = term_set(&a);
        for f in ["f", "g"] {
            for c in ["c", "d"] {
                expected.insert(p.app(f, vec![p.cst(c)]));
            }
        }
        assert_eq!(out, expected);
    }

    #[test]
    fn restricted_closure_matches_the_tight_instantiation_set() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let out = closure_apply(&p, &spec, &tight_closure(), &term_set(&a), &term_set(&b));
        let expected: BTreeSet<Term> = [
            p.cst("a"),
            p.cst("c"),
            p.cst("d"),
            p.app("g", vec![p.cst("a")]),
            p.app("f", vec![p.cst("d")]),
        ]
        .into_iter()
        .collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn empty_inputs_give_an_empty_closure() {
        let (_, spec) = galois_spec();
        let p = pool();
        let out =
            closure_apply(&p, &spec, &AmalgClosure::SubtermOnly, &BTreeSet::new(), &BTreeSet::new());
        assert!(out.is_empty());
    }

    #[test]
    fn separated_sets_simplify_to_the_expected_side_formulas() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let (s_a, s_b) = separate_instantiate(&p, &spec, &a, &b, &tight_closure()).unwrap();

        // The A side gains the semi-Galois instance at (d, a).
        let fd = p.app("f", vec![p.cst("d")]);
        let ga = p.app("g", vec![p.cst("a")]);
        let sgc_inst = Clause::new(vec![
            Literal::neg(Rel::Le, p.cst("d"), ga.clone()),
            Literal::pos(Rel::Le, fd.clone(), p.cst("a")),
        ]);
        assert!(s_a.contains(&sgc_inst));

        let le = |x: Term, y: Term| Formula::Atom(Literal::pos(Rel::Le, x, y));
        let cfg = QeConfig::default();
        let expect_a = Formula::and(vec![
            le(p.cst("d"), ga),
            le(p.cst("a"), p.cst("c")),
            le(fd.clone(), p.cst("a")),
        ]);
        assert!(equivalent_ground_uif(BaseTheoryId::TOrd, &p, &conj(&s_a), &expect_a, &cfg)
            .unwrap());

        // The B side gains monotonicity of f between b and d.
        let fb = p.app("f", vec![p.cst("b")]);
        let expect_b = Formula::and(vec![
            le(p.cst("b"), p.cst("d")),
            Formula::not(le(fb.clone(), p.cst("c"))),
            le(fb, fd),
        ]);
        assert!(equivalent_ground_uif(BaseTheoryId::TOrd, &p, &conj(&s_b), &expect_b, &cfg)
            .unwrap());
    }

    #[test]
    fn base_only_sides_gain_no_instances() {
        let (p, spec) = galois_spec();
        let a = vec![Clause::unit(Literal::pos(Rel::Le, p.cst("u"), p.cst("v")))];
        let b = vec![Clause::unit(Literal::pos(Rel::Lt, p.cst("v"), p.cst("u")))];
        let w = default_closure(&shared_symbols(&spec, &a, &b), spec.sig());
        let (s_a, s_b) = separate_instantiate(&p, &spec, &a, &b, &w).unwrap();
        assert_eq!(s_a, a);
        assert_eq!(s_b, b);
    }

    #[test]
    fn galois_interpolant_is_the_shared_bound() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let cfg = QeConfig::default();
        let mut problem = InterpolationProblem::new(a, b);
        problem.closure = Some(tight_closure());
        let report = compute_interpolant(&spec, &p, &problem, &cfg).unwrap();

        let expected = Formula::Atom(Literal::pos(
            Rel::Le,
            p.app("f", vec![p.cst("d")]),
            p.cst("c"),
        ));
        assert!(equivalent_ground_uif(
            BaseTheoryId::Dlo,
            &p,
            &report.interpolant,
            &expected,
            &cfg
        )
        .unwrap());
        assert!(report.verified(), "audit: {:?}", report.audit_violations);
        assert!(report.used_model_completion);
        assert_eq!(report.qe_theory, BaseTheoryId::Dlo);
    }

    #[test]
    fn eliminating_from_the_other_side_gives_an_equivalent_interpolant() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let cfg = QeConfig::default();
        let mut problem = InterpolationProblem::new(a, b);
        problem.closure = Some(tight_closure());
        problem.from_b = true;
        let report = compute_interpolant(&spec, &p, &problem, &cfg).unwrap();
        let expected = Formula::Atom(Literal::pos(
            Rel::Le,
            p.app("f", vec![p.cst("d")]),
            p.cst("c"),
        ));
        assert!(equivalent_ground_uif(
            BaseTheoryId::Dlo,
            &p,
            &report.interpolant,
            &expected,
            &cfg
        )
        .unwrap());
        assert!(report.verified());
    }

    #[test]
    fn case_split_interpolant_matches_the_three_case_formula() {
        let (p, spec) = case_split_spec();
        let (a, b) = case_split_sides(&p);
        let cfg = QeConfig::default();
        let problem = InterpolationProblem::new(a, b);
        let report = compute_interpolant(&spec, &p, &problem, &cfg).unwrap();

        let f = |c: &str| p.app("f", vec![p.cst(c)]);
        let h = |c: &str| p.app("h", vec![p.cst(c)]);
        let lt = |x: Term, y: Term| Formula::Atom(Literal::pos(Rel::Lt, x, y));
        let le = |x: Term, y: Term| Formula::Atom(Literal::pos(Rel::Le, x, y));
        let expected = Formula::or(vec![
            Formula::and(vec![
                lt(p.cst("c1"), p.cst("c2")),
                le(p.cst("c2"), p.cst("c")),
                lt(f("c2"), f("c1")),
            ]),
            Formula::and(vec![
                le(p.cst("c1"), p.cst("c")),
                lt(p.cst("c"), p.cst("c2")),
                lt(h("c2"), f("c1")),
            ]),
            Formula::and(vec![
                lt(p.cst("c"), p.cst("c1")),
                lt(p.cst("c1"), p.cst("c2")),
                lt(h("c2"), h("c1")),
            ]),
        ]);
        assert!(equivalent_ground_uif(
            BaseTheoryId::Dlo,
            &p,
            &report.interpolant,
            &expected,
            &cfg
        )
        .unwrap());
        assert!(report.verified(), "audit: {:?}", report.audit_violations);
        // The narrowed vocabulary shuts g out of the interpolant.
        assert_eq!(report.shared.functions, names(&["c", "f", "h"]));
        assert!(!report.interpolant.func_names().contains("g"));
    }

    #[test]
    fn satisfiable_sides_are_rejected() {
        let (p, spec) = galois_spec();
        let (a, mut b) = galois_sides(&p);
        b.pop(); // drop the refuting bound; A and B become compatible
        let cfg = QeConfig::default();
        let problem = InterpolationProblem::new(a, b);
        let err = compute_interpolant(&spec, &p, &problem, &cfg).unwrap_err();
        assert_eq!(err, InterpError::NotUnsat);
    }

    #[test]
    fn a_closure_without_products_fails_separation() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let cfg = QeConfig::default();
        let mut problem = InterpolationProblem::new(a, b);
        problem.closure = Some(AmalgClosure::SubtermOnly);
        let err = compute_interpolant(&spec, &p, &problem, &cfg).unwrap_err();
        assert_eq!(err, InterpError::SeparationIncomplete);
    }

    #[test]
    fn contradictory_first_side_gives_the_false_interpolant() {
        let (p, spec) = galois_spec();
        let a = vec![Clause::unit(Literal::pos(Rel::Lt, p.cst("u"), p.cst("u")))];
        let b = vec![Clause::unit(Literal::pos(Rel::Le, p.cst("v"), p.cst("v")))];
        let cfg = QeConfig::default();
        let problem = InterpolationProblem::new(a, b);
        let report = compute_interpolant(&spec, &p, &problem, &cfg).unwrap();
        assert_eq!(report.interpolant, Formula::False);
        assert!(report.verified());
    }

    #[test]
    fn audit_flags_symbols_outside_the_shared_vocabulary() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let shared = shared_symbols(&spec, &a, &b);
        let leaky = Formula::Atom(Literal::pos(
            Rel::Le,
            p.app("f", vec![p.cst("a")]),
            p.cst("#3"),
        ));
        let bad = audit_interpolant(&leaky, spec.sig(), &shared);
        assert_eq!(bad, vec!["#3".to_string(), "a".to_string()]);
    }

    #[test]
    fn verification_rejects_a_formula_that_is_no_interpolant() {
        let (p, spec) = galois_spec();
        let (a, b) = galois_sides(&p);
        let cfg = QeConfig::default();
        // d <= c is neither implied by A nor inconsistent with B.
        let wrong = Formula::Atom(Literal::pos(Rel::Le, p.cst("d"), p.cst("c")));
        let (a_ok, b_ok) = verify_interpolant(&spec, &p, &a, &b, &wrong, &cfg).unwrap();
        assert!(!a_ok);
        assert!(!b_ok);
        // The degenerate formulas each satisfy exactly one half.
        let (a_ok, b_ok) = verify_interpolant(&spec, &p, &a, &b, &Formula::True, &cfg).unwrap();
        assert!(a_ok && !b_ok);
        let (a_ok, b_ok) = verify_interpolant(&spec, &p, &a, &b, &Formula::False, &cfg).unwrap();
        assert!(!a_ok && b_ok);
    }

    // -- closure-law samples -------------------------------------------------

    fn sample_sets(p: &TermPool) -> (BTreeSet<Term>, BTreeSet<Term>) {
        let t_a: BTreeSet<Term> = [
            p.app("g", vec![p.cst("u1")]),
            p.cst("u2"),
            p.cst("s"),
        ]
        .into_iter()
        .collect();
        let t_b: BTreeSet<Term> =
            [p.app("f", vec![p.cst("v1")]), p.cst("s"), p.cst("u2")].into_iter().collect();
        (t_a, t_b)
    }

    #[test]
    fn closure_laws_hold_on_fixed_samples() {
        let (p, spec) = galois_spec();
        let (t_a, t_b) = sample_sets(&p);
        for w in [
            default_closure(&SharedSymbols { functions: names(&["f", "g"]), constants: BTreeSet::new() }, spec.sig()),
            tight_closure(),
            AmalgClosure::SubtermOnly,
        ] {
            assert!(closure_includes_base_terms(&p, &spec, &w, &t_a, &t_b));
            assert!(closure_idempotent(&p, &spec, &w, &t_a, &t_b));
            assert!(closure_side_pure(&p, &spec, &w, &t_a, &t_b));
            let mut sup_a = t_a.clone();
            sup_a.insert(p.app("f", vec![p.cst("u3")]));
            let mut sup_b = t_b.clone();
            sup_b.insert(p.cst("u3"));
            assert!(closure_monotone(&p, &spec, &w, &t_a, &t_b, &sup_a, &sup_b));
            // Swap the two non-shared constants and rename a shared one.
            let mut h = BTreeMap::new();
            h.insert("u1".to_string(), "w1".to_string());
            h.insert("v1".to_string(), "w2".to_string());
            h.insert("u2".to_string(), "w3".to_string());
            assert!(closure_equivariant(&p, &spec, &w, &t_a, &t_b, &h));
        }
    }

    #[test]
    fn randomized_closure_laws() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x57a9);
        let (p, spec) = galois_spec();
        let consts = ["m1", "m2", "m3", "m4", "m5"];
        let funcs = ["f", "g"];
        let random_set = |rng: &mut rand_chacha::ChaCha8Rng| -> BTreeSet<Term> {
            let n = rng.gen_range(0..=4);
            (0..n)
                .map(|_| {
                    let c = p.cst(consts[rng.gen_range(0..consts.len())]);
                    if rng.gen_bool(0.5) {
                        p.app(funcs[rng.gen_range(0..funcs.len())], vec![c])
                    } else {
                        c
                    }
                })
                .collect()
        };
        let policies = [
            AmalgClosure::shared_constants(["f".to_string(), "g".to_string()]),
            AmalgClosure::SharedConstants {
                functions: names(&["f"]),
                constants: Some(names(&["m1", "m2"])),
            },
            AmalgClosure::SubtermOnly,
        ];
        for round in 0..200 {
            let t_a = random_set(&mut rng);
            let t_b = random_set(&mut rng);
            let w = &policies[round % policies.len()];
            assert!(closure_includes_base_terms(&p, &spec, w, &t_a, &t_b), "round {round}");
            assert!(closure_idempotent(&p, &spec, w, &t_a, &t_b), "round {round}");
            assert!(closure_side_pure(&p, &spec, w, &t_a, &t_b), "round {round}");
            let mut sup_a = t_a.clone();
            let mut sup_b = t_b.clone();
            sup_a.extend(random_set(&mut rng));
            sup_b.extend(random_set(&mut rng));
            assert!(
                closure_monotone(&p, &spec, w, &t_a, &t_b, &sup_a, &sup_b),
                "round {round}"
            );
            // A permutation of the free constants that fixes the designated
            // ones is always admissible for the equivariance law.
            let designated = w.designated_constants();
            let mut image: Vec<&str> =
                consts.iter().copied().filter(|c| !designated.contains(*c)).collect();
            let slice = image.len();
            for i in (1..slice).rev() {
                image.swap(i, rng.gen_range(0..=i));
            }
            let h: BTreeMap<String, String> = consts
                .iter()
                .copied()
                .filter(|c| !designated.contains(*c))
                .zip(image)
                .map(|(from, to)| (from.to_string(), to.to_string()))
                .collect();
            assert!(closure_equivariant(&p, &spec, w, &t_a, &t_b, &h), "round {round}");
        }
    }
}
