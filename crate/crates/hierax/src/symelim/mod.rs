//! Symbol elimination: synthesis of weakest universal constraints on
//! designated parameter symbols.
//!
//! Given a ground goal over a chain of theory extensions and a set of
//! parameter symbols, the pipeline reduces the goal to the base signature
//! (step 1), partitions the resulting constants into kept, abstractable,
//! and disposable classes (step 2), eliminates the disposable ones by
//! quantifier elimination (step 3), back-substitutes the kept definitions
//! to recover parameter terms (step 4), and finally abstracts the
//! parameter-argument constants to universally quantified variables and
//! negates (step 5). The result is a universal constraint on the parameters
//! whose addition to the theory makes the goal unsatisfiable — the weakest
//! such constraint when the base theory itself admits quantifier
//! elimination and the instantiation set is the default one.

use crate::base::{self, BaseTheoryId, QeConfig, QeError, Verdict};
use crate::core::formula::DnfOverflow;
use crate::core::{clausify, Clause, Formula, Literal, Rel, Signature, Term, TermNode, TermPool};
use crate::locality::{
    self, reduce_chain, LocalityError, ReduceOptions, Reduction, SplitGoal, TheorySpec,
};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

// ---------------------------------------------------------------------------
// Results and errors
// ---------------------------------------------------------------------------

/// Step-2 classification of the reduced problem's constants.
///
/// `c_f`: arity-0 parameters (declared or designated source constants) and
/// fresh constants defined by parameter-rooted terms — these survive and are
/// replaced by their definitions.
/// `c_p`: constants occurring as arguments of parameter functions inside the
/// definitions — these are abstracted to universally quantified variables
/// (fresh members, listed in `nested_c_p`, are first back-substituted when
/// their own definition is parameter-rooted).
/// `c_rest`: everything else — eliminated by quantification.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstantPartition {
    pub c_f: BTreeSet<String>,
    pub c_p: BTreeSet<String>,
    pub c_rest: BTreeSet<String>,
    /// Members of `c_p` that are themselves fresh constants (a parameter
    /// applied to a purified subterm) — worth flagging in reports because
    /// the construction is only spelled out for unnested arguments.
    pub nested_c_p: BTreeSet<String>,
    /// Fresh constants whose definitions are parameter-rooted with
    /// admissible arguments all the way down; step 4 rebuilds exactly
    /// these. Superset of the fresh part of `c_f`.
    pub reconstructible: BTreeSet<String>,
}

/// Output of the elimination pipeline. `gamma1` is the quantifier-free
/// formula over kept and abstractable constants after quantifier
/// elimination; `gamma2` is its back-substituted form over base symbols and
/// parameter terms; `constraint` (populated by [`symbol_eliminate`]) is the
/// universal closure of the negation, rendered as guarded implications.
#[derive(Debug, Clone)]
pub struct SymElimResult {
    pub reduction: Reduction,
    pub partition: ConstantPartition,
    pub gamma1_raw: Formula,
    pub gamma1: Formula,
    pub gamma2_raw: Formula,
    pub gamma2: Formula,
    pub constraint: Option<Formula>,
    /// Theory in which quantifier elimination ran.
    pub qe_theory: BaseTheoryId,
    /// True when `qe_theory` is the completion of the declared base rather
    /// than the base itself — the weakest-constraint guarantee then weakens
    /// to soundness.
    pub used_model_completion: bool,
    /// Abstraction mapping: constant name to bound-variable name, in the
    /// order of the universal binder.
    pub abstracted: Vec<(String, String)>,
}

impl SymElimResult {
    /// Instantiation term sets actually used, per level (top level first).
    pub fn instance_set(&self) -> Vec<(usize, &[Term])> {
        self.reduction
            .steps
            .iter()
            .map(|s| (s.level, s.inst_terms.as_slice()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymElimError {
    Locality(LocalityError),
    Qe(QeError),
    /// A normal-form conversion exceeded the disjunct cap.
    Overflow(usize),
    /// The base theory has neither quantifier elimination nor a registered
    /// completion that does.
    MissingQe(BaseTheoryId),
    /// The produced constraint mentions symbols outside the base signature
    /// and the parameters — an internal invariant violation.
    SymbolContract { symbols: Vec<String> },
}

impl fmt::Display for SymElimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymElimError::Locality(e) => write!(f, "{e}"),
            SymElimError::Qe(e) => write!(f, "{e}"),
            SymElimError::Overflow(n) => write!(f, "normal form exceeded {n} disjuncts"),
            SymElimError::MissingQe(t) => {
                write!(f, "theory {t:?} has no quantifier elimination or completion")
            }
            SymElimError::SymbolContract { symbols } => {
                write!(f, "constraint mentions eliminated symbols: {}", symbols.join(", "))
            }
        }
    }
}

impl std::error::Error for SymElimError {}

impl From<LocalityError> for SymElimError {
    fn from(e: LocalityError) -> Self {
        SymElimError::Locality(e)
    }
}

impl From<QeError> for SymElimError {
    fn from(e: QeError) -> Self {
        SymElimError::Qe(e)
    }
}

impl From<DnfOverflow> for SymElimError {
    fn from(e: DnfOverflow) -> Self {
        SymElimError::Overflow(e.0)
    }
}

/// Options for one elimination run.
#[derive(Debug, Clone, Default)]
pub struct ElimOptions {
    /// Parameter symbols; defaults to the specification's set.
    pub params: Option<BTreeSet<String>>,
    /// When set, only these source constants may appear as (or within)
    /// parameter arguments; definitions with other arguments are eliminated
    /// instead of kept. Used by interpolation, where arguments must be
    /// shared between the two sides.
    pub allowed_args: Option<BTreeSet<String>>,
    /// Extra instantiation terms per level.
    pub seeds: BTreeMap<usize, Vec<Term>>,
    /// Optional goal split for two-sided instantiation.
    pub split: Option<SplitGoal>,
}

/// The theory quantifier elimination runs in for each base, with a flag for
/// "this is the base's completion, not the base itself".
pub fn qe_theory_for(base: BaseTheoryId) -> Result<(BaseTheoryId, bool), SymElimError> {
    match base {
        BaseTheoryId::Dlo => Ok((BaseTheoryId::Dlo, false)),
        BaseTheoryId::TOrd => Ok((BaseTheoryId::Dlo, true)),
        BaseTheoryId::Lra => Ok((BaseTheoryId::Lra, false)),
        BaseTheoryId::Eq => Ok((BaseTheoryId::Eq, false)),
    }
}

// ---------------------------------------------------------------------------
// Step 2: constant partition
// ---------------------------------------------------------------------------

/// Definitions with arguments rewritten into the final purified language:
/// an argument that is itself a defined term is replaced by its constant,
/// so every definition reads `constant = f(leaf, ...)`.
fn flat_defs(pool: &TermPool, reduction: &Reduction) -> Vec<(Term, Term)> {
    let to_const: BTreeMap<Term, Term> =
        reduction.defs.iter().map(|(c, t)| (t.clone(), c.clone())).collect();
    reduction
        .defs
        .iter()
        .map(|(c, t)| {
            let flat = match t.node() {
                TermNode::App(f, args) => pool.app(
                    f.clone(),
                    args.iter().map(|a| locality::rewrite_through(pool, &to_const, a)).collect(),
                ),
                _ => t.clone(),
            };
            (c.clone(), flat)
        })
        .collect()
}

/// Classifies the constants of a reduced problem relative to the parameter
/// set. `allowed_args`, when given, restricts which source constants may
/// remain as parameter arguments (anything else sinks the definition into
/// `c_rest`).
pub fn partition_constants(
    pool: &TermPool,
    reduction: &Reduction,
    sig: &Signature,
    params: &BTreeSet<String>,
    allowed_args: Option<&BTreeSet<String>>,
) -> ConstantPartition {
    let param_funcs: BTreeSet<&str> = params
        .iter()
        .filter(|p| sig.lookup(p).map(|d| d.arity > 0) == Some(true))
        .map(String::as_str)
        .collect();
    // Parameter names that are not declared functions act as designated
    // source constants: they survive elimination and are admissible as
    // parameter arguments without being abstracted. Interpolation uses this
    // for the constants shared between the two sides.
    let param_consts: BTreeSet<&str> = params
        .iter()
        .filter(|p| sig.lookup(p).map_or(true, |d| d.arity == 0))
        .map(String::as_str)
        .collect();
    let defs = flat_defs(pool, reduction);
    let def_names: BTreeSet<&str> = defs.iter().filter_map(|(c, _)| const_name(c)).collect();
    let restricted = allowed_args.is_some();

    // A source constant is an admissible parameter argument when it is not a
    // non-parameter extension symbol and passes the restriction (if any).
    let source_ok = |n: &str| -> bool {
        if sig.is_extension(n) {
            param_consts.contains(n)
        } else {
            allowed_args.map_or(true, |s| s.contains(n))
        }
    };

    // Least fixpoint of "kept": a definition is kept when its function is a
    // parameter and every argument is admissible — fresh arguments must
    // themselves be kept in restricted mode, while in unrestricted mode a
    // fresh argument may instead be abstracted later.
    let mut keepable: BTreeSet<&str> = BTreeSet::new();
    loop {
        let mut changed = false;
        for (c, t) in &defs {
            let name = match const_name(c) {
                Some(n) if !keepable.contains(n) => n,
                _ => continue,
            };
            if t.root().is_none_or(|r| !param_funcs.contains(r)) {
                continue;
            }
            let ok = t.args().iter().all(|a| {
                arg_admissible(a, &def_names, &keepable, restricted, &source_ok)
            });
            if ok {
                keepable.insert(name);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Collect parameter-argument constants from the kept definitions.
    let mut c_p: BTreeSet<String> = BTreeSet::new();
    let mut nested_c_p: BTreeSet<String> = BTreeSet::new();
    for (c, t) in &defs {
        let name = const_name(c).unwrap_or_default();
        if !keepable.contains(name) {
            continue;
        }
        for a in t.args() {
            collect_args(a, &def_names, &param_consts, restricted, &mut c_p, &mut nested_c_p);
        }
    }

    let mut all: BTreeSet<String> = BTreeSet::new();
    for cl in &reduction.base_clauses {
        all.extend(cl.constants());
    }
    all.extend(defs.iter().filter_map(|(c, _)| const_name(c)).map(str::to_string));

    let mut c_f: BTreeSet<String> = BTreeSet::new();
    for n in &all {
        if param_consts.contains(n.as_str())
            || (keepable.contains(n.as_str()) && !c_p.contains(n))
        {
            c_f.insert(n.clone());
        }
    }
    let c_rest: BTreeSet<String> =
        all.iter().filter(|n| !c_f.contains(*n) && !c_p.contains(*n)).cloned().collect();
    let reconstructible: BTreeSet<String> = keepable.iter().map(|s| s.to_string()).collect();
    ConstantPartition { c_f, c_p, c_rest, nested_c_p, reconstructible }
}

fn const_name(t: &Term) -> Option<&str> {
    match t.node() {
        TermNode::Const(n) => Some(n),
        _ => None,
    }
}

fn arg_admissible(
    a: &Term,
    def_names: &BTreeSet<&str>,
    keepable: &BTreeSet<&str>,
    restricted: bool,
    source_ok: &impl Fn(&str) -> bool,
) -> bool {
    match a.node() {
        TermNode::Num(_) => true,
        TermNode::Const(n) => {
            if def_names.contains(n.as_str()) {
                keepable.contains(n.as_str()) || !restricted
            } else {
                source_ok(n)
            }
        }
        // A base-interpreted compound argument: admissible when its leaves are.
        TermNode::App(_, args) => {
            args.iter().all(|x| arg_admissible(x, def_names, keepable, restricted, source_ok))
        }
        TermNode::Var(_) => false,
    }
}

fn collect_args(
    a: &Term,
    def_names: &BTreeSet<&str>,
    param_consts: &BTreeSet<&str>,
    restricted: bool,
    c_p: &mut BTreeSet<String>,
    nested_c_p: &mut BTreeSet<String>,
) {
    match a.node() {
        TermNode::Const(n) => {
            if param_consts.contains(n.as_str()) {
                return;
            }
            if def_names.contains(n.as_str()) {
                // Fresh argument: in restricted mode it is kept (and was
                // required to be keepable); unrestricted it is classified
                // abstractable and flagged as nested.
                if !restricted {
                    c_p.insert(n.clone());
                    nested_c_p.insert(n.clone());
                }
            } else {
                c_p.insert(n.clone());
            }
        }
        TermNode::App(_, args) => {
            for x in args {
                collect_args(x, def_names, param_consts, restricted, c_p, nested_c_p);
            }
        }
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Steps 1-4
// ---------------------------------------------------------------------------

fn effective_params(spec: &TheorySpec, opts: &ElimOptions) -> BTreeSet<String> {
    opts.params.clone().unwrap_or_else(|| spec.params().clone())
}

/// Runs reduction, partition, quantifier elimination of the disposable
/// constants, and back-substitution of the kept definitions. The returned
/// result has `constraint` unset.
pub fn steps_1_to_4(
    spec: &TheorySpec,
    pool: &TermPool,
    goal: &[Clause],
    opts: &ElimOptions,
    cfg: &QeConfig,
) -> Result<SymElimResult, SymElimError> {
    let params = effective_params(spec, opts);
    let (qe_theory, used_model_completion) = qe_theory_for(spec.base())?;

    // Step 1: reduce to the base signature.
    let reduce_opts = ReduceOptions { seeds: opts.seeds.clone(), split: opts.split.clone() };
    let reduction = reduce_chain(spec, pool, goal, &reduce_opts)?;

    // Step 2: classify constants.
    let partition =
        partition_constants(pool, &reduction, spec.sig(), &params, opts.allowed_args.as_ref());

    // Step 3: existentially quantify the disposable constants and eliminate.
    let mut body = Formula::and(reduction.base_clauses.iter().map(Clause::to_formula).collect());
    let mut vars = Vec::new();
    let mut var_map: BTreeMap<String, Term> = BTreeMap::new();
    for (i, c) in partition.c_rest.iter().enumerate() {
        let v = format!("z{}", i + 1);
        var_map.insert(c.clone(), pool.var(v.clone()));
        vars.push(v);
    }
    body = body.replace_constants(pool, &var_map);
    let gamma1_raw = base::qe(qe_theory, pool, &Formula::exists(vars, body), cfg)?;
    let gamma1 = base::simplify(qe_theory, pool, &gamma1_raw, cfg)?;

    // Step 4: back-substitute kept definitions (including kept nested
    // parameter arguments), innermost first.
    let subst = back_substitution(pool, &reduction, &partition);
    let gamma2_raw = gamma1_raw.replace_constants(pool, &subst);
    let gamma2 = gamma1.replace_constants(pool, &subst);

    Ok(SymElimResult {
        reduction,
        partition,
        gamma1_raw,
        gamma1,
        gamma2_raw,
        gamma2,
        constraint: None,
        qe_theory,
        used_model_completion,
        abstracted: Vec::new(),
    })
}

/// Maps every reconstructible fresh constant to its fully rebuilt
/// parameter term. Abstractable fresh constants (nested arguments with
/// non-parameter definitions) are deliberately left alone so step 5 can
/// quantify them.
fn back_substitution(
    pool: &TermPool,
    reduction: &Reduction,
    partition: &ConstantPartition,
) -> BTreeMap<String, Term> {
    let defs = flat_defs(pool, reduction);
    let by_name: BTreeMap<&str, &Term> =
        defs.iter().filter_map(|(c, t)| const_name(c).map(|n| (n, t))).collect();
    let mut memo: BTreeMap<String, Term> = BTreeMap::new();
    for name in &partition.reconstructible {
        resolve_def(pool, name, &by_name, &partition.reconstructible, &mut memo);
    }
    memo
}

/// Rebuilds one definition, recursively resolving reconstructible constants
/// in argument position (definitions are acyclic, so this terminates).
fn resolve_def(
    pool: &TermPool,
    name: &str,
    by_name: &BTreeMap<&str, &Term>,
    reconstructible: &BTreeSet<String>,
    memo: &mut BTreeMap<String, Term>,
) -> Term {
    if let Some(t) = memo.get(name) {
        return t.clone();
    }
    let expanded = expand_term(pool, by_name[name], by_name, reconstructible, memo);
    memo.insert(name.to_string(), expanded.clone());
    expanded
}

fn expand_term(
    pool: &TermPool,
    t: &Term,
    by_name: &BTreeMap<&str, &Term>,
    reconstructible: &BTreeSet<String>,
    memo: &mut BTreeMap<String, Term>,
) -> Term {
    match t.node() {
        TermNode::Const(n) if reconstructible.contains(n) => {
            resolve_def(pool, n, by_name, reconstructible, memo)
        }
        TermNode::App(f, args) => pool.app(
            f.clone(),
            args.iter()
                .map(|a| expand_term(pool, a, by_name, reconstructible, memo))
                .collect(),
        ),
        _ => t.clone(),
    }
}

// ---------------------------------------------------------------------------
// Step 5: abstraction, negation, universal closure
// ---------------------------------------------------------------------------

/// Full pipeline: steps 1-4 followed by abstraction of the
/// parameter-argument constants, negation, and universal closure. The
/// constraint is rendered as a conjunction of guarded implications: base
/// literals of each disjunct guard the negated parameter literals, with
/// negative order literals turned positive.
pub fn symbol_eliminate(
    spec: &TheorySpec,
    pool: &TermPool,
    goal: &[Clause],
    opts: &ElimOptions,
    cfg: &QeConfig,
) -> Result<SymElimResult, SymElimError> {
    let mut result = steps_1_to_4(spec, pool, goal, opts, cfg)?;
    let params = effective_params(spec, opts);

    // Abstraction targets: abstractable constants still present after back-
    // substitution (source members of c_p plus non-reconstructible nested
    // ones), in name order.
    let remaining: BTreeSet<String> = result.gamma2.constants();
    let targets: Vec<String> =
        result.partition.c_p.iter().filter(|c| remaining.contains(*c)).cloned().collect();
    let mut var_map: BTreeMap<String, Term> = BTreeMap::new();
    let mut abstracted = Vec::new();
    for (i, c) in targets.iter().enumerate() {
        let v = format!("y{}", i + 1);
        var_map.insert(c.clone(), pool.var(v.clone()));
        abstracted.push((c.clone(), v.clone()));
    }
    let abstracted_body = result.gamma2.replace_constants(pool, &var_map);
    let vars: Vec<String> = abstracted.iter().map(|(_, v)| v.clone()).collect();

    let constraint = render_constraint(spec.base(), &abstracted_body, vars, cfg)?;
    audit_constraint(&constraint, spec.sig(), &params)?;

    result.constraint = Some(constraint);
    result.abstracted = abstracted;
    Ok(result)
}

/// Negates the abstracted parameter formula and closes universally,
/// rendering each disjunct as `guards -> negated parameter literals`.
fn render_constraint(
    base_theory: BaseTheoryId,
    body: &Formula,
    vars: Vec<String>,
    cfg: &QeConfig,
) -> Result<Formula, SymElimError> {
    let disjuncts = body.dnf(cfg.max_disjuncts)?;
    let mut conjuncts = Vec::new();
    for d in disjuncts {
        // Drop syntactically trivial conjuncts of the disjunct.
        let lits: Vec<Literal> =
            d.into_iter().filter(|l| base::literal_trivial(l) != Some(true)).collect();
        let (guards, concls): (Vec<Literal>, Vec<Literal>) =
            lits.into_iter().partition(|l| !mentions_function(l));
        let negate = |l: &Literal| Formula::Atom(positivize(base_theory, l.negated()));
        let body = if concls.is_empty() {
            Formula::or(guards.iter().map(negate).collect())
        } else {
            let concl = Formula::or(concls.iter().map(negate).collect());
            let guard = Formula::and(guards.into_iter().map(Formula::Atom).collect());
            Formula::implies(guard, concl)
        };
        conjuncts.push(body);
    }
    let body = Formula::and(conjuncts);
    // A universally closed constant is that constant.
    if matches!(body, Formula::True | Formula::False) {
        return Ok(body);
    }
    Ok(Formula::forall(vars, body))
}

fn mentions_function(l: &Literal) -> bool {
    l.subterms().iter().any(|t| matches!(t.node(), TermNode::App(_, _)))
}

/// Turns a negative order literal into the equivalent positive one over a
/// total order; equality literals are left as they are.
fn positivize(theory: BaseTheoryId, l: Literal) -> Literal {
    if theory == BaseTheoryId::Eq || l.positive {
        return l;
    }
    match l.rel {
        Rel::Le => Literal::pos(Rel::Lt, l.rhs, l.lhs),
        Rel::Lt => Literal::pos(Rel::Le, l.rhs, l.lhs),
        Rel::Eq => Literal::neg(Rel::Eq, l.lhs, l.rhs),
    }
}

/// Syntactic symbol-contract check: the constraint may mention only base
/// symbols and parameters.
pub fn audit_constraint(
    constraint: &Formula,
    sig: &Signature,
    params: &BTreeSet<String>,
) -> Result<(), SymElimError> {
    let mut bad: BTreeSet<String> = BTreeSet::new();
    for f in constraint.func_names() {
        if f == "+" || f == "*" {
            continue;
        }
        if !params.contains(&f) {
            bad.insert(f);
        }
    }
    for c in constraint.constants() {
        if c.starts_with('#') || (sig.is_extension(&c) && !params.contains(&c)) {
            bad.insert(c);
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(SymElimError::SymbolContract { symbols: bad.into_iter().collect() })
    }
}

// ---------------------------------------------------------------------------
// Constraint instantiation and the unsatisfiability guarantee
// ---------------------------------------------------------------------------

/// Ground instances of a universal constraint over the given value tuples
/// (aligned with the binder order), as clauses.
pub fn instantiate_constraint(
    pool: &TermPool,
    constraint: &Formula,
    tuples: &[Vec<Term>],
    cfg: &QeConfig,
) -> Result<Vec<Clause>, SymElimError> {
    let (vars, body) = match constraint {
        Formula::Forall(vars, body) => (vars.clone(), body.as_ref().clone()),
        other => (Vec::new(), other.clone()),
    };
    let mut out: Vec<Clause> = Vec::new();
    let mut seen: BTreeSet<Clause> = BTreeSet::new();
    let tuple_iter: Vec<Vec<Term>> =
        if vars.is_empty() { vec![Vec::new()] } else { tuples.to_vec() };
    for tuple in tuple_iter {
        if tuple.len() != vars.len() {
            continue;
        }
        let mut subst = crate::core::Substitution::new();
        for (v, t) in vars.iter().zip(&tuple) {
            subst.bind(v.clone(), t.clone());
        }
        let inst = body.map_terms(&mut |t| subst.apply(pool, t));
        for c in clausify(&inst, cfg.max_disjuncts)? {
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// The candidate values an abstracted variable ranges over when checking
/// the guarantee: each abstracted constant's source term plus the
/// parameter constants appearing in the goal.
pub fn guarantee_tuples(
    pool: &TermPool,
    spec: &TheorySpec,
    result: &SymElimResult,
) -> Vec<Vec<Term>> {
    let n = result.abstracted.len();
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut values: Vec<Term> = Vec::new();
    for (c, _) in &result.abstracted {
        let t = pool.cst(c.clone());
        values.push(result.reduction.unpurify_term(pool, &t));
    }
    for p in spec.params() {
        if spec.sig().lookup(p).map(|d| d.arity == 0) == Some(true) {
            let t = pool.cst(p.clone());
            if !values.contains(&t) {
                values.push(t);
            }
        }
    }
    values.sort();
    values.dedup();
    let mut tuples: Vec<Vec<Term>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for t in &tuples {
            for v in &values {
                let mut t2 = t.clone();
                t2.push(v.clone());
                next.push(t2);
            }
        }
        tuples = next;
        if tuples.len() > 4096 {
            // Fall back to the identity tuple alone.
            let identity: Vec<Term> = result
                .abstracted
                .iter()
                .map(|(c, _)| result.reduction.unpurify_term(pool, &pool.cst(c.clone())))
                .collect();
            return vec![identity];
        }
    }
    tuples
}

/// Checks that adding the constraint (instantiated over the reduced
/// problem's parameter-argument tuples) to the goal makes it unsatisfiable
/// over the extended theory.
pub fn check_unsat_guarantee(
    spec: &TheorySpec,
    pool: &TermPool,
    goal: &[Clause],
    result: &SymElimResult,
    cfg: &QeConfig,
) -> Result<Verdict, SymElimError> {
    let constraint = result
        .constraint
        .as_ref()
        .expect("check_unsat_guarantee needs a populated constraint");
    let tuples = guarantee_tuples(pool, spec, result);
    let instances = instantiate_constraint(pool, constraint, &tuples, cfg)?;
    let mut augmented = goal.to_vec();
    augmented.extend(instances);
    let decision = locality::decide_sat_extension(
        spec,
        pool,
        &augmented,
        &ReduceOptions::default(),
        cfg,
    )?;
    Ok(decision.verdict)
}

// ---------------------------------------------------------------------------
// Ground entailment with free function symbols
// ---------------------------------------------------------------------------

/// Entailment between ground formulas that may contain free function
/// symbols: all function terms are purified with one shared naming,
/// congruence hypotheses for same-function pairs are added, and the
/// branch-search ground engine decides the residue. Sound and complete for
/// ground formulas over a base theory plus uninterpreted functions.
pub fn entails_ground_uif(
    theory: BaseTheoryId,
    pool: &TermPool,
    hyp: &Formula,
    concl: &Formula,
    cfg: &QeConfig,
) -> Result<bool, QeError> {
    let mut map: BTreeMap<Term, Term> = BTreeMap::new();
    let mut defs: Vec<(Term, Term)> = Vec::new();
    let h = purify_formula(pool, hyp, &mut map, &mut defs);
    let c = purify_formula(pool, concl, &mut map, &mut defs);
    let mut hyps = vec![h];
    for (i, (ci, ti)) in defs.iter().enumerate() {
        for (cj, tj) in defs.iter().skip(i + 1) {
            if ti.root() != tj.root() || ti.args().len() != tj.args().len() {
                continue;
            }
            let premise = Formula::and(
                ti.args()
                    .iter()
                    .zip(tj.args())
                    .map(|(a, b)| Formula::Atom(Literal::pos(Rel::Eq, a.clone(), b.clone())))
                    .collect(),
            );
            let concl_eq = Formula::Atom(Literal::pos(Rel::Eq, ci.clone(), cj.clone()));
            hyps.push(Formula::implies(premise, concl_eq));
        }
    }
    base::decide_ground_entails(theory, pool, &Formula::and(hyps), &c, cfg)
}

/// Mutual entailment of ground formulas modulo uninterpreted functions.
pub fn equivalent_ground_uif(
    theory: BaseTheoryId,
    pool: &TermPool,
    a: &Formula,
    b: &Formula,
    cfg: &QeConfig,
) -> Result<bool, QeError> {
    Ok(entails_ground_uif(theory, pool, a, b, cfg)?
        && entails_ground_uif(theory, pool, b, a, cfg)?)
}

/// Simplifies a ground formula that may contain free function terms: the
/// function terms are purified under fresh names, the base-theory
/// simplifier runs on the residue, and the names are expanded back.
/// Equivalence-preserving (congruence consequences are not exploited, so
/// the result may keep literals a congruence-aware pass could drop).
pub fn simplify_ground_uif(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    let mut map: BTreeMap<Term, Term> = BTreeMap::new();
    let mut defs: Vec<(Term, Term)> = Vec::new();
    let pure = purify_formula(pool, f, &mut map, &mut defs);
    let simplified = base::simplify(theory, pool, &pure, cfg)?;
    // Defs are recorded innermost-first, so each name expands over the
    // already-expanded earlier names.
    let mut expansion: BTreeMap<String, Term> = BTreeMap::new();
    for (c, t) in &defs {
        let name = match c.node() {
            TermNode::Const(n) => n.clone(),
            _ => continue,
        };
        let expanded = expand_purified(pool, t, &expansion);
        expansion.insert(name, expanded);
    }
    Ok(simplified.replace_constants(pool, &expansion))
}

fn expand_purified(pool: &TermPool, t: &Term, expansion: &BTreeMap<String, Term>) -> Term {
    match t.node() {
        TermNode::Const(n) => match expansion.get(n) {
            Some(e) => e.clone(),
            None => t.clone(),
        },
        TermNode::App(f, args) => pool.app(
            f.clone(),
            args.iter().map(|a| expand_purified(pool, a, expansion)).collect(),
        ),
        _ => t.clone(),
    }
}

fn purify_formula(
    pool: &TermPool,
    f: &Formula,
    map: &mut BTreeMap<Term, Term>,
    defs: &mut Vec<(Term, Term)>,
) -> Formula {
    f.map_terms(&mut |t| purify_app(pool, t, map, defs))
}

fn purify_app(
    pool: &TermPool,
    t: &Term,
    map: &mut BTreeMap<Term, Term>,
    defs: &mut Vec<(Term, Term)>,
) -> Term {
    match t.node() {
        TermNode::App(f, args) => {
            let rebuilt = pool.app(
                f.clone(),
                args.iter().map(|a| purify_app(pool, a, map, defs)).collect(),
            );
            if f == "+" || f == "*" {
                return rebuilt;
            }
            if let Some(c) = map.get(&rebuilt) {
                return c.clone();
            }
            let c = pool.cst(format!("#u{}", map.len() + 1));
            map.insert(rebuilt.clone(), c.clone());
            defs.push((c.clone(), rebuilt));
            c
        }
        _ => t.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locality::Level;

    fn pool() -> TermPool {
        TermPool::new()
    }

    /// Two-level chain: free f, h and threshold constant c below a
    /// case-defined g; parameters f, h, c.
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

    fn case_split_goal(p: &TermPool) -> Vec<Clause> {
        vec![
            Clause::unit(Literal::pos(Rel::Le, p.cst("c1"), p.cst("c2"))),
            Clause::unit(Literal::pos(
                Rel::Lt,
                p.app("g", vec![p.cst("c2")]),
                p.app("g", vec![p.cst("c1")]),
            )),
        ]
    }

    /// One level with free g and parameter h over a total-order base.
    fn bound_spec() -> (TermPool, TheorySpec) {
        let p = pool();
        let spec = TheorySpec::new(
            BaseTheoryId::TOrd,
            vec![Level { functions: vec![("g".into(), 1), ("h".into(), 1)], axioms: vec![] }],
            ["h".to_string()],
        )
        .unwrap();
        (p, spec)
    }

    fn bound_goal(p: &TermPool) -> Vec<Clause> {
        vec![
            Clause::unit(Literal::pos(Rel::Lt, p.cst("a"), p.app("g", vec![p.cst("a")]))),
            Clause::unit(Literal::pos(
                Rel::Lt,
                p.app("g", vec![p.cst("a")]),
                p.app("h", vec![p.cst("a")]),
            )),
        ]
    }

    fn names(s: &[&str]) -> BTreeSet<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn partition_for_the_case_split_goal() {
        let (p, spec) = case_split_spec();
        let goal = case_split_goal(&p);
        let red = reduce_chain(&spec, &p, &goal, &ReduceOptions::default()).unwrap();
        let part = partition_constants(&p, &red, spec.sig(), spec.params(), None);
        // #1, #2 name g(c1), g(c2); #3..#6 name f and h applications.
        assert_eq!(part.c_f, names(&["#3", "#4", "#5", "#6", "c"]));
        assert_eq!(part.c_p, names(&["c1", "c2"]));
        assert_eq!(part.c_rest, names(&["#1", "#2"]));
        assert!(part.nested_c_p.is_empty());
    }

    #[test]
    fn partition_for_the_bound_goal() {
        let (p, spec) = bound_spec();
        let goal = bound_goal(&p);
        let red = reduce_chain(&spec, &p, &goal, &ReduceOptions::default()).unwrap();
        let part = partition_constants(&p, &red, spec.sig(), spec.params(), None);
        assert_eq!(part.c_f, names(&["#2"]));
        assert_eq!(part.c_p, names(&["a"]));
        assert_eq!(part.c_rest, names(&["#1"]));
    }

    #[test]
    fn partition_with_all_symbols_as_parameters_leaves_nothing_to_eliminate() {
        let (p, spec) = case_split_spec();
        let goal = case_split_goal(&p);
        let red = reduce_chain(&spec, &p, &goal, &ReduceOptions::default()).unwrap();
        let all = names(&["f", "g", "h", "c"]);
        let part = partition_constants(&p, &red, spec.sig(), &all, None);
        assert!(part.c_rest.is_empty());
        assert_eq!(part.c_p, names(&["c1", "c2"]));
    }

    #[test]
    fn bound_goal_gamma2_and_constraint() {
        let (p, spec) = bound_spec();
        let goal = bound_goal(&p);
        let cfg = QeConfig::default();
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();

        let h_a = p.app("h", vec![p.cst("a")]);
        assert_eq!(result.gamma2, Formula::Atom(Literal::pos(Rel::Lt, p.cst("a"), h_a)));
        assert!(result.used_model_completion);
        assert_eq!(result.qe_theory, BaseTheoryId::Dlo);

        let h_y = p.app("h", vec![p.var("y1")]);
        let expected = Formula::forall(
            vec!["y1".into()],
            Formula::Atom(Literal::pos(Rel::Le, h_y, p.var("y1"))),
        );
        assert_eq!(result.constraint, Some(expected));
        assert_eq!(result.abstracted, vec![("a".to_string(), "y1".to_string())]);
    }

    #[test]
    fn case_split_gamma2_matches_the_three_case_form() {
        let (p, spec) = case_split_spec();
        let goal = case_split_goal(&p);
        let cfg = QeConfig::default();
        let result = steps_1_to_4(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();

        let f = |c: &str| p.app("f", vec![p.cst(c)]);
        let h = |c: &str| p.app("h", vec![p.cst(c)]);
        let lt = |a: Term, b: Term| Formula::Atom(Literal::pos(Rel::Lt, a, b));
        let le = |a: Term, b: Term| Formula::Atom(Literal::pos(Rel::Le, a, b));
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
        assert!(equivalent_ground_uif(BaseTheoryId::Dlo, &p, &result.gamma2, &expected, &cfg)
            .unwrap());
    }

    #[test]
    fn case_split_constraint_is_the_monotonicity_condition() {
        let (p, spec) = case_split_spec();
        let goal = case_split_goal(&p);
        let cfg = QeConfig::default();
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        let constraint = result.constraint.clone().unwrap();
        assert_eq!(result.abstracted.len(), 2);

        // Expected: piecewise monotonicity across the threshold.
        let f = |t: Term| p.app("f", vec![t]);
        let h = |t: Term| p.app("h", vec![t]);
        let lt = |a: Term, b: Term| Formula::Atom(Literal::pos(Rel::Lt, a, b));
        let le = |a: Term, b: Term| Formula::Atom(Literal::pos(Rel::Le, a, b));
        let y1 = || p.var("y1");
        let y2 = || p.var("y2");
        let expected_body = Formula::and(vec![
            Formula::implies(
                Formula::and(vec![lt(y1(), y2()), le(y2(), p.cst("c"))]),
                le(f(y1()), f(y2())),
            ),
            Formula::implies(
                Formula::and(vec![le(y1(), p.cst("c")), lt(p.cst("c"), y2())]),
                le(f(y1()), h(y2())),
            ),
            Formula::implies(
                Formula::and(vec![lt(p.cst("c"), y1()), lt(y1(), y2())]),
                le(h(y1()), h(y2())),
            ),
        ]);

        // Compare by instantiating both universal bodies over sample pairs.
        let body = match &constraint {
            Formula::Forall(_, b) => b.as_ref().clone(),
            other => other.clone(),
        };
        for (u, v) in [("c1", "c2"), ("c2", "c1"), ("c1", "c1"), ("c1", "c"), ("c", "c2")] {
            let mut m = crate::core::Substitution::new();
            m.bind("y1".to_string(), p.cst(u));
            m.bind("y2".to_string(), p.cst(v));
            let subst = |f: &Formula| f.map_terms(&mut |t: &Term| m.apply(&p, t));
            let got = subst(&body);
            let want = subst(&expected_body);
            assert!(
                equivalent_ground_uif(BaseTheoryId::Dlo, &p, &got, &want, &cfg).unwrap(),
                "instantiation at ({u}, {v}) differs"
            );
        }
    }

    #[test]
    fn base_only_unsat_goal_yields_the_trivial_constraint() {
        let (p, spec) = case_split_spec();
        let goal = vec![Clause::unit(Literal::pos(Rel::Lt, p.cst("a"), p.cst("a")))];
        let cfg = QeConfig::default();
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        assert_eq!(result.gamma2, Formula::False);
        assert_eq!(result.constraint, Some(Formula::True));
    }

    #[test]
    fn unsat_guarantee_holds_for_both_fixtures() {
        let cfg = QeConfig::default();
        let (p, spec) = case_split_spec();
        let goal = case_split_goal(&p);
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        assert_eq!(
            check_unsat_guarantee(&spec, &p, &goal, &result, &cfg).unwrap(),
            Verdict::Unsat
        );

        let (p, spec) = bound_spec();
        let goal = bound_goal(&p);
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        assert_eq!(
            check_unsat_guarantee(&spec, &p, &goal, &result, &cfg).unwrap(),
            Verdict::Unsat
        );
    }

    #[test]
    fn enlarging_the_instance_set_weakens_the_constraint() {
        // With extra terms in T the eliminated formula gains disjuncts, so
        // the universal constraint can only get weaker: instances of the
        // small-T constraint entail instances of the large-T constraint.
        let (p, spec) = case_split_spec();
        let goal = case_split_goal(&p);
        let cfg = QeConfig::default();
        let small = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        let mut opts = ElimOptions::default();
        opts.seeds.insert(2, vec![p.app("g", vec![p.cst("c")])]);
        let large = symbol_eliminate(&spec, &p, &goal, &opts, &cfg).unwrap();

        let consts = [p.cst("c1"), p.cst("c2"), p.cst("c")];
        let mut tuples = Vec::new();
        for a in &consts {
            for b in &consts {
                tuples.push(vec![a.clone(), b.clone()]);
            }
        }
        let small_inst =
            instantiate_constraint(&p, small.constraint.as_ref().unwrap(), &tuples, &cfg).unwrap();
        let large_inst =
            instantiate_constraint(&p, large.constraint.as_ref().unwrap(), &tuples, &cfg).unwrap();
        let conj = |cs: &[Clause]| Formula::and(cs.iter().map(Clause::to_formula).collect());
        assert!(entails_ground_uif(
            BaseTheoryId::Dlo,
            &p,
            &conj(&small_inst),
            &conj(&large_inst),
            &cfg
        )
        .unwrap());
    }

    #[test]
    fn constraint_survives_the_symbol_audit() {
        let (p, spec) = case_split_spec();
        let goal = case_split_goal(&p);
        let cfg = QeConfig::default();
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        let c = result.constraint.unwrap();
        audit_constraint(&c, spec.sig(), spec.params()).unwrap();
        let funcs = c.func_names();
        assert!(funcs.contains("f") && funcs.contains("h"));
        assert!(!funcs.contains("g"));
        assert!(!c.constants().iter().any(|n| n.starts_with('#')));
    }

    #[test]
    fn nested_parameter_arguments_reconstruct() {
        // Goal speaks about f(h(a)) with both f and h parameters: the inner
        // definition is rebuilt and only the source constant is abstracted.
        let p = pool();
        let spec = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![
                Level { functions: vec![("h".into(), 1)], axioms: vec![] },
                Level { functions: vec![("f".into(), 1)], axioms: vec![] },
            ],
            ["f".to_string(), "h".to_string()],
        )
        .unwrap();
        let goal = vec![Clause::unit(Literal::pos(
            Rel::Lt,
            p.app("f", vec![p.app("h", vec![p.cst("a")])]),
            p.cst("a"),
        ))];
        let cfg = QeConfig::default();
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        assert!(result.partition.nested_c_p.len() == 1);
        let expected_gamma2 = Formula::Atom(Literal::pos(
            Rel::Lt,
            p.app("f", vec![p.app("h", vec![p.cst("a")])]),
            p.cst("a"),
        ));
        assert_eq!(result.gamma2, expected_gamma2);
        let expected = Formula::forall(
            vec!["y1".into()],
            Formula::Atom(Literal::pos(
                Rel::Le,
                p.var("y1"),
                p.app("f", vec![p.app("h", vec![p.var("y1")])]),
            )),
        );
        assert_eq!(result.constraint, Some(expected));
    }

    #[test]
    fn nested_non_parameter_arguments_are_abstracted() {
        // f is a parameter applied to a purified non-parameter term g(a):
        // the fresh argument is abstracted, never reconstructed, and the
        // constraint stays clean of g.
        let p = pool();
        let spec = TheorySpec::new(
            BaseTheoryId::Dlo,
            vec![
                Level { functions: vec![("g".into(), 1)], axioms: vec![] },
                Level { functions: vec![("f".into(), 1)], axioms: vec![] },
            ],
            ["f".to_string()],
        )
        .unwrap();
        let goal = vec![
            Clause::unit(Literal::pos(
                Rel::Lt,
                p.app("f", vec![p.app("g", vec![p.cst("a")])]),
                p.cst("b"),
            )),
            Clause::unit(Literal::pos(Rel::Lt, p.cst("b"), p.cst("a"))),
        ];
        let cfg = QeConfig::default();
        let result = symbol_eliminate(&spec, &p, &goal, &ElimOptions::default(), &cfg).unwrap();
        assert_eq!(result.partition.nested_c_p.len(), 1);
        let c = result.constraint.clone().unwrap();
        audit_constraint(&c, spec.sig(), spec.params()).unwrap();
        assert!(!c.func_names().contains("g"));
        // b and a are eliminated (existentially), the g-value abstracted:
        // nothing of f's shape survives except unconstrained applications,
        // so the constraint must be unsatisfiable to fulfil the guarantee
        // (no universal f-condition can block an order-dense goal).
        assert_eq!(c, Formula::False);
    }

    #[test]
    fn entailment_with_free_functions_uses_congruence() {
        let p = pool();
        let cfg = QeConfig::default();
        let eq = |a: Term, b: Term| Formula::Atom(Literal::pos(Rel::Eq, a, b));
        let fa = p.app("f", vec![p.cst("a")]);
        let fb = p.app("f", vec![p.cst("b")]);
        // a = b entails f(a) = f(b) ...
        assert!(entails_ground_uif(
            BaseTheoryId::Dlo,
            &p,
            &eq(p.cst("a"), p.cst("b")),
            &eq(fa.clone(), fb.clone()),
            &cfg
        )
        .unwrap());
        // ... but not conversely.
        assert!(!entails_ground_uif(
            BaseTheoryId::Dlo,
            &p,
            &eq(fa, fb),
            &eq(p.cst("a"), p.cst("b")),
            &cfg
        )
        .unwrap());
    }
}
