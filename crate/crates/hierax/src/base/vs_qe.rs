//! Test-point satisfiability engine.
//!
//! Decides satisfiability of a closed formula by virtual substitution:
//! quantifiers below the top level are removed symbolically by replacing
//! the bound variable with every relevant test point (minus infinity, the
//! solution of an atom, or a point infinitesimally above one; a fresh
//! value for pure equality), and the remaining top-level existential
//! problem is searched depth-first — one disjunct, one variable, one
//! candidate at a time — with equalities substituted eagerly and early
//! exit on the first satisfiable branch.
//!
//! This engine is deliberately independent of the eliminator in `dnf_qe`:
//! the two share the atom layer but no elimination logic, so they can
//! cross-check each other.

use super::atoms::{lin_lit, ord_lit, LeafKey, LinExpr, LinLit, ORel, OrdLit};
use super::{normalize_conjunct, validate_base_formula, BaseTheoryId, Engine, QeConfig, QeError, Verdict};
use crate::core::{Formula, Literal, Term, TermPool};
use num::{BigRational, One, Zero};

pub(crate) fn decide_sat(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Verdict, QeError> {
    validate_base_formula(theory, f)?;
    let (wrapped, _) = super::close_constants(pool, f);
    // strip the leading existential blocks: every variable left free in the
    // matrix is decided by the depth-first search below
    let mut matrix = wrapped;
    while let Formula::Exists(_, g) = matrix {
        matrix = (*g).clone();
    }
    let matrix = strip_inner_quantifiers(theory, pool, &matrix, cfg)?;
    let disjuncts = matrix
        .dnf(cfg.max_disjuncts)
        .map_err(|e| QeError::DisjunctCap(e.0))?;
    for lits in disjuncts {
        let sat = match theory.engine() {
            Engine::Order => {
                let b = lits
                    .iter()
                    .map(|l| ord_lit(theory, l))
                    .collect::<Result<Vec<_>, _>>()?;
                order_dfs(theory, b)
            }
            Engine::PureEq => {
                let b = lits
                    .iter()
                    .map(|l| ord_lit(theory, l))
                    .collect::<Result<Vec<_>, _>>()?;
                eq_sat(theory, b)
            }
            Engine::Linear => {
                let b = lits.iter().map(lin_lit).collect::<Result<Vec<_>, _>>()?;
                lin_dfs(b)
            }
        };
        if sat {
            return Ok(Verdict::Sat);
        }
    }
    Ok(Verdict::Unsat)
}

// ---------------------------------------------------------------------------
// symbolic removal of quantifiers below the top level
// ---------------------------------------------------------------------------

fn strip_inner_quantifiers(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => Ok(f.clone()),
        Formula::Not(g) => Ok(Formula::not(strip_inner_quantifiers(theory, pool, g, cfg)?)),
        Formula::And(fs) => Ok(Formula::and(
            fs.iter()
                .map(|g| strip_inner_quantifiers(theory, pool, g, cfg))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Or(fs) => Ok(Formula::or(
            fs.iter()
                .map(|g| strip_inner_quantifiers(theory, pool, g, cfg))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Implies(p, q) => Ok(Formula::implies(
            strip_inner_quantifiers(theory, pool, p, cfg)?,
            strip_inner_quantifiers(theory, pool, q, cfg)?,
        )),
        Formula::Exists(vs, g) => {
            let mut h = strip_inner_quantifiers(theory, pool, g, cfg)?;
            for z in vs {
                h = exists_one(theory, pool, z, h)?;
            }
            Ok(h)
        }
        Formula::Forall(vs, g) => {
            let mut h = Formula::not(strip_inner_quantifiers(theory, pool, g, cfg)?);
            for z in vs {
                h = exists_one(theory, pool, z, h)?;
            }
            Ok(Formula::not(h))
        }
    }
}

/// `exists z. g` for quantifier-free `g`, as the disjunction of `g` at
/// every test point for `z`.
fn exists_one(
    theory: BaseTheoryId,
    pool: &TermPool,
    z: &str,
    g: Formula,
) -> Result<Formula, QeError> {
    if !g.free_vars().contains(z) {
        return Ok(g);
    }
    let zt = pool.var(z.to_string());
    match theory.engine() {
        Engine::Order => {
            let mut cands = vec![OCand::MinusInf];
            collect_ocands(theory, &g, &zt, &mut cands)?;
            dedupe(&mut cands);
            let branches = cands
                .iter()
                .map(|c| subst_formula(&g, z, &|l| osubst_lit(theory, l, &zt, c)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Formula::or(branches))
        }
        Engine::PureEq => {
            let mut cands = vec![OCand::Fresh];
            collect_ocands(theory, &g, &zt, &mut cands)?;
            dedupe(&mut cands);
            let branches = cands
                .iter()
                .map(|c| subst_formula(&g, z, &|l| osubst_lit(theory, l, &zt, c)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Formula::or(branches))
        }
        Engine::Linear => {
            let k = LeafKey::Var(z.to_string());
            let mut cands = vec![LCand::MinusInf];
            collect_lcands(&g, &k, &mut cands)?;
            dedupe(&mut cands);
            let branches = cands
                .iter()
                .map(|c| subst_formula(&g, z, &|l| lsubst_lit(pool, l, &k, c)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Formula::or(branches))
        }
    }
}

/// Rewrites every atom through `m`, leaving subtrees that rebind `z`
/// untouched.
fn subst_formula(
    f: &Formula,
    z: &str,
    m: &dyn Fn(&Literal) -> Result<Formula, QeError>,
) -> Result<Formula, QeError> {
    match f {
        Formula::True | Formula::False => Ok(f.clone()),
        Formula::Atom(l) => m(l),
        Formula::Not(g) => Ok(Formula::not(subst_formula(g, z, m)?)),
        Formula::And(fs) => Ok(Formula::and(
            fs.iter().map(|g| subst_formula(g, z, m)).collect::<Result<_, _>>()?,
        )),
        Formula::Or(fs) => Ok(Formula::or(
            fs.iter().map(|g| subst_formula(g, z, m)).collect::<Result<_, _>>()?,
        )),
        Formula::Implies(p, q) => Ok(Formula::implies(
            subst_formula(p, z, m)?,
            subst_formula(q, z, m)?,
        )),
        Formula::Exists(vs, g) => {
            if vs.iter().any(|v| v == z) {
                Ok(f.clone())
            } else {
                Ok(Formula::exists(vs.clone(), subst_formula(g, z, m)?))
            }
        }
        Formula::Forall(vs, g) => {
            if vs.iter().any(|v| v == z) {
                Ok(f.clone())
            } else {
                Ok(Formula::forall(vs.clone(), subst_formula(g, z, m)?))
            }
        }
    }
}

fn collect_ocands(
    theory: BaseTheoryId,
    f: &Formula,
    z: &Term,
    out: &mut Vec<OCand>,
) -> Result<(), QeError> {
    let mut err = None;
    f.visit_literals(&mut |l| {
        if err.is_some() {
            return;
        }
        match ord_lit(theory, l) {
            Err(e) => err = Some(e),
            Ok(ol) => {
                if ol.mentions(z) && ol.lhs != ol.rhs {
                    let other = if ol.lhs == *z { ol.rhs.clone() } else { ol.lhs.clone() };
                    out.push(OCand::Exact(other.clone()));
                    if theory.engine() == Engine::Order {
                        out.push(OCand::Eps(other));
                    }
                }
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn collect_lcands(f: &Formula, k: &LeafKey, out: &mut Vec<LCand>) -> Result<(), QeError> {
    let mut err = None;
    f.visit_literals(&mut |l| {
        if err.is_some() {
            return;
        }
        match lin_lit(l) {
            Err(e) => err = Some(e),
            Ok(ll) => {
                let a = ll.expr.coeff(k);
                if !a.is_zero() {
                    let r = ll.expr.sub(&LinExpr::unknown(k.clone()).scale(&a));
                    let e = r.scale(&(-BigRational::one() / a));
                    out.push(LCand::Exact(e.clone()));
                    out.push(LCand::Eps(e));
                }
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn osubst_lit(
    theory: BaseTheoryId,
    l: &Literal,
    z: &Term,
    c: &OCand,
) -> Result<Formula, QeError> {
    let ol = ord_lit(theory, l)?;
    Ok(match osubst(&ol, z, c) {
        Sub::Top => Formula::True,
        Sub::Bot => Formula::False,
        Sub::Keep(nl) => match nl.eval_trivial() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(nl.to_literal()),
        },
    })
}

fn lsubst_lit(
    pool: &TermPool,
    l: &Literal,
    k: &LeafKey,
    c: &LCand,
) -> Result<Formula, QeError> {
    let ll = lin_lit(l)?;
    Ok(match lsubst(&ll, k, c) {
        Sub::Top => Formula::True,
        Sub::Bot => Formula::False,
        Sub::Keep(nl) => match nl.eval_trivial() {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(nl.to_literal(pool)),
        },
    })
}

// ---------------------------------------------------------------------------
// virtual substitution of a single candidate into a single atom
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum OCand {
    /// below every value (order engines only)
    MinusInf,
    /// distinct from every value (pure equality only)
    Fresh,
    Exact(Term),
    /// infinitesimally above the term (order engines only)
    Eps(Term),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum LCand {
    MinusInf,
    Exact(LinExpr),
    Eps(LinExpr),
}

enum Sub<T> {
    Top,
    Bot,
    Keep(T),
}

fn osubst(l: &OrdLit, z: &Term, c: &OCand) -> Sub<OrdLit> {
    if !l.mentions(z) {
        return Sub::Keep(l.clone());
    }
    if l.lhs == l.rhs {
        // z REL z under any assignment
        return match l.rel {
            ORel::Eq | ORel::Le => Sub::Top,
            ORel::Ne | ORel::Lt => Sub::Bot,
        };
    }
    let on_lhs = l.lhs == *z;
    match c {
        OCand::Exact(t) => Sub::Keep(l.subst(z, t)),
        OCand::MinusInf => match (l.rel, on_lhs) {
            (ORel::Eq, _) => Sub::Bot,
            (ORel::Ne, _) => Sub::Top,
            (ORel::Le, true) | (ORel::Lt, true) => Sub::Top,
            (ORel::Le, false) | (ORel::Lt, false) => Sub::Bot,
        },
        OCand::Fresh => match l.rel {
            ORel::Eq => Sub::Bot,
            ORel::Ne => Sub::Top,
            _ => unreachable!("order atoms never reach the fresh-value candidate"),
        },
        OCand::Eps(t) => match l.rel {
            ORel::Eq => Sub::Bot,
            ORel::Ne => Sub::Top,
            ORel::Le | ORel::Lt => {
                if on_lhs {
                    // t+eps REL r  iff  t < r
                    Sub::Keep(OrdLit { rel: ORel::Lt, lhs: t.clone(), rhs: l.rhs.clone() })
                } else {
                    // r REL t+eps  iff  r <= t
                    Sub::Keep(OrdLit { rel: ORel::Le, lhs: l.lhs.clone(), rhs: t.clone() })
                }
            }
        },
    }
}

fn lsubst(l: &LinLit, k: &LeafKey, c: &LCand) -> Sub<LinLit> {
    let a = l.expr.coeff(k);
    if a.is_zero() {
        return Sub::Keep(l.clone());
    }
    let r = l.expr.sub(&LinExpr::unknown(k.clone()).scale(&a));
    match c {
        LCand::Exact(e) => Sub::Keep(LinLit::new(l.rel, r.add(&e.scale(&a)))),
        LCand::MinusInf => match l.rel {
            ORel::Eq => Sub::Bot,
            ORel::Ne => Sub::Top,
            // a*(-inf) dominates: negative coefficient sends the value to +inf
            ORel::Le | ORel::Lt => {
                if a < BigRational::zero() {
                    Sub::Bot
                } else {
                    Sub::Top
                }
            }
        },
        LCand::Eps(e) => {
            let w = r.add(&e.scale(&a));
            match l.rel {
                ORel::Eq => Sub::Bot,
                ORel::Ne => Sub::Top,
                // w + a*eps REL 0: below w when a < 0, above when a > 0
                ORel::Le | ORel::Lt => {
                    if a < BigRational::zero() {
                        Sub::Keep(LinLit::new(ORel::Le, w))
                    } else {
                        Sub::Keep(LinLit::new(ORel::Lt, w))
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// depth-first search over the top existential block
// ---------------------------------------------------------------------------

fn order_dfs(theory: BaseTheoryId, branch: Vec<OrdLit>) -> bool {
    let branch = match ord_normalize(theory, branch) {
        Some(b) => b,
        None => return false,
    };
    // substitute an equality away first: it eliminates a variable for free
    if let Some(i) = branch.iter().position(|l| l.rel == ORel::Eq) {
        let from = branch[i].lhs.clone();
        let to = branch[i].rhs.clone();
        let nb = branch
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| l.subst(&from, &to))
            .collect();
        return order_dfs(theory, nb);
    }
    if branch.is_empty() {
        return true;
    }
    let z = cheapest_leaf(&branch);
    let mut cands = vec![OCand::MinusInf];
    for l in &branch {
        if l.mentions(&z) && l.lhs != l.rhs {
            let other = if l.lhs == z { l.rhs.clone() } else { l.lhs.clone() };
            cands.push(OCand::Exact(other.clone()));
            cands.push(OCand::Eps(other));
        }
    }
    dedupe(&mut cands);
    for c in &cands {
        if let Some(nb) = apply_ocand(&branch, &z, c) {
            if order_dfs(theory, nb) {
                return true;
            }
        }
    }
    false
}

fn apply_ocand(branch: &[OrdLit], z: &Term, c: &OCand) -> Option<Vec<OrdLit>> {
    let mut out = Vec::new();
    for l in branch {
        match osubst(l, z, c) {
            Sub::Top => {}
            Sub::Bot => return None,
            Sub::Keep(nl) => match nl.eval_trivial() {
                Some(true) => {}
                Some(false) => return None,
                None => out.push(nl),
            },
        }
    }
    Some(out)
}

/// Leaf occurring in the fewest atoms — eliminating it branches least.
fn cheapest_leaf(branch: &[OrdLit]) -> Term {
    let mut counts: std::collections::BTreeMap<Term, usize> = Default::default();
    for l in branch {
        *counts.entry(l.lhs.clone()).or_insert(0) += 1;
        *counts.entry(l.rhs.clone()).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .min_by_key(|(_, n)| *n)
        .map(|(t, _)| t)
        .expect("non-empty branch")
}

/// Trivial evaluation, bound merging and structural contradiction checks,
/// shared with `simplify` through the literal-level normalizer.
fn ord_normalize(theory: BaseTheoryId, branch: Vec<OrdLit>) -> Option<Vec<OrdLit>> {
    let lits = branch.iter().map(OrdLit::to_literal).collect();
    let merged = normalize_conjunct(lits)?;
    let mut out = Vec::new();
    for l in &merged {
        match ord_lit(theory, l) {
            Ok(ol) => out.push(ol),
            Err(_) => unreachable!("normalization preserves the atom language"),
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}

fn eq_sat(theory: BaseTheoryId, branch: Vec<OrdLit>) -> bool {
    let branch = match ord_normalize(theory, branch) {
        Some(b) => b,
        None => return false,
    };
    if let Some(i) = branch.iter().position(|l| l.rel == ORel::Eq) {
        let from = branch[i].lhs.clone();
        let to = branch[i].rhs.clone();
        let nb = branch
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| l.subst(&from, &to))
            .collect();
        return eq_sat(theory, nb);
    }
    // only disequations between distinct leaves: a pairwise-distinct
    // assignment into an infinite domain satisfies them all
    true
}

fn lin_dfs(branch: Vec<LinLit>) -> bool {
    let branch = match lin_normalize(branch) {
        Some(b) => b,
        None => return false,
    };
    if let Some((i, k)) = branch.iter().enumerate().find_map(|(i, l)| {
        if l.rel != ORel::Eq {
            return None;
        }
        l.expr.coeffs.keys().next().cloned().map(|k| (i, k))
    }) {
        let a = branch[i].expr.coeff(&k);
        let eq_expr = branch[i].expr.clone();
        let nb = branch
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| {
                let c = l.expr.coeff(&k);
                if c.is_zero() {
                    l.clone()
                } else {
                    LinLit::new(l.rel, l.expr.sub(&eq_expr.scale(&(c / a.clone()))))
                }
            })
            .collect();
        return lin_dfs(nb);
    }
    if branch.is_empty() {
        return true;
    }
    let k = match cheapest_key(&branch) {
        Some(k) => k,
        // constant atoms would have evaluated away; nothing left to pick
        None => return true,
    };
    let mut cands = vec![LCand::MinusInf];
    for l in &branch {
        let a = l.expr.coeff(&k);
        if !a.is_zero() {
            let r = l.expr.sub(&LinExpr::unknown(k.clone()).scale(&a));
            let e = r.scale(&(-BigRational::one() / a));
            cands.push(LCand::Exact(e.clone()));
            cands.push(LCand::Eps(e));
        }
    }
    dedupe(&mut cands);
    for c in &cands {
        if let Some(nb) = apply_lcand(&branch, &k, c) {
            if lin_dfs(nb) {
                return true;
            }
        }
    }
    false
}

fn apply_lcand(branch: &[LinLit], k: &LeafKey, c: &LCand) -> Option<Vec<LinLit>> {
    let mut out = Vec::new();
    for l in branch {
        match lsubst(l, k, c) {
            Sub::Top => {}
            Sub::Bot => return None,
            Sub::Keep(nl) => match nl.eval_trivial() {
                Some(true) => {}
                Some(false) => return None,
                None => out.push(nl),
            },
        }
    }
    Some(out)
}

fn cheapest_key(branch: &[LinLit]) -> Option<LeafKey> {
    let mut counts: std::collections::BTreeMap<LeafKey, usize> = Default::default();
    for l in branch {
        for k in l.expr.coeffs.keys() {
            *counts.entry(k.clone()).or_insert(0) += 1;
        }
    }
    counts.into_iter().min_by_key(|(_, n)| *n).map(|(k, _)| k)
}

fn lin_normalize(branch: Vec<LinLit>) -> Option<Vec<LinLit>> {
    let mut out: Vec<LinLit> = Vec::new();
    for l in branch {
        match l.eval_trivial() {
            Some(true) => continue,
            Some(false) => return None,
            None => {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
    }
    // cheap structural contradictions between an atom and its complement
    for l in &out {
        let conflict = match l.rel {
            ORel::Eq => out.contains(&LinLit::new(ORel::Ne, l.expr.clone()))
                || out.contains(&LinLit::new(ORel::Lt, l.expr.clone()))
                || out.contains(&LinLit::new(ORel::Lt, l.expr.neg())),
            ORel::Lt => out.contains(&LinLit::new(ORel::Le, l.expr.neg()))
                || out.contains(&LinLit::new(ORel::Lt, l.expr.neg())),
            _ => false,
        };
        if conflict {
            return None;
        }
    }
    out.sort();
    Some(out)
}

fn dedupe<T: Ord>(v: &mut Vec<T>) {
    v.sort();
    v.dedup();
}
