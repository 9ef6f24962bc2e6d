//! Production quantifier eliminator.
//!
//! Quantifiers are removed innermost-first. An existential block is first
//! shrunk by the one-point rule — a conjunct `z ≈ t` with `z` bound and not
//! in `t` substitutes `z` away without any case split, which disposes of
//! the definition equalities that dominate reduction output. The remaining
//! matrix is expanded to disjunctive normal form with theory-inconsistent
//! partial disjuncts pruned during distribution, then each variable is
//! eliminated from each disjunct independently:
//!
//! * order theories — disequations on the variable are split into the two
//!   strict orientations, an equation on the variable substitutes it away,
//!   and otherwise every lower bound is combined with every upper bound
//!   (strict when either side is strict, which is exact in a dense order
//!   without endpoints);
//! * linear arithmetic — the same scheme on linear atoms: Gaussian
//!   substitution for equations, Fourier–Motzkin combination otherwise;
//! * pure equality (in its model completion, the infinite-set theory) — an
//!   equation substitutes the variable away, and remaining disequations on
//!   it are dropped because infinitely many values avoid finitely many.
//!
//! A disjunct with no lower or no upper bounds constrains nothing, so the
//! combination step simply produces no literals for it. Pruned disjuncts
//! are unsatisfiable even with every leaf read existentially, hence
//! equivalent to falsehood and silently droppable.

use super::atoms::{lin_lit, ord_lit, LeafKey, LinExpr, LinLit, ORel, OrdLit};
use super::{ground, BaseTheoryId, Engine, QeConfig, QeError};
use crate::core::{Formula, Literal, Rel, Substitution, Term, TermNode, TermPool};
use num::{BigRational, One};

pub(crate) fn eliminate(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => Ok(f.clone()),
        Formula::Not(g) => Ok(Formula::not(eliminate(theory, pool, g, cfg)?)),
        Formula::And(fs) => Ok(Formula::and(
            fs.iter()
                .map(|g| eliminate(theory, pool, g, cfg))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Or(fs) => Ok(Formula::or(
            fs.iter()
                .map(|g| eliminate(theory, pool, g, cfg))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Implies(p, q) => Ok(Formula::implies(
            eliminate(theory, pool, p, cfg)?,
            eliminate(theory, pool, q, cfg)?,
        )),
        Formula::Exists(vs, g) => {
            let body = eliminate(theory, pool, g, cfg)?;
            exists_block(theory, pool, vs, body, cfg)
        }
        Formula::Forall(vs, g) => {
            let body = eliminate(theory, pool, g, cfg)?;
            Ok(Formula::not(exists_block(
                theory,
                pool,
                vs,
                Formula::not(body),
                cfg,
            )?))
        }
    }
}

fn exists_block(
    theory: BaseTheoryId,
    pool: &TermPool,
    vars: &[String],
    matrix: Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    let (vars, matrix) = one_point(pool, vars.to_vec(), matrix);
    match theory.engine() {
        Engine::Order | Engine::PureEq => order_block(theory, pool, &vars, matrix, cfg),
        Engine::Linear => linear_block(pool, &vars, matrix, cfg),
    }
}

/// One-point rule: `exists z (z = t and phi)` is `phi[z := t]` whenever `z`
/// does not occur in `t`. Applied to top-level conjuncts until fixpoint.
fn one_point(pool: &TermPool, mut vars: Vec<String>, mut f: Formula) -> (Vec<String>, Formula) {
    'outer: while !vars.is_empty() {
        let children: Vec<Formula> = match &f {
            Formula::And(fs) => fs.clone(),
            other => vec![other.clone()],
        };
        for (i, g) in children.iter().enumerate() {
            let Formula::Atom(l) = g else { continue };
            if !(l.positive && l.rel == Rel::Eq) {
                continue;
            }
            for (side, image) in [(&l.lhs, &l.rhs), (&l.rhs, &l.lhs)] {
                let TermNode::Var(z) = side.node() else { continue };
                if !vars.iter().any(|v| v == z) || image.vars().contains(z) {
                    continue;
                }
                let mut subst = Substitution::new();
                subst.bind(z.clone(), image.clone());
                let rest: Vec<Formula> = children
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, h)| h.map_terms(&mut |t| subst.apply(pool, t)))
                    .collect();
                vars.retain(|v| v != z);
                f = Formula::and(rest);
                continue 'outer;
            }
        }
        break;
    }
    (vars, f)
}

// ---------------------------------------------------------------------------
// order / pure-equality engine (OrdLit branches)
// ---------------------------------------------------------------------------

fn order_block(
    theory: BaseTheoryId,
    pool: &TermPool,
    vars: &[String],
    matrix: Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    let mut branches = ord_branches(theory, &matrix, true, cfg)?;
    dedupe(&mut branches);

    for v in vars {
        let z = pool.var(v.clone());
        let mut next = Vec::new();
        for b in branches {
            match theory.engine() {
                Engine::PureEq => next.extend(eq_elim_var(&z, b)),
                _ => next.extend(order_elim_var(&z, b)),
            }
            if next.len() > cfg.max_disjuncts {
                return Err(QeError::DisjunctCap(cfg.max_disjuncts));
            }
        }
        branches = next;
        dedupe(&mut branches);
    }

    Ok(Formula::or(
        branches
            .into_iter()
            .map(|b| Formula::and(b.iter().map(|l| Formula::Atom(l.to_literal())).collect()))
            .collect(),
    ))
}

/// Disjunctive normal form over order atoms, computed with pruned
/// distribution: a partial disjunct is dropped the moment its conjunction
/// is theory-unsatisfiable.
fn ord_branches(
    theory: BaseTheoryId,
    f: &Formula,
    sign: bool,
    cfg: &QeConfig,
) -> Result<Vec<Vec<OrdLit>>, QeError> {
    match (f, sign) {
        (Formula::True, true) | (Formula::False, false) => Ok(vec![Vec::new()]),
        (Formula::True, false) | (Formula::False, true) => Ok(Vec::new()),
        (Formula::Atom(l), _) => {
            let signed = signed_literal(l, sign);
            let atom = ord_lit(theory, &signed)?;
            Ok(match atom.eval_trivial() {
                Some(true) => vec![Vec::new()],
                Some(false) => Vec::new(),
                None => vec![vec![atom.canonical()]],
            })
        }
        (Formula::Not(g), _) => ord_branches(theory, g, !sign, cfg),
        (Formula::And(fs), true) | (Formula::Or(fs), false) => {
            let sets = fs
                .iter()
                .map(|g| ord_branches(theory, g, sign, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            ord_product(sets, cfg)
        }
        (Formula::Or(fs), true) | (Formula::And(fs), false) => {
            let mut out = Vec::new();
            for g in fs {
                out.extend(ord_branches(theory, g, sign, cfg)?);
                if out.len() > cfg.max_disjuncts {
                    return Err(QeError::DisjunctCap(cfg.max_disjuncts));
                }
            }
            dedupe(&mut out);
            Ok(out)
        }
        (Formula::Implies(p, q), true) => {
            let mut out = ord_branches(theory, p, false, cfg)?;
            out.extend(ord_branches(theory, q, true, cfg)?);
            if out.len() > cfg.max_disjuncts {
                return Err(QeError::DisjunctCap(cfg.max_disjuncts));
            }
            dedupe(&mut out);
            Ok(out)
        }
        (Formula::Implies(p, q), false) => {
            let sets = vec![
                ord_branches(theory, p, true, cfg)?,
                ord_branches(theory, q, false, cfg)?,
            ];
            ord_product(sets, cfg)
        }
        (Formula::Exists(..) | Formula::Forall(..), _) => {
            unreachable!("inner quantifiers are eliminated before expansion")
        }
    }
}

/// Conjunction of branch sets, smallest first, pruning each merged branch
/// by the exact order-conjunction test.
fn ord_product(
    mut sets: Vec<Vec<Vec<OrdLit>>>,
    cfg: &QeConfig,
) -> Result<Vec<Vec<OrdLit>>, QeError> {
    sets.sort_by_key(Vec::len);
    let mut acc: Vec<Vec<OrdLit>> = vec![Vec::new()];
    for set in sets {
        let mut next = Vec::new();
        for a in &acc {
            for b in &set {
                let mut merged = a.clone();
                merged.extend(b.iter().cloned());
                if let Some(m) = ord_cleanup(merged) {
                    if ground::ord_feasible(&m) {
                        next.push(m);
                    }
                }
                if next.len() > cfg.max_disjuncts {
                    return Err(QeError::DisjunctCap(cfg.max_disjuncts));
                }
            }
        }
        dedupe(&mut next);
        if next.is_empty() {
            return Ok(Vec::new());
        }
        acc = next;
    }
    Ok(acc)
}

fn signed_literal(l: &Literal, sign: bool) -> Literal {
    if sign {
        l.clone()
    } else {
        Literal::new(!l.positive, l.rel, l.lhs.clone(), l.rhs.clone())
    }
}

fn order_elim_var(z: &Term, branch: Vec<OrdLit>) -> Vec<Vec<OrdLit>> {
    // split disequations mentioning z into the two strict orientations
    let mut worklist = vec![branch];
    let mut split = Vec::new();
    while let Some(b) = worklist.pop() {
        match b
            .iter()
            .position(|l| l.rel == ORel::Ne && l.mentions(z))
        {
            Some(i) => {
                let mut left = b.clone();
                left[i] = OrdLit { rel: ORel::Lt, lhs: b[i].lhs.clone(), rhs: b[i].rhs.clone() };
                let mut right = b;
                let lit = right[i].clone();
                right[i] = OrdLit { rel: ORel::Lt, lhs: lit.rhs, rhs: lit.lhs };
                worklist.push(left);
                worklist.push(right);
            }
            None => split.push(b),
        }
    }

    let mut out = Vec::new();
    for b in split {
        if let Some(i) = b.iter().position(|l| l.rel == ORel::Eq && l.mentions(z)) {
            let image = if b[i].lhs == *z { b[i].rhs.clone() } else { b[i].lhs.clone() };
            let nb: Vec<OrdLit> = b
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, l)| l.subst(z, &image))
                .collect();
            if let Some(nb) = ord_cleanup(nb) {
                out.push(nb);
            }
            continue;
        }
        let mut rest = Vec::new();
        let mut lowers = Vec::new(); // (term, strict)
        let mut uppers = Vec::new();
        for l in &b {
            if !l.mentions(z) {
                rest.push(l.clone());
            } else if l.lhs == *z {
                uppers.push((l.rhs.clone(), l.rel == ORel::Lt));
            } else {
                lowers.push((l.lhs.clone(), l.rel == ORel::Lt));
            }
        }
        for (lo, slo) in &lowers {
            for (hi, shi) in &uppers {
                let rel = if *slo || *shi { ORel::Lt } else { ORel::Le };
                rest.push(OrdLit { rel, lhs: lo.clone(), rhs: hi.clone() });
            }
        }
        if let Some(nb) = ord_cleanup(rest) {
            out.push(nb);
        }
    }
    out
}

fn eq_elim_var(z: &Term, branch: Vec<OrdLit>) -> Vec<Vec<OrdLit>> {
    let b = match ord_cleanup(branch) {
        Some(b) => b,
        None => return vec![],
    };
    if let Some(i) = b.iter().position(|l| l.rel == ORel::Eq && l.mentions(z)) {
        let image = if b[i].lhs == *z { b[i].rhs.clone() } else { b[i].lhs.clone() };
        let nb: Vec<OrdLit> = b
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| l.subst(z, &image))
            .collect();
        return match ord_cleanup(nb) {
            Some(nb) => vec![nb],
            None => vec![],
        };
    }
    // only disequations on z remain; infinitely many values satisfy them
    vec![b.into_iter().filter(|l| !l.mentions(z)).collect()]
}

fn ord_cleanup(branch: Vec<OrdLit>) -> Option<Vec<OrdLit>> {
    let mut out = Vec::new();
    for l in branch {
        match l.eval_trivial() {
            Some(true) => {}
            Some(false) => return None,
            None => {
                let c = l.canonical();
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out.sort();
    Some(out)
}

// ---------------------------------------------------------------------------
// linear-arithmetic engine (LinLit branches)
// ---------------------------------------------------------------------------

fn linear_block(
    pool: &TermPool,
    vars: &[String],
    matrix: Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    let mut branches = lin_branches(&matrix, true, cfg)?;
    dedupe(&mut branches);

    for v in vars {
        let k = LeafKey::Var(v.clone());
        let mut next = Vec::new();
        for b in branches {
            next.extend(lin_elim_var(&k, b));
            if next.len() > cfg.max_disjuncts {
                return Err(QeError::DisjunctCap(cfg.max_disjuncts));
            }
        }
        branches = next;
        dedupe(&mut branches);
    }

    Ok(Formula::or(
        branches
            .into_iter()
            .map(|b| {
                Formula::and(b.iter().map(|l| Formula::Atom(l.to_literal(pool))).collect())
            })
            .collect(),
    ))
}

/// Disjunctive normal form over linear atoms with pruned distribution; the
/// linear-arithmetic twin of [`ord_branches`].
fn lin_branches(f: &Formula, sign: bool, cfg: &QeConfig) -> Result<Vec<Vec<LinLit>>, QeError> {
    match (f, sign) {
        (Formula::True, true) | (Formula::False, false) => Ok(vec![Vec::new()]),
        (Formula::True, false) | (Formula::False, true) => Ok(Vec::new()),
        (Formula::Atom(l), _) => {
            let atom = lin_lit(&signed_literal(l, sign))?;
            Ok(match atom.eval_trivial() {
                Some(true) => vec![Vec::new()],
                Some(false) => Vec::new(),
                None => vec![vec![atom]],
            })
        }
        (Formula::Not(g), _) => lin_branches(g, !sign, cfg),
        (Formula::And(fs), true) | (Formula::Or(fs), false) => {
            let sets = fs
                .iter()
                .map(|g| lin_branches(g, sign, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            lin_product(sets, cfg)
        }
        (Formula::Or(fs), true) | (Formula::And(fs), false) => {
            let mut out = Vec::new();
            for g in fs {
                out.extend(lin_branches(g, sign, cfg)?);
                if out.len() > cfg.max_disjuncts {
                    return Err(QeError::DisjunctCap(cfg.max_disjuncts));
                }
            }
            dedupe(&mut out);
            Ok(out)
        }
        (Formula::Implies(p, q), true) => {
            let mut out = lin_branches(p, false, cfg)?;
            out.extend(lin_branches(q, true, cfg)?);
            if out.len() > cfg.max_disjuncts {
                return Err(QeError::DisjunctCap(cfg.max_disjuncts));
            }
            dedupe(&mut out);
            Ok(out)
        }
        (Formula::Implies(p, q), false) => {
            let sets = vec![lin_branches(p, true, cfg)?, lin_branches(q, false, cfg)?];
            lin_product(sets, cfg)
        }
        (Formula::Exists(..) | Formula::Forall(..), _) => {
            unreachable!("inner quantifiers are eliminated before expansion")
        }
    }
}

fn lin_product(
    mut sets: Vec<Vec<Vec<LinLit>>>,
    cfg: &QeConfig,
) -> Result<Vec<Vec<LinLit>>, QeError> {
    sets.sort_by_key(Vec::len);
    let mut acc: Vec<Vec<LinLit>> = vec![Vec::new()];
    for set in sets {
        let mut next = Vec::new();
        for a in &acc {
            for b in &set {
                let mut merged = a.clone();
                merged.extend(b.iter().cloned());
                if let Some(m) = lin_cleanup(merged) {
                    if ground::lin_feasible(&m, cfg)? {
                        next.push(m);
                    }
                }
                if next.len() > cfg.max_disjuncts {
                    return Err(QeError::DisjunctCap(cfg.max_disjuncts));
                }
            }
        }
        dedupe(&mut next);
        if next.is_empty() {
            return Ok(Vec::new());
        }
        acc = next;
    }
    Ok(acc)
}

pub(crate) fn lin_elim_var(k: &LeafKey, branch: Vec<LinLit>) -> Vec<Vec<LinLit>> {
    let is_zero = |q: &BigRational| q == &BigRational::from_integer(0.into());

    // split disequations with a k-coefficient: e != 0 is e < 0 or -e < 0
    let mut worklist = vec![branch];
    let mut split = Vec::new();
    while let Some(b) = worklist.pop() {
        match b
            .iter()
            .position(|l| l.rel == ORel::Ne && !is_zero(&l.expr.coeff(k)))
        {
            Some(i) => {
                let mut left = b.clone();
                left[i] = LinLit::new(ORel::Lt, b[i].expr.clone());
                let mut right = b;
                let e = right[i].expr.clone();
                right[i] = LinLit::new(ORel::Lt, e.neg());
                worklist.push(left);
                worklist.push(right);
            }
            None => split.push(b),
        }
    }

    let mut out = Vec::new();
    for b in split {
        if let Some(i) = b
            .iter()
            .position(|l| l.rel == ORel::Eq && !is_zero(&l.expr.coeff(k)))
        {
            // Gaussian substitution: from a*k + r = 0, rewrite every other
            // atom's expression e to e - (coeff_e(k)/a)*(a*k + r)
            let a = b[i].expr.coeff(k);
            let eq_expr = b[i].expr.clone();
            let nb: Vec<LinLit> = b
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, l)| {
                    let c = l.expr.coeff(k);
                    if is_zero(&c) {
                        l.clone()
                    } else {
                        LinLit::new(l.rel, l.expr.sub(&eq_expr.scale(&(c / a.clone()))))
                    }
                })
                .collect();
            if let Some(nb) = lin_cleanup(nb) {
                out.push(nb);
            }
            continue;
        }
        // Fourier–Motzkin: a > 0 gives k <= -r/a (upper), a < 0 a lower bound
        let mut rest = Vec::new();
        let mut lowers = Vec::new(); // (bound expr, strict): bound <= / < k
        let mut uppers = Vec::new();
        for l in &b {
            let a = l.expr.coeff(k);
            if is_zero(&a) {
                rest.push(l.clone());
                continue;
            }
            let r = l.expr.sub(&LinExpr::unknown(k.clone()).scale(&a));
            let bound = r.scale(&(-BigRational::one() / a.clone()));
            let strict = l.rel == ORel::Lt;
            if a > BigRational::from_integer(0.into()) {
                uppers.push((bound, strict));
            } else {
                lowers.push((bound, strict));
            }
        }
        for (lo, slo) in &lowers {
            for (hi, shi) in &uppers {
                let rel = if *slo || *shi { ORel::Lt } else { ORel::Le };
                rest.push(LinLit::new(rel, lo.sub(hi)));
            }
        }
        if let Some(nb) = lin_cleanup(rest) {
            out.push(nb);
        }
    }
    out
}

pub(crate) fn lin_cleanup(branch: Vec<LinLit>) -> Option<Vec<LinLit>> {
    let mut out = Vec::new();
    for l in branch {
        match l.eval_trivial() {
            Some(true) => {}
            Some(false) => return None,
            None => {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
    }
    out.sort();
    Some(out)
}

fn dedupe<T: Ord>(branches: &mut Vec<T>) {
    branches.sort();
    branches.dedup();
}
