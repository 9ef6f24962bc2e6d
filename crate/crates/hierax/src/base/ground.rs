//! Ground decision by branch search.
//!
//! Reduction output arrives as a conjunction of dozens of small clauses. A
//! disjunctive normal form of such a conjunction is astronomically large
//! even though almost every disjunct is theory-inconsistent, so this engine
//! never builds one. It keeps a worklist of signed subformulas and a growing
//! literal conjunction: non-branching items (literals, conjunctions,
//! negations) are expanded eagerly, then disjunctions are propagated — a
//! disjunct entailed by the conjunction satisfies its disjunction, a
//! disjunct refuted by it is discarded, and a disjunction left with a
//! single disjunct commits to it. Only when propagation reaches a fixpoint
//! does the search split, on a disjunction with the fewest live disjuncts,
//! and a branch dies the moment its conjunction becomes unsatisfiable.
//!
//! The per-branch conjunction tests are exact:
//! * order theories and pure equality — equations are merged by union-find,
//!   order atoms become a digraph on the classes, and the conjunction is
//!   satisfiable iff no strict edge lies inside a strongly connected
//!   component and no disequation joins two classes forced equal. Every
//!   finite quasi-order linearizes and every finite linear order embeds in
//!   the rationals, so one test serves dense and plain total orders alike.
//! * linear arithmetic — Fourier–Motzkin elimination of every unknown from
//!   the single conjunction, complete over the rationals.
//!
//! Quantified subformulas (rare in decision queries) are eliminated up
//! front by the production eliminator; the search itself is quantifier-free.

use std::collections::{BTreeMap, BTreeSet};

use super::atoms::{lin_lit, ord_lit, LeafKey, LinLit, ORel, OrdLit};
use super::{dnf_qe, BaseTheoryId, Engine, QeConfig, QeError, Verdict};
use crate::core::{Formula, Literal, Term, TermPool};

pub(crate) fn decide_sat(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Verdict, QeError> {
    let prepared = strip_quantifiers(theory, pool, f, cfg)?;
    let mut search = Search {
        theory,
        budget: cfg.max_disjuncts,
        cfg,
        ord: Vec::new(),
        lin: Vec::new(),
    };
    let sat = search.solve(vec![(&prepared, true)])?;
    Ok(if sat { Verdict::Sat } else { Verdict::Unsat })
}

/// Replaces every quantified subformula by its quantifier-free elimination
/// so the search below only ever sees boolean structure over atoms.
fn strip_quantifiers(
    theory: BaseTheoryId,
    pool: &TermPool,
    f: &Formula,
    cfg: &QeConfig,
) -> Result<Formula, QeError> {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => Ok(f.clone()),
        Formula::Not(g) => Ok(Formula::not(strip_quantifiers(theory, pool, g, cfg)?)),
        Formula::And(fs) => Ok(Formula::and(
            fs.iter()
                .map(|g| strip_quantifiers(theory, pool, g, cfg))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Or(fs) => Ok(Formula::or(
            fs.iter()
                .map(|g| strip_quantifiers(theory, pool, g, cfg))
                .collect::<Result<_, _>>()?,
        )),
        Formula::Implies(p, q) => Ok(Formula::implies(
            strip_quantifiers(theory, pool, p, cfg)?,
            strip_quantifiers(theory, pool, q, cfg)?,
        )),
        Formula::Exists(..) | Formula::Forall(..) => dnf_qe::eliminate(theory, pool, f, cfg),
    }
}

struct Search<'c> {
    theory: BaseTheoryId,
    /// Node budget; exhausting it is an engine-limit error, not an answer.
    budget: usize,
    cfg: &'c QeConfig,
    ord: Vec<OrdLit>,
    lin: Vec<LinLit>,
}

impl Search<'_> {
    /// Satisfiability of `items` read as a conjunction, together with the
    /// literals already assumed. Restores the assumed-literal state on exit.
    fn solve(&mut self, items: Vec<(&Formula, bool)>) -> Result<bool, QeError> {
        let (ord_mark, lin_mark) = (self.ord.len(), self.lin.len());
        let out = self.run(items);
        self.ord.truncate(ord_mark);
        self.lin.truncate(lin_mark);
        out
    }

    fn run<'a>(&mut self, mut items: Vec<(&'a Formula, bool)>) -> Result<bool, QeError> {
        loop {
            if self.budget == 0 {
                return Err(QeError::DisjunctCap(self.cfg.max_disjuncts));
            }
            self.budget -= 1;

            // expand a non-branching item in place
            if let Some(i) = items
                .iter()
                .position(|(f, s)| disjunct_children(f, *s).is_none())
            {
                let (f, sign) = items.swap_remove(i);
                match (f, sign) {
                    (Formula::True, true) | (Formula::False, false) => {}
                    (Formula::True, false) | (Formula::False, true) => return Ok(false),
                    (Formula::Atom(l), _) => {
                        if !self.push_lit(&apply_sign(l, sign))? {
                            return Ok(false);
                        }
                    }
                    (Formula::Not(g), _) => items.push((g, !sign)),
                    (Formula::And(fs), true) | (Formula::Or(fs), false) => {
                        items.extend(fs.iter().map(|g| (g, sign)));
                    }
                    (Formula::Implies(p, q), false) => {
                        items.push((p, true));
                        items.push((q, false));
                    }
                    (Formula::Exists(..), _) | (Formula::Forall(..), _) => {
                        unreachable!("quantifiers are eliminated before the search")
                    }
                    (Formula::Or(..), true) | (Formula::And(..), false) | (Formula::Implies(..), true) => {
                        unreachable!("disjunctions are handled by propagation")
                    }
                }
                continue;
            }

            // every item is a disjunction: propagate against the conjunction
            let mut split: Option<(usize, Vec<(&'a Formula, bool)>)> = None;
            let mut progressed = false;
            for i in 0..items.len() {
                let (f, s) = items[i];
                let children = disjunct_children(f, s).expect("only disjunctions remain");
                let mut open = Vec::new();
                let mut satisfied = false;
                for (g, cs) in children {
                    if let Some(l) = signed_atom(g, cs) {
                        if self.refutes(&negate(&l))? {
                            satisfied = true; // disjunct already entailed
                            break;
                        }
                        if self.refutes(&l)? {
                            continue; // disjunct impossible under the conjunction
                        }
                    }
                    open.push((g, cs));
                }
                if satisfied {
                    items.swap_remove(i);
                    progressed = true;
                    break;
                }
                match open.len() {
                    0 => return Ok(false),
                    1 => {
                        items[i] = open[0];
                        progressed = true;
                        break;
                    }
                    _ => {
                        if split.as_ref().is_none_or(|(_, best)| open.len() < best.len()) {
                            split = Some((i, open));
                        }
                    }
                }
            }
            if progressed {
                continue;
            }

            // fixpoint: split on the disjunction with the fewest live disjuncts
            let Some((i, open)) = split else {
                return Ok(true); // no items left: the conjunction stands
            };
            items.swap_remove(i);
            for child in open {
                let mut branch = items.clone();
                branch.push(child);
                if self.solve(branch)? {
                    return Ok(true);
                }
            }
            return Ok(false);
        }
    }

    /// Adds a literal to the conjunction; `false` means it just became
    /// unsatisfiable.
    fn push_lit(&mut self, l: &Literal) -> Result<bool, QeError> {
        match self.theory.engine() {
            Engine::Order | Engine::PureEq => {
                let atom = ord_lit(self.theory, l)?;
                self.ord.push(atom);
                Ok(ord_feasible(&self.ord))
            }
            Engine::Linear => {
                let atom = lin_lit(l)?;
                self.lin.push(atom);
                lin_feasible(&self.lin, self.cfg)
            }
        }
    }

    /// Is the current conjunction inconsistent with `l`?
    fn refutes(&mut self, l: &Literal) -> Result<bool, QeError> {
        match self.theory.engine() {
            Engine::Order | Engine::PureEq => {
                let atom = ord_lit(self.theory, l)?;
                self.ord.push(atom);
                let out = !ord_feasible(&self.ord);
                self.ord.pop();
                Ok(out)
            }
            Engine::Linear => {
                let atom = lin_lit(l)?;
                self.lin.push(atom);
                let out = !lin_feasible(&self.lin, self.cfg)?;
                self.lin.pop();
                Ok(out)
            }
        }
    }
}

/// The disjuncts of an item that branches, or `None` for item shapes the
/// expansion step handles directly.
fn disjunct_children<'a>(f: &'a Formula, sign: bool) -> Option<Vec<(&'a Formula, bool)>> {
    match (f, sign) {
        (Formula::Or(fs), true) | (Formula::And(fs), false) => {
            Some(fs.iter().map(|g| (g, sign)).collect())
        }
        (Formula::Implies(p, q), true) => Some(vec![(p, false), (q, true)]),
        _ => None,
    }
}

fn apply_sign(l: &Literal, sign: bool) -> Literal {
    if sign {
        l.clone()
    } else {
        negate(l)
    }
}

fn negate(l: &Literal) -> Literal {
    Literal::new(!l.positive, l.rel, l.lhs.clone(), l.rhs.clone())
}

/// Unwraps negations around a single atom; other shapes are not literals.
fn signed_atom(f: &Formula, sign: bool) -> Option<Literal> {
    match f {
        Formula::Atom(l) => Some(apply_sign(l, sign)),
        Formula::Not(g) => signed_atom(g, !sign),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// exact conjunction tests
// ---------------------------------------------------------------------------

/// Satisfiability of a conjunction of order/equality atoms over leaves, with
/// variables and constants both read existentially.
pub(crate) fn ord_feasible(lits: &[OrdLit]) -> bool {
    // intern leaf terms
    let mut ids: BTreeMap<&Term, usize> = BTreeMap::new();
    for l in lits {
        for t in [&l.lhs, &l.rhs] {
            let next = ids.len();
            ids.entry(t).or_insert(next);
        }
    }
    let n = ids.len();

    // merge equations
    let mut uf: Vec<usize> = (0..n).collect();
    for l in lits {
        if l.rel == ORel::Eq {
            union(&mut uf, ids[&l.lhs], ids[&l.rhs]);
        }
    }

    // order atoms as edges between class representatives
    let mut edges: Vec<(usize, usize, bool)> = Vec::new();
    for l in lits {
        let strict = match l.rel {
            ORel::Le => false,
            ORel::Lt => true,
            ORel::Eq | ORel::Ne => continue,
        };
        edges.push((find(&mut uf, ids[&l.lhs]), find(&mut uf, ids[&l.rhs]), strict));
    }
    let comp = strongly_connected(n, &edges);

    // a strict edge inside a component closes a cycle through itself
    for (u, v, strict) in &edges {
        if *strict && comp[*u] == comp[*v] {
            return false;
        }
    }
    // a component's members are forced equal, so a disequation inside one is
    // contradictory; across components a strictly increasing assignment
    // along any topological order realizes everything in the rationals
    for l in lits {
        if l.rel == ORel::Ne {
            let (a, b) = (find(&mut uf, ids[&l.lhs]), find(&mut uf, ids[&l.rhs]));
            if comp[a] == comp[b] {
                return false;
            }
        }
    }
    true
}

/// Satisfiability of a conjunction of linear atoms over the rationals, by
/// eliminating every unknown with Fourier–Motzkin (splitting disequations).
pub(crate) fn lin_feasible(lits: &[LinLit], cfg: &QeConfig) -> Result<bool, QeError> {
    let first = match dnf_qe::lin_cleanup(lits.to_vec()) {
        Some(b) => b,
        None => return Ok(false),
    };
    let keys: BTreeSet<LeafKey> = first
        .iter()
        .flat_map(|l| l.expr.coeffs.keys().cloned())
        .collect();
    let mut branches = vec![first];
    for k in &keys {
        let mut next = Vec::new();
        for b in branches {
            next.extend(dnf_qe::lin_elim_var(k, b));
            if next.len() > cfg.max_disjuncts {
                return Err(QeError::DisjunctCap(cfg.max_disjuncts));
            }
        }
        if next.is_empty() {
            return Ok(false);
        }
        branches = next;
    }
    // every unknown is gone; a surviving branch is a true numeric residue
    Ok(true)
}

fn find(uf: &mut [usize], mut x: usize) -> usize {
    while uf[x] != x {
        uf[x] = uf[uf[x]]; // path halving
        x = uf[x];
    }
    x
}

fn union(uf: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(uf, a), find(uf, b));
    uf[ra] = rb;
}

/// Component index per node (Tarjan, iterative).
fn strongly_connected(n: usize, edges: &[(usize, usize, bool)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for (u, v, _) in edges {
        adj[*u].push(*v);
    }
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut comp = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut next_comp = 0usize;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            if frame.1 < adj[v].len() {
                let w = adj[v][frame.1];
                frame.1 += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(parent) = frames.last() {
                    let u = parent.0;
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("component stack underflow");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}
