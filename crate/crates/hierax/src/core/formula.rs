//! Literals, clauses, and formulas.
//!
//! The relation symbols are `=`, `<=`, `<`; `>=` and `>` are normalized away
//! at parse time by swapping arguments, and `distinct` / `not` produce
//! negative literals. Clauses are kept in a canonical sorted form so that
//! structural equality is order-insensitive.

use super::term::{Term, TermPool};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Le,
    Lt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Le => "<=",
            Rel::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub rel: Rel,
    pub lhs: Term,
    pub rhs: Term,
}

impl Literal {
    pub fn new(positive: bool, rel: Rel, lhs: Term, rhs: Term) -> Self {
        Literal { positive, rel, lhs, rhs }
    }

    pub fn pos(rel: Rel, lhs: Term, rhs: Term) -> Self {
        Self::new(true, rel, lhs, rhs)
    }

    pub fn neg(rel: Rel, lhs: Term, rhs: Term) -> Self {
        Self::new(false, rel, lhs, rhs)
    }

    pub fn negated(&self) -> Self {
        let mut l = self.clone();
        l.positive = !l.positive;
        l
    }

    pub fn is_ground(&self) -> bool {
        self.lhs.is_ground() && self.rhs.is_ground()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.lhs.collect_vars(&mut out);
        self.rhs.collect_vars(&mut out);
        out
    }

    pub fn terms(&self) -> [&Term; 2] {
        [&self.lhs, &self.rhs]
    }

    pub fn subterms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.lhs.collect_subterms(&mut out);
        self.rhs.collect_subterms(&mut out);
        out
    }

    pub fn apply(&self, pool: &TermPool, subst: &Substitution) -> Literal {
        Literal {
            positive: self.positive,
            rel: self.rel,
            lhs: subst.apply(pool, &self.lhs),
            rhs: subst.apply(pool, &self.rhs),
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Literal {
        Literal {
            positive: self.positive,
            rel: self.rel,
            lhs: f(&self.lhs),
            rhs: f(&self.rhs),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "({} {} {})", self.rel.symbol(), self.lhs, self.rhs)
        } else if self.rel == Rel::Eq {
            write!(f, "(distinct {} {})", self.lhs, self.rhs)
        } else {
            write!(f, "(not ({} {} {}))", self.rel.symbol(), self.lhs, self.rhs)
        }
    }
}

/// Disjunction of literals; free variables are implicitly universal.
/// Canonical form: sorted, duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    lits: Vec<Literal>,
}

impl Clause {
    pub fn new(mut lits: Vec<Literal>) -> Self {
        lits.sort();
        lits.dedup();
        Clause { lits }
    }

    pub fn unit(lit: Literal) -> Self {
        Clause { lits: vec![lit] }
    }

    pub fn lits(&self) -> &[Literal] {
        &self.lits
    }

    pub fn is_ground(&self) -> bool {
        self.lits.iter().all(Literal::is_ground)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for l in &self.lits {
            l.lhs.collect_vars(&mut out);
            l.rhs.collect_vars(&mut out);
        }
        out
    }

    pub fn subterms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for l in &self.lits {
            l.lhs.collect_subterms(&mut out);
            l.rhs.collect_subterms(&mut out);
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for l in &self.lits {
            l.lhs.collect_constants(&mut out);
            l.rhs.collect_constants(&mut out);
        }
        out
    }

    pub fn func_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for l in &self.lits {
            l.lhs.collect_funcs(&mut out);
            l.rhs.collect_funcs(&mut out);
        }
        out
    }

    pub fn apply(&self, pool: &TermPool, subst: &Substitution) -> Clause {
        Clause::new(self.lits.iter().map(|l| l.apply(pool, subst)).collect())
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Clause {
        Clause::new(self.lits.iter().map(|l| l.map_terms(f)).collect())
    }

    pub fn to_formula(&self) -> Formula {
        Formula::or(self.lits.iter().cloned().map(Formula::Atom).collect())
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lits.len() {
            0 => write!(f, "(or)"),
            1 => write!(f, "{}", self.lits[0]),
            _ => {
                write!(f, "(or")?;
                for l in &self.lits {
                    write!(f, " {l}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Variable assignment used when instantiating clauses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn bind(&mut self, var: impl Into<String>, t: Term) {
        self.map.insert(var.into(), t);
    }

    /// Extends the assignment; fails (returns false) on conflict.
    pub fn bind_consistent(&mut self, var: &str, t: &Term) -> bool {
        match self.map.get(var) {
            Some(existing) => existing == t,
            None => {
                self.map.insert(var.to_string(), t.clone());
                true
            }
        }
    }

    pub fn domain(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn apply(&self, pool: &TermPool, t: &Term) -> Term {
        use super::term::TermNode;
        match t.node() {
            TermNode::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            TermNode::Const(_) | TermNode::Num(_) => t.clone(),
            TermNode::App(f, args) => {
                let new_args = args.iter().map(|a| self.apply(pool, a)).collect();
                pool.app(f.clone(), new_args)
            }
        }
    }
}

impl FromIterator<(String, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Term)>>(iter: I) -> Self {
        Substitution { map: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Literal),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
}

impl Formula {
    /// Conjunction with flattening and unit simplification.
    pub fn and(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with flattening and unit simplification.
    pub fn or(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(l) => Formula::Atom(l.negated()),
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn implies(p: Formula, q: Formula) -> Formula {
        match (&p, &q) {
            (Formula::True, _) => q,
            (Formula::False, _) => Formula::True,
            (_, Formula::True) => Formula::True,
            _ => Formula::Implies(Box::new(p), Box::new(q)),
        }
    }

    pub fn exists(vars: Vec<String>, f: Formula) -> Formula {
        if vars.is_empty() {
            f
        } else {
            Formula::Exists(vars, Box::new(f))
        }
    }

    pub fn forall(vars: Vec<String>, f: Formula) -> Formula {
        if vars.is_empty() {
            f
        } else {
            Formula::Forall(vars, Box::new(f))
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_quantifier_free),
            Formula::Implies(p, q) => p.is_quantifier_free() && q.is_quantifier_free(),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::True | Formula::False => {}
                Formula::Atom(l) => {
                    for v in l.vars() {
                        if !bound.contains(&v) {
                            out.insert(v);
                        }
                    }
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(fs) | Formula::Or(fs) => {
                    for g in fs {
                        go(g, bound, out);
                    }
                }
                Formula::Implies(p, q) => {
                    go(p, bound, out);
                    go(q, bound, out);
                }
                Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                    let n = bound.len();
                    bound.extend(vs.iter().cloned());
                    go(g, bound, out);
                    bound.truncate(n);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_literals(&mut |l| {
            l.lhs.collect_constants(&mut out);
            l.rhs.collect_constants(&mut out);
        });
        out
    }

    pub fn func_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_literals(&mut |l| {
            l.lhs.collect_funcs(&mut out);
            l.rhs.collect_funcs(&mut out);
        });
        out
    }

    pub fn subterms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.visit_literals(&mut |l| {
            l.lhs.collect_subterms(&mut out);
            l.rhs.collect_subterms(&mut out);
        });
        out
    }

    pub fn visit_literals(&self, f: &mut impl FnMut(&Literal)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(l) => f(l),
            Formula::Not(g) => g.visit_literals(f),
            Formula::And(fs) | Formula::Or(fs) => {
                for g in fs {
                    g.visit_literals(f);
                }
            }
            Formula::Implies(p, q) => {
                p.visit_literals(f);
                q.visit_literals(f);
            }
            Formula::Exists(_, g) | Formula::Forall(_, g) => g.visit_literals(f),
        }
    }

    /// Rebuilds the formula with every literal's terms transformed.
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(l) => Formula::Atom(l.map_terms(f)),
            Formula::Not(g) => Formula::not(g.map_terms(f)),
            Formula::And(fs) => Formula::and(fs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::Or(fs) => Formula::or(fs.iter().map(|g| g.map_terms(f)).collect()),
            Formula::Implies(p, q) => Formula::implies(p.map_terms(f), q.map_terms(f)),
            Formula::Exists(vs, g) => Formula::exists(vs.clone(), g.map_terms(f)),
            Formula::Forall(vs, g) => Formula::forall(vs.clone(), g.map_terms(f)),
        }
    }

    /// Replaces free constants by terms (capture is impossible: constants and
    /// variables are distinct leaf kinds).
    pub fn replace_constants(&self, pool: &TermPool, map: &BTreeMap<String, Term>) -> Formula {
        self.map_terms(&mut |t| replace_consts_in_term(pool, t, map))
    }

    /// Negation normal form. Implications are expanded; negation is pushed to
    /// literals (which absorb it as polarity).
    pub fn nnf(&self) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => self.clone(),
            Formula::And(fs) => Formula::and(fs.iter().map(Formula::nnf).collect()),
            Formula::Or(fs) => Formula::or(fs.iter().map(Formula::nnf).collect()),
            Formula::Implies(p, q) => {
                Formula::or(vec![Formula::not(p.as_ref().clone()).nnf(), q.nnf()])
            }
            Formula::Exists(vs, g) => Formula::exists(vs.clone(), g.nnf()),
            Formula::Forall(vs, g) => Formula::forall(vs.clone(), g.nnf()),
            Formula::Not(g) => match g.as_ref() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Atom(l) => Formula::Atom(l.negated()),
                Formula::Not(h) => h.nnf(),
                Formula::And(fs) => {
                    Formula::or(fs.iter().map(|f| Formula::not(f.clone()).nnf()).collect())
                }
                Formula::Or(fs) => {
                    Formula::and(fs.iter().map(|f| Formula::not(f.clone()).nnf()).collect())
                }
                Formula::Implies(p, q) => Formula::and(vec![
                    p.nnf(),
                    Formula::not(q.as_ref().clone()).nnf(),
                ]),
                Formula::Exists(vs, h) => {
                    Formula::forall(vs.clone(), Formula::not(h.as_ref().clone()).nnf())
                }
                Formula::Forall(vs, h) => {
                    Formula::exists(vs.clone(), Formula::not(h.as_ref().clone()).nnf())
                }
            },
        }
    }

    /// Disjunctive normal form of a quantifier-free formula, as a list of
    /// literal conjunctions. `cap` bounds the number of disjuncts.
    pub fn dnf(&self, cap: usize) -> Result<Vec<Vec<Literal>>, DnfOverflow> {
        fn go(f: &Formula, cap: usize) -> Result<Vec<Vec<Literal>>, DnfOverflow> {
            match f {
                Formula::True => Ok(vec![vec![]]),
                Formula::False => Ok(vec![]),
                Formula::Atom(l) => Ok(vec![vec![l.clone()]]),
                Formula::Or(fs) => {
                    let mut out = Vec::new();
                    for g in fs {
                        out.extend(go(g, cap)?);
                        if out.len() > cap {
                            return Err(DnfOverflow(cap));
                        }
                    }
                    Ok(out)
                }
                Formula::And(fs) => {
                    let mut acc: Vec<Vec<Literal>> = vec![vec![]];
                    for g in fs {
                        let d = go(g, cap)?;
                        let mut next = Vec::with_capacity(acc.len() * d.len().max(1));
                        for left in &acc {
                            for right in &d {
                                let mut merged = left.clone();
                                merged.extend(right.iter().cloned());
                                next.push(merged);
                                if next.len() > cap {
                                    return Err(DnfOverflow(cap));
                                }
                            }
                        }
                        acc = next;
                    }
                    Ok(acc)
                }
                _ => unreachable!("dnf input must be an NNF quantifier-free formula"),
            }
        }
        go(&self.nnf(), cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DnfOverflow(pub usize);

impl fmt::Display for DnfOverflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "normal-form expansion exceeded the {} disjunct cap", self.0)
    }
}

impl std::error::Error for DnfOverflow {}

fn replace_consts_in_term(pool: &TermPool, t: &Term, map: &BTreeMap<String, Term>) -> Term {
    use super::term::TermNode;
    match t.node() {
        TermNode::Const(c) => map.get(c).cloned().unwrap_or_else(|| t.clone()),
        TermNode::Var(_) | TermNode::Num(_) => t.clone(),
        TermNode::App(f, args) => {
            let new_args = args
                .iter()
                .map(|a| replace_consts_in_term(pool, a, map))
                .collect();
            pool.app(f.clone(), new_args)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(l) => write!(f, "{l}"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(fs) => {
                write!(f, "(and")?;
                for g in fs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(or")?;
                for g in fs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Implies(p, q) => write!(f, "(=> {p} {q})"),
            Formula::Exists(vs, g) => {
                write!(f, "(exists ({}) {g})", vs.join(" "))
            }
            Formula::Forall(vs, g) => {
                write!(f, "(forall ({}) {g})", vs.join(" "))
            }
        }
    }
}

/// Converts a quantifier-free formula to a set of clauses (CNF by
/// distribution, cap-guarded).
pub fn clausify(f: &Formula, cap: usize) -> Result<Vec<Clause>, DnfOverflow> {
    // CNF of f = dual of DNF of the negation.
    let disjuncts = Formula::not(f.clone()).dnf(cap)?;
    let mut clauses: Vec<Clause> = disjuncts
        .into_iter()
        .map(|lits| Clause::new(lits.into_iter().map(|l| l.negated()).collect()))
        .collect();
    clauses.sort();
    clauses.dedup();
    // Drop clauses subsumed by smaller ones (literal-set inclusion).
    let snapshot = clauses.clone();
    clauses.retain(|c| {
        !snapshot.iter().any(|other| {
            other != c && other.lits().iter().all(|l| c.lits().contains(l))
        })
    });
    Ok(clauses)
}
