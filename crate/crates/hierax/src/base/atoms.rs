//! Engine-internal atom forms shared by the two quantifier-elimination
//! engines: order atoms over leaves (dense/total orders, pure equality) and
//! exact-rational linear atoms (linear arithmetic).
//!
//! Both forms are closed under negation, which keeps the engines free of
//! polarity bookkeeping: `¬(a ≤ b)` is `b < a` in a total order, `¬(e ≤ 0)`
//! is `-e < 0`, and disequality is a first-class relation.

use crate::core::{Literal, Rel, Term, TermNode, TermPool};
use num::{BigRational, Signed, Zero};
use std::collections::BTreeMap;

use super::{BaseTheoryId, QeError};

/// Four-valued relation used internally (disequality is explicit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ORel {
    Eq,
    Ne,
    Le,
    Lt,
}

/// Atom over leaf terms (variables/constants) in an order theory or pure
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrdLit {
    pub rel: ORel,
    pub lhs: Term,
    pub rhs: Term,
}

impl OrdLit {
    pub fn negated(&self) -> OrdLit {
        match self.rel {
            ORel::Eq => OrdLit { rel: ORel::Ne, lhs: self.lhs.clone(), rhs: self.rhs.clone() },
            ORel::Ne => OrdLit { rel: ORel::Eq, lhs: self.lhs.clone(), rhs: self.rhs.clone() },
            ORel::Le => OrdLit { rel: ORel::Lt, lhs: self.rhs.clone(), rhs: self.lhs.clone() },
            ORel::Lt => OrdLit { rel: ORel::Le, lhs: self.rhs.clone(), rhs: self.lhs.clone() },
        }
    }

    /// `Some(b)` when the atom is decided by reflexivity alone.
    pub fn eval_trivial(&self) -> Option<bool> {
        if self.lhs == self.rhs {
            Some(matches!(self.rel, ORel::Eq | ORel::Le))
        } else {
            None
        }
    }

    pub fn mentions(&self, v: &Term) -> bool {
        &self.lhs == v || &self.rhs == v
    }

    pub fn subst(&self, from: &Term, to: &Term) -> OrdLit {
        let swap = |t: &Term| if t == from { to.clone() } else { t.clone() };
        OrdLit { rel: self.rel, lhs: swap(&self.lhs), rhs: swap(&self.rhs) }
    }

    pub fn to_literal(&self) -> Literal {
        match self.rel {
            ORel::Eq => Literal::pos(Rel::Eq, self.lhs.clone(), self.rhs.clone()),
            ORel::Ne => Literal::neg(Rel::Eq, self.lhs.clone(), self.rhs.clone()),
            ORel::Le => Literal::pos(Rel::Le, self.lhs.clone(), self.rhs.clone()),
            ORel::Lt => Literal::pos(Rel::Lt, self.lhs.clone(), self.rhs.clone()),
        }
    }

    /// Canonicalizes symmetric relations so equal atoms compare equal.
    pub fn canonical(mut self) -> OrdLit {
        if matches!(self.rel, ORel::Eq | ORel::Ne) && self.rhs < self.lhs {
            std::mem::swap(&mut self.lhs, &mut self.rhs);
        }
        self
    }
}

/// Translates a literal to the leaf-atom form, validating that both sides are
/// leaves and (for pure equality) that the relation is equality.
pub fn ord_lit(theory: BaseTheoryId, lit: &Literal) -> Result<OrdLit, QeError> {
    for t in lit.terms() {
        match t.node() {
            TermNode::Var(_) | TermNode::Const(_) => {}
            TermNode::Num(_) => {
                return Err(QeError::NonBaseSymbol {
                    theory: theory.name(),
                    term: t.to_string(),
                })
            }
            TermNode::App(..) => {
                return Err(QeError::NonBaseSymbol {
                    theory: theory.name(),
                    term: t.to_string(),
                })
            }
        }
    }
    if theory == BaseTheoryId::Eq && lit.rel != Rel::Eq {
        return Err(QeError::UnsupportedPredicate {
            theory: theory.name(),
            lit: lit.to_string(),
        });
    }
    let rel = match (lit.positive, lit.rel) {
        (true, Rel::Eq) => ORel::Eq,
        (false, Rel::Eq) => ORel::Ne,
        (true, Rel::Le) => ORel::Le,
        (true, Rel::Lt) => ORel::Lt,
        // Negated order atoms flip in a total order.
        (false, Rel::Le) => {
            return Ok(OrdLit { rel: ORel::Lt, lhs: lit.rhs.clone(), rhs: lit.lhs.clone() })
        }
        (false, Rel::Lt) => {
            return Ok(OrdLit { rel: ORel::Le, lhs: lit.rhs.clone(), rhs: lit.lhs.clone() })
        }
    };
    Ok(OrdLit { rel, lhs: lit.lhs.clone(), rhs: lit.rhs.clone() })
}

/// Key for a linear-expression unknown. Variables and constants live in
/// distinct namespaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum LeafKey {
    Var(String),
    Const(String),
}

impl LeafKey {
    pub fn of(t: &Term) -> Option<LeafKey> {
        match t.node() {
            TermNode::Var(v) => Some(LeafKey::Var(v.clone())),
            TermNode::Const(c) => Some(LeafKey::Const(c.clone())),
            _ => None,
        }
    }

    pub fn to_term(&self, pool: &TermPool) -> Term {
        match self {
            LeafKey::Var(v) => pool.var(v.clone()),
            LeafKey::Const(c) => pool.cst(c.clone()),
        }
    }
}

/// Exact linear expression `Σ qᵢ·kᵢ + constant`. Zero coefficients are never
/// stored; on creation the atom wrapping an expression scales it so the
/// leading (first-key) coefficient has absolute value one, positive for
/// equations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct LinExpr {
    pub coeffs: BTreeMap<LeafKey, BigRational>,
    pub constant: BigRational,
}

impl LinExpr {
    pub fn constant(q: BigRational) -> LinExpr {
        LinExpr { coeffs: BTreeMap::new(), constant: q }
    }

    pub fn unknown(k: LeafKey) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(k, BigRational::from_integer(1.into()));
        LinExpr { coeffs, constant: BigRational::zero() }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (k, q) in &other.coeffs {
            let entry = out.coeffs.entry(k.clone()).or_insert_with(BigRational::zero);
            *entry += q;
            if entry.is_zero() {
                out.coeffs.remove(k);
            }
        }
        out.constant += &other.constant;
        out
    }

    pub fn scale(&self, q: &BigRational) -> LinExpr {
        if q.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(k, c)| (k.clone(), c * q)).collect(),
            constant: &self.constant * q,
        }
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(&-BigRational::from_integer(1.into())))
    }

    pub fn neg(&self) -> LinExpr {
        self.scale(&-BigRational::from_integer(1.into()))
    }

    pub fn coeff(&self, k: &LeafKey) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Builds an extension-free term from the expression. Positive pieces go
    /// to the left of the relation when atoms are rendered.
    pub fn to_term(&self, pool: &TermPool) -> Term {
        let mut parts: Vec<Term> = Vec::new();
        for (k, q) in &self.coeffs {
            let leaf = k.to_term(pool);
            if q == &BigRational::from_integer(1.into()) {
                parts.push(leaf);
            } else {
                parts.push(pool.app("*", vec![pool.num(q.clone()), leaf]));
            }
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push(pool.num(self.constant.clone()));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            pool.app("+", parts)
        }
    }

    /// Translates a base-arithmetic term. Products need one numeric side.
    pub fn from_term(t: &Term) -> Result<LinExpr, QeError> {
        match t.node() {
            TermNode::Var(_) | TermNode::Const(_) => {
                Ok(LinExpr::unknown(LeafKey::of(t).unwrap()))
            }
            TermNode::Num(q) => Ok(LinExpr::constant(q.clone())),
            TermNode::App(f, args) if f == "+" => {
                let mut out = LinExpr::default();
                for a in args {
                    out = out.add(&LinExpr::from_term(a)?);
                }
                Ok(out)
            }
            TermNode::App(f, args) if f == "*" => {
                if args.len() != 2 {
                    return Err(QeError::NonLinearAtom(t.to_string()));
                }
                match (args[0].node(), args[1].node()) {
                    (TermNode::Num(q), _) => Ok(LinExpr::from_term(&args[1])?.scale(q)),
                    (_, TermNode::Num(q)) => Ok(LinExpr::from_term(&args[0])?.scale(q)),
                    _ => Err(QeError::NonLinearAtom(t.to_string())),
                }
            }
            TermNode::App(..) => Err(QeError::NonBaseSymbol {
                theory: "LRA",
                term: t.to_string(),
            }),
        }
    }
}

/// Linear atom `expr REL 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinLit {
    pub rel: ORel,
    pub expr: LinExpr,
}

impl LinLit {
    pub fn new(rel: ORel, expr: LinExpr) -> LinLit {
        LinLit { rel, expr }.normalized()
    }

    /// Scales so the leading coefficient has absolute value one; equations
    /// and disequations additionally get a positive leading coefficient.
    fn normalized(mut self) -> LinLit {
        if let Some((_, lead)) = self.expr.coeffs.iter().next() {
            let mut factor = lead.abs().recip();
            if matches!(self.rel, ORel::Eq | ORel::Ne) && lead.is_negative() {
                factor = -factor;
            }
            if factor.is_negative() {
                // Only equations/disequations may flip sign.
                self.expr = self.expr.scale(&-factor).neg();
            } else {
                self.expr = self.expr.scale(&factor);
            }
        }
        self
    }

    pub fn negated(&self) -> LinLit {
        match self.rel {
            ORel::Eq => LinLit::new(ORel::Ne, self.expr.clone()),
            ORel::Ne => LinLit::new(ORel::Eq, self.expr.clone()),
            ORel::Le => LinLit::new(ORel::Lt, self.expr.neg()),
            ORel::Lt => LinLit::new(ORel::Le, self.expr.neg()),
        }
    }

    pub fn eval_trivial(&self) -> Option<bool> {
        if !self.expr.is_constant() {
            return None;
        }
        let c = &self.expr.constant;
        Some(match self.rel {
            ORel::Eq => c.is_zero(),
            ORel::Ne => !c.is_zero(),
            ORel::Le => !c.is_positive(),
            ORel::Lt => c.is_negative(),
        })
    }

    pub fn to_literal(&self, pool: &TermPool) -> Literal {
        // Split by coefficient sign for readable output: positives on the
        // left, negated negatives on the right.
        let mut lhs = LinExpr::default();
        let mut rhs = LinExpr::default();
        for (k, q) in &self.expr.coeffs {
            if q.is_positive() {
                lhs.coeffs.insert(k.clone(), q.clone());
            } else {
                rhs.coeffs.insert(k.clone(), -q.clone());
            }
        }
        if self.expr.constant.is_positive() {
            lhs.constant = self.expr.constant.clone();
        } else {
            rhs.constant = -self.expr.constant.clone();
        }
        let (l, r) = (lhs.to_term(pool), rhs.to_term(pool));
        match self.rel {
            ORel::Eq => Literal::pos(Rel::Eq, l, r),
            ORel::Ne => Literal::neg(Rel::Eq, l, r),
            ORel::Le => Literal::pos(Rel::Le, l, r),
            ORel::Lt => Literal::pos(Rel::Lt, l, r),
        }
    }
}

/// Translates a literal into a linear atom (`lhs - rhs REL 0`).
pub fn lin_lit(lit: &Literal) -> Result<LinLit, QeError> {
    let expr = LinExpr::from_term(&lit.lhs)?.sub(&LinExpr::from_term(&lit.rhs)?);
    let rel = match lit.rel {
        Rel::Eq => ORel::Eq,
        Rel::Le => ORel::Le,
        Rel::Lt => ORel::Lt,
    };
    let atom = LinLit::new(rel, expr);
    Ok(if lit.positive { atom } else { atom.negated() })
}
