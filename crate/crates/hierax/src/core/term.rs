//! Terms and the per-problem hash-consing pool.
//!
//! Variables and free constants are distinct leaf kinds; rational literals
//! only appear in linear-arithmetic problems. Equality is structural, with a
//! pointer fast path: the pool interns nodes so that equal terms built
//! through the same pool share one allocation.

use num::BigRational;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermNode {
    /// Universal clause variable.
    Var(String),
    /// Free constant, declared arity-0 symbol, or purification constant.
    Const(String),
    /// Exact rational literal (linear arithmetic only).
    Num(BigRational),
    /// Function application, arity >= 1. Base arithmetic uses the reserved
    /// names `+` (n-ary sum) and `*` (scalar multiple, first arg numeric).
    App(String, Vec<Term>),
}

#[derive(Debug, Clone)]
pub struct Term(Arc<TermNode>);

impl Term {
    pub fn node(&self) -> &TermNode {
        &self.0
    }

    pub fn is_var(&self) -> bool {
        matches!(self.node(), TermNode::Var(_))
    }

    pub fn is_const(&self) -> bool {
        matches!(self.node(), TermNode::Const(_))
    }

    /// Root function name for applications, `None` for leaves.
    pub fn root(&self) -> Option<&str> {
        match self.node() {
            TermNode::App(f, _) => Some(f),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self.node() {
            TermNode::App(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_ground(&self) -> bool {
        match self.node() {
            TermNode::Var(_) => false,
            TermNode::Const(_) | TermNode::Num(_) => true,
            TermNode::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// All subterms, this term included.
    pub fn subterms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.collect_subterms(&mut out);
        out
    }

    pub(crate) fn collect_subterms(&self, out: &mut BTreeSet<Term>) {
        if out.insert(self.clone()) {
            for a in self.args() {
                a.collect_subterms(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            TermNode::Var(v) => {
                out.insert(v.clone());
            }
            TermNode::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            _ => {}
        }
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out);
        out
    }

    pub(crate) fn collect_constants(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            TermNode::Const(c) => {
                out.insert(c.clone());
            }
            TermNode::App(_, args) => {
                for a in args {
                    a.collect_constants(out);
                }
            }
            _ => {}
        }
    }

    /// Function names occurring anywhere in the term (reserved arithmetic
    /// names included).
    pub fn func_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_funcs(&mut out);
        out
    }

    pub(crate) fn collect_funcs(&self, out: &mut BTreeSet<String>) {
        if let TermNode::App(f, args) = self.node() {
            out.insert(f.clone());
            for a in args {
                a.collect_funcs(out);
            }
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.node() == other.node()
    }
}

impl Eq for Term {}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            std::cmp::Ordering::Equal
        } else {
            self.node().cmp(other.node())
        }
    }
}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.node().hash(state);
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            TermNode::Var(v) => write!(f, "{v}"),
            TermNode::Const(c) => write!(f, "{c}"),
            TermNode::Num(q) => write!(f, "{q}"),
            TermNode::App(name, args) => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Per-problem intern table. Internally synchronized; clones of the returned
/// [`Term`]s share allocations, making set membership and equality checks in
/// the instantiation loops cheap.
#[derive(Debug, Default)]
pub struct TermPool {
    table: Mutex<HashMap<TermNode, Term>>,
}

impl TermPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&self, node: TermNode) -> Term {
        let mut table = self.table.lock().unwrap();
        if let Some(t) = table.get(&node) {
            return t.clone();
        }
        let t = Term(Arc::new(node.clone()));
        table.insert(node, t.clone());
        t
    }

    pub fn var(&self, name: impl Into<String>) -> Term {
        self.intern(TermNode::Var(name.into()))
    }

    pub fn cst(&self, name: impl Into<String>) -> Term {
        self.intern(TermNode::Const(name.into()))
    }

    pub fn num(&self, q: BigRational) -> Term {
        self.intern(TermNode::Num(q))
    }

    pub fn app(&self, name: impl Into<String>, args: Vec<Term>) -> Term {
        let name = name.into();
        if args.is_empty() {
            return self.cst(name);
        }
        self.intern(TermNode::App(name, args))
    }
}

/// Monotone fresh-constant generator; names are `#1`, `#2`, ... and never
/// collide with user symbols because `#` is rejected in declarations.
#[derive(Debug, Default)]
pub struct FreshGen {
    counter: std::cell::Cell<u64>,
}

impl FreshGen {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_const(&self, pool: &TermPool) -> Term {
        let k = self.counter.get() + 1;
        self.counter.set(k);
        pool.cst(format!("#{k}"))
    }

    pub fn next_var(&self, pool: &TermPool, prefix: &str) -> Term {
        let k = self.counter.get() + 1;
        self.counter.set(k);
        pool.var(format!("{prefix}{k}"))
    }
}
