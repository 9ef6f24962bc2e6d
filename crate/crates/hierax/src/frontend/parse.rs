//! Problem-file grammar on top of the s-expression reader.
//!
//! A problem file is a sequence of top-level forms:
//!
//! ```text
//! (base <DLO|TOrd|LRA|EQ>)
//! (level <n> (functions (<name> <arity>) ...) (axioms <formula> ...))
//! (params <name> ...)
//! (closure <subterm-only | (shared-constants <fn> ... [(constants <c> ...)])>)
//! (task <sat|symelim|interpolate>)
//! (goal <formula> ...)            ; sat and symelim
//! (goalA <formula> ...)           ; interpolate
//! (goalB <formula> ...)
//! (seed-terms <term> ...)
//! ```
//!
//! Formulas are `(and ...)`, `(or ...)`, `(=> f f)`, `(not f)`,
//! `(forall (v ...) f)` (axioms only), and the atoms `(<= t t)`, `(< t t)`,
//! `(= t t)`, `(distinct t t)`; `(>= t t)` and `(> t t)` normalize to their
//! mirrored forms. Terms are identifiers, applications `(f t ...)`, and —
//! under base `LRA` only — rational literals `p/q` and the arithmetic forms
//! `(+ t t ...)` and `(* q t)`. Identifiers starting with `#` are reserved
//! for generated names and rejected in user input. Axioms are closed
//! formulas over declared symbols; goals are ground and quantifier-free,
//! and may introduce free constants.

use crate::base::BaseTheoryId;
use crate::core::{clausify, Clause, Formula, Literal, Rel, Signature, Term, TermPool};
use crate::interpolation::AmalgClosure;
use crate::locality::{Level, TheorySpec};
use super::sexp::{read_all, Sexp, Span};
use num::BigRational;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Cap for clausification of axiom and goal formulas.
const CLAUSE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagKind {
    Syntax,
    UnknownSymbol,
    ArityMismatch,
    LevelViolation,
}

impl DiagKind {
    fn label(self) -> &'static str {
        match self {
            DiagKind::Syntax => "syntax error",
            DiagKind::UnknownSymbol => "unknown symbol",
            DiagKind::ArityMismatch => "arity mismatch",
            DiagKind::LevelViolation => "level violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub span: Option<Span>,
    pub msg: String,
}

impl Diagnostic {
    fn new(kind: DiagKind, span: Span, msg: impl Into<String>) -> Diagnostic {
        Diagnostic { kind, span: Some(span), msg: msg.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {}: {}", self.kind.label(), self.msg),
            None => write!(f, "{}: {}", self.kind.label(), self.msg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Sat,
    Symelim,
    Interpolate,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Sat => "sat",
            TaskKind::Symelim => "symelim",
            TaskKind::Interpolate => "interpolate",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        match s {
            "sat" => Some(TaskKind::Sat),
            "symelim" => Some(TaskKind::Symelim),
            "interpolate" => Some(TaskKind::Interpolate),
            _ => None,
        }
    }
}

/// A fully resolved problem file.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub spec: TheorySpec,
    pub task: TaskKind,
    /// Clausified goal for `sat` and `symelim`.
    pub goal: Vec<Clause>,
    /// The two sides for `interpolate`.
    pub goal_a: Vec<Clause>,
    pub goal_b: Vec<Clause>,
    pub closure: Option<AmalgClosure>,
    pub seed_terms: Vec<Term>,
}

impl ProblemFile {
    /// Structural identity: same chain, task, goals, closure, and seeds.
    /// Used by the render/parse round-trip checks.
    pub fn structurally_eq(&self, other: &ProblemFile) -> bool {
        self.spec.base() == other.spec.base()
            && self.spec.levels() == other.spec.levels()
            && self.spec.params() == other.spec.params()
            && self.task == other.task
            && self.goal == other.goal
            && self.goal_a == other.goal_a
            && self.goal_b == other.goal_b
            && self.closure == other.closure
            && self.seed_terms == other.seed_terms
    }
}

/// Where a term or formula occurs, which decides how identifiers resolve.
#[derive(Clone)]
enum Context {
    /// Axiom of the given level: identifiers must be bound variables or
    /// declared symbols of a level not above it.
    Axiom { level: usize, bound: BTreeSet<String> },
    /// Ground user material: declared symbols and free constants.
    Ground,
}

struct Parser<'a> {
    pool: &'a TermPool,
    base: BaseTheoryId,
    sig: Signature,
    diags: Vec<Diagnostic>,
}

pub fn parse_problem(pool: &TermPool, text: &str) -> Result<ProblemFile, Vec<Diagnostic>> {
    let forms = read_all(text).map_err(|e| {
        vec![Diagnostic::new(DiagKind::Syntax, e.span, e.msg)]
    })?;
    if forms.is_empty() {
        return Err(vec![Diagnostic {
            kind: DiagKind::Syntax,
            span: None,
            msg: "empty problem file".into(),
        }]);
    }

    // Pass 1: sort the top-level forms; everything shape-level is checked
    // here so pass 2 can assume well-formed lists.
    let mut base: Option<(BaseTheoryId, Span)> = None;
    let mut levels: Vec<(usize, &[Sexp], Span)> = Vec::new();
    let mut params: Vec<(String, Span)> = Vec::new();
    let mut task: Option<(TaskKind, Span)> = None;
    let mut goal_forms: Vec<&Sexp> = Vec::new();
    let mut goal_a_forms: Vec<&Sexp> = Vec::new();
    let mut goal_b_forms: Vec<&Sexp> = Vec::new();
    let mut closure_form: Option<(&Sexp, Span)> = None;
    let mut seed_forms: Vec<&Sexp> = Vec::new();
    let mut diags: Vec<Diagnostic> = Vec::new();

    for form in &forms {
        let span = form.span();
        let items = match form.as_list() {
            Some(items) if !items.is_empty() => items,
            _ => {
                diags.push(Diagnostic::new(
                    DiagKind::Syntax,
                    span,
                    format!("expected a non-empty form, found `{form}`"),
                ));
                continue;
            }
        };
        let head = match items[0].as_atom() {
            Some(h) => h,
            None => {
                diags.push(Diagnostic::new(
                    DiagKind::Syntax,
                    items[0].span(),
                    "form head must be a keyword",
                ));
                continue;
            }
        };
        match head {
            "base" => {
                if base.is_some() {
                    diags.push(Diagnostic::new(DiagKind::Syntax, span, "duplicate `base` form"));
                    continue;
                }
                match items.get(1).and_then(Sexp::as_atom).and_then(BaseTheoryId::parse) {
                    Some(b) if items.len() == 2 => base = Some((b, span)),
                    _ => diags.push(Diagnostic::new(
                        DiagKind::Syntax,
                        span,
                        "expected `(base DLO|TOrd|LRA|EQ)`",
                    )),
                }
            }
            "level" => {
                let n = items.get(1).and_then(Sexp::as_atom).and_then(|a| a.parse::<usize>().ok());
                match n {
                    Some(n) if n >= 1 => levels.push((n, &items[2..], span)),
                    _ => diags.push(Diagnostic::new(
                        DiagKind::Syntax,
                        span,
                        "expected `(level <n> (functions ...) (axioms ...))` with n >= 1",
                    )),
                }
            }
            "params" => {
                for item in &items[1..] {
                    match item.as_atom() {
                        Some(name) => params.push((name.to_string(), item.span())),
                        None => diags.push(Diagnostic::new(
                            DiagKind::Syntax,
                            item.span(),
                            "parameter entries must be symbol names",
                        )),
                    }
                }
            }
            "task" => {
                if task.is_some() {
                    diags.push(Diagnostic::new(DiagKind::Syntax, span, "duplicate `task` form"));
                    continue;
                }
                match items.get(1).and_then(Sexp::as_atom).and_then(TaskKind::parse) {
                    Some(t) if items.len() == 2 => task = Some((t, span)),
                    _ => diags.push(Diagnostic::new(
                        DiagKind::Syntax,
                        span,
                        "expected `(task sat|symelim|interpolate)`",
                    )),
                }
            }
            "goal" => goal_forms.push(form),
            "goalA" => goal_a_forms.push(form),
            "goalB" => goal_b_forms.push(form),
            "closure" => {
                if closure_form.is_some() {
                    diags.push(Diagnostic::new(DiagKind::Syntax, span, "duplicate `closure` form"));
                } else if items.len() == 2 {
                    closure_form = Some((&items[1], span));
                } else {
                    diags.push(Diagnostic::new(
                        DiagKind::Syntax,
                        span,
                        "expected `(closure <policy>)`",
                    ));
                }
            }
            "seed-terms" => seed_forms.push(form),
            other => diags.push(Diagnostic::new(
                DiagKind::Syntax,
                span,
                format!("unknown form `{other}`"),
            )),
        }
    }

    let (base, _) = match base {
        Some(b) => b,
        None => {
            diags.push(Diagnostic {
                kind: DiagKind::Syntax,
                span: None,
                msg: "missing `(base ...)` form".into(),
            });
            return Err(diags);
        }
    };
    let task = match task {
        Some((t, _)) => t,
        None => {
            diags.push(Diagnostic {
                kind: DiagKind::Syntax,
                span: None,
                msg: "missing `(task ...)` form".into(),
            });
            return Err(diags);
        }
    };

    // Levels must be 1..N, each declared once.
    levels.sort_by_key(|(n, _, _)| *n);
    for (i, (n, _, span)) in levels.iter().enumerate() {
        if *n != i + 1 {
            diags.push(Diagnostic::new(
                DiagKind::Syntax,
                *span,
                format!("levels must be declared once each as 1..{}; found level {n}", levels.len()),
            ));
            return Err(diags);
        }
    }

    let mut parser = Parser { pool, base, sig: Signature::new(), diags };

    // Declare all functions first so axioms can reference later levels for
    // the level-violation check.
    let mut level_functions: Vec<Vec<(String, usize)>> = Vec::new();
    for (n, rest, span) in &levels {
        let mut functions = Vec::new();
        let funcs_form = rest.iter().find(|f| form_head(f) == Some("functions"));
        match funcs_form.and_then(Sexp::as_list) {
            Some(items) => {
                for decl in &items[1..] {
                    if let Some((name, arity)) = parser.parse_func_decl(decl) {
                        functions.push((name, arity));
                    }
                }
            }
            None => parser.diag(
                DiagKind::Syntax,
                *span,
                format!("level {n} is missing its `(functions ...)` form"),
            ),
        }
        for (name, arity) in &functions {
            if let Err(e) = parser.sig.declare(name, *arity, *n) {
                parser.diag(DiagKind::Syntax, *span, e.to_string());
            }
        }
        level_functions.push(functions);
    }

    // Axioms, now that the whole signature is known.
    let mut parsed_levels: Vec<Level> = Vec::new();
    for ((n, rest, span), functions) in levels.iter().zip(level_functions) {
        let mut axioms = Vec::new();
        for f in rest.iter() {
            match form_head(f) {
                Some("functions") => {}
                Some("axioms") => {
                    for ax in &f.as_list().unwrap()[1..] {
                        axioms.extend(parser.parse_axiom(ax, *n));
                    }
                }
                _ => parser.diag(
                    DiagKind::Syntax,
                    f.span(),
                    "expected `(functions ...)` or `(axioms ...)`",
                ),
            }
        }
        let _ = span;
        parsed_levels.push(Level { functions, axioms });
    }

    for (name, span) in &params {
        if !parser.sig.is_extension(name) {
            parser.diag(
                DiagKind::UnknownSymbol,
                *span,
                format!("parameter `{name}` is not a declared symbol"),
            );
        }
    }

    // Ground material.
    let goal = parser.parse_goal_forms(&goal_forms);
    let goal_a = parser.parse_goal_forms(&goal_a_forms);
    let goal_b = parser.parse_goal_forms(&goal_b_forms);
    let closure = closure_form.and_then(|(form, _)| parser.parse_closure(form));
    let mut seed_terms: Vec<Term> = Vec::new();
    for form in &seed_forms {
        for item in &form.as_list().unwrap()[1..] {
            if let Some(t) = parser.parse_term(item, &Context::Ground) {
                if t.is_ground() {
                    seed_terms.push(t);
                } else {
                    parser.diag(DiagKind::Syntax, item.span(), "seed terms must be ground");
                }
            }
        }
    }

    if !parser.diags.is_empty() {
        return Err(parser.diags);
    }

    // Hand the chain to the structural validator; its errors have no spans
    // of their own, so attach the first level form's.
    let spec = match TheorySpec::new(base, parsed_levels, params.into_iter().map(|(p, _)| p)) {
        Ok(spec) => spec,
        Err(e) => {
            return Err(vec![Diagnostic {
                kind: DiagKind::Syntax,
                span: levels.first().map(|(_, _, s)| *s),
                msg: e.to_string(),
            }])
        }
    };

    Ok(ProblemFile { spec, task, goal, goal_a, goal_b, closure, seed_terms })
}

/// Parses a standalone seed-term file: one or more `(seed-terms ...)` forms
/// resolved against an already-built chain's signature. All terms must be
/// ground.
pub fn parse_seed_terms(
    pool: &TermPool,
    spec: &TheorySpec,
    text: &str,
) -> Result<Vec<Term>, Vec<Diagnostic>> {
    let forms = read_all(text)
        .map_err(|e| vec![Diagnostic::new(DiagKind::Syntax, e.span, e.msg)])?;
    let mut parser =
        Parser { pool, base: spec.base(), sig: spec.sig().clone(), diags: Vec::new() };
    let mut terms = Vec::new();
    for form in &forms {
        let items = match form.as_list() {
            Some(items) if form_head(form) == Some("seed-terms") => items,
            _ => {
                parser.diag(
                    DiagKind::Syntax,
                    form.span(),
                    format!("expected a `(seed-terms ...)` form, found `{form}`"),
                );
                continue;
            }
        };
        for item in &items[1..] {
            if let Some(t) = parser.parse_term(item, &Context::Ground) {
                if t.is_ground() {
                    terms.push(t);
                } else {
                    parser.diag(DiagKind::Syntax, item.span(), "seed terms must be ground");
                }
            }
        }
    }
    if parser.diags.is_empty() {
        Ok(terms)
    } else {
        Err(parser.diags)
    }
}

fn form_head(form: &Sexp) -> Option<&str> {
    form.as_list()?.first()?.as_atom()
}

/// Is this token a numeric literal (integer or `p/q`)?
fn numeric_token(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    !body.is_empty() && body.starts_with(|c: char| c.is_ascii_digit())
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num = num::BigInt::from_str(num).ok()?;
    let den = num::BigInt::from_str(den).ok()?;
    if den == num::BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Identifiers: not numeric, no reserved prefix, no parenthesis material.
fn valid_identifier(s: &str) -> bool {
    !s.is_empty() && !numeric_token(s) && !s.starts_with('#') && s != "+" && s != "*"
}

impl Parser<'_> {
    fn diag(&mut self, kind: DiagKind, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(kind, span, msg));
    }

    fn parse_func_decl(&mut self, decl: &Sexp) -> Option<(String, usize)> {
        let items = decl.as_list()?;
        let bad = || format!("expected `(name arity)`, found `{decl}`");
        if items.len() != 2 {
            self.diag(DiagKind::Syntax, decl.span(), bad());
            return None;
        }
        let name = match items[0].as_atom() {
            Some(n) if valid_identifier(n) => n.to_string(),
            Some(n) => {
                self.diag(
                    DiagKind::Syntax,
                    items[0].span(),
                    format!("`{n}` is not a declarable name"),
                );
                return None;
            }
            None => {
                self.diag(DiagKind::Syntax, items[0].span(), bad());
                return None;
            }
        };
        match items[1].as_atom().and_then(|a| a.parse::<usize>().ok()) {
            Some(arity) => Some((name, arity)),
            None => {
                self.diag(DiagKind::Syntax, items[1].span(), "arity must be a natural number");
                None
            }
        }
    }

    /// Parses one axiom formula (optionally `forall`-quantified) and
    /// clausifies it.
    fn parse_axiom(&mut self, form: &Sexp, level: usize) -> Vec<Clause> {
        let ctx = Context::Axiom { level, bound: BTreeSet::new() };
        let f = match self.parse_formula(form, &ctx) {
            Some(f) => f,
            None => return Vec::new(),
        };
        // Strip the quantifier prefix; clausify the matrix.
        let matrix = match f {
            Formula::Forall(_, body) => *body,
            other => other,
        };
        if !matrix.is_quantifier_free() {
            self.diag(
                DiagKind::Syntax,
                form.span(),
                "axiom quantifiers must form a single outer `forall` prefix",
            );
            return Vec::new();
        }
        match clausify(&matrix, CLAUSE_CAP) {
            Ok(clauses) => clauses,
            Err(_) => {
                self.diag(DiagKind::Syntax, form.span(), "axiom is too large to clausify");
                Vec::new()
            }
        }
    }

    /// Parses the formulas of all `goal`-like forms jointly and clausifies
    /// their conjunction once, so subsumption applies across forms.
    fn parse_goal_forms(&mut self, forms: &[&Sexp]) -> Vec<Clause> {
        let mut fs = Vec::new();
        let mut overflow_span = None;
        for form in forms {
            for item in &form.as_list().unwrap()[1..] {
                if let Some(f) = self.parse_formula(item, &Context::Ground) {
                    fs.push(f);
                }
                overflow_span.get_or_insert(item.span());
            }
        }
        if fs.is_empty() {
            return Vec::new();
        }
        match clausify(&Formula::and(fs), CLAUSE_CAP) {
            Ok(clauses) => clauses,
            Err(_) => {
                if let Some(span) = overflow_span {
                    self.diag(DiagKind::Syntax, span, "goal is too large to clausify");
                }
                Vec::new()
            }
        }
    }

    fn parse_closure(&mut self, form: &Sexp) -> Option<AmalgClosure> {
        if form.as_atom() == Some("subterm-only") {
            return Some(AmalgClosure::SubtermOnly);
        }
        let items = form.as_list()?;
        if form_head(form) != Some("shared-constants") {
            self.diag(
                DiagKind::Syntax,
                form.span(),
                "expected `subterm-only` or `(shared-constants ...)`",
            );
            return None;
        }
        let mut functions = BTreeSet::new();
        let mut constants: Option<BTreeSet<String>> = None;
        for item in &items[1..] {
            match item {
                Sexp::Atom(name, span) => {
                    if self.sig.is_extension(name) {
                        functions.insert(name.clone());
                    } else {
                        self.diag(
                            DiagKind::UnknownSymbol,
                            *span,
                            format!("closure function `{name}` is not a declared symbol"),
                        );
                    }
                }
                Sexp::List(..) if form_head(item) == Some("constants") => {
                    let mut set = BTreeSet::new();
                    for c in &item.as_list().unwrap()[1..] {
                        match c.as_atom() {
                            Some(name) if valid_identifier(name) => {
                                set.insert(name.to_string());
                            }
                            _ => self.diag(
                                DiagKind::Syntax,
                                c.span(),
                                "constant restriction entries must be names",
                            ),
                        }
                    }
                    constants = Some(set);
                }
                _ => self.diag(
                    DiagKind::Syntax,
                    item.span(),
                    "expected a function name or `(constants ...)`",
                ),
            }
        }
        Some(AmalgClosure::SharedConstants { functions, constants })
    }

    fn parse_formula(&mut self, form: &Sexp, ctx: &Context) -> Option<Formula> {
        let items = match form.as_list() {
            Some(items) => items,
            None => {
                self.diag(
                    DiagKind::Syntax,
                    form.span(),
                    format!("expected a formula, found `{form}`"),
                );
                return None;
            }
        };
        let head = match items.first().and_then(Sexp::as_atom) {
            Some(h) => h,
            None => {
                self.diag(DiagKind::Syntax, form.span(), "formula head must be a connective");
                return None;
            }
        };
        let args = &items[1..];
        match head {
            "and" | "or" => {
                let sub: Vec<Formula> =
                    args.iter().filter_map(|a| self.parse_formula(a, ctx)).collect();
                Some(if head == "and" { Formula::and(sub) } else { Formula::or(sub) })
            }
            "=>" => {
                if args.len() != 2 {
                    self.diag(DiagKind::Syntax, form.span(), "`=>` takes exactly two formulas");
                    return None;
                }
                let p = self.parse_formula(&args[0], ctx)?;
                let q = self.parse_formula(&args[1], ctx)?;
                Some(Formula::implies(p, q))
            }
            "not" => {
                if args.len() != 1 {
                    self.diag(DiagKind::Syntax, form.span(), "`not` takes exactly one formula");
                    return None;
                }
                Some(Formula::not(self.parse_formula(&args[0], ctx)?))
            }
            "forall" => self.parse_forall(form, args, ctx),
            "<=" | "<" | "=" | "distinct" | ">=" | ">" => {
                if args.len() != 2 {
                    self.diag(
                        DiagKind::Syntax,
                        form.span(),
                        format!("`{head}` takes exactly two terms"),
                    );
                    return None;
                }
                let lhs = self.parse_term(&args[0], ctx)?;
                let rhs = self.parse_term(&args[1], ctx)?;
                let lit = match head {
                    "<=" => Literal::pos(Rel::Le, lhs, rhs),
                    "<" => Literal::pos(Rel::Lt, lhs, rhs),
                    "=" => Literal::pos(Rel::Eq, lhs, rhs),
                    "distinct" => Literal::neg(Rel::Eq, lhs, rhs),
                    ">=" => Literal::pos(Rel::Le, rhs, lhs),
                    _ => Literal::pos(Rel::Lt, rhs, lhs),
                };
                Some(Formula::Atom(lit))
            }
            other => {
                self.diag(DiagKind::Syntax, form.span(), format!("unknown connective `{other}`"));
                None
            }
        }
    }

    fn parse_forall(&mut self, form: &Sexp, args: &[Sexp], ctx: &Context) -> Option<Formula> {
        let (level, bound) = match ctx {
            Context::Axiom { level, bound } => (*level, bound),
            Context::Ground => {
                self.diag(
                    DiagKind::Syntax,
                    form.span(),
                    "goals must be ground and quantifier-free",
                );
                return None;
            }
        };
        if args.len() != 2 {
            self.diag(
                DiagKind::Syntax,
                form.span(),
                "`forall` takes a variable list and one body",
            );
            return None;
        }
        let var_items = match args[0].as_list() {
            Some(items) => items,
            None => {
                self.diag(DiagKind::Syntax, args[0].span(), "expected a `(v ...)` variable list");
                return None;
            }
        };
        let mut bound = bound.clone();
        let mut vars = Vec::new();
        for v in var_items {
            match v.as_atom() {
                Some(name) if valid_identifier(name) => {
                    if self.sig.lookup(name).is_some() {
                        self.diag(
                            DiagKind::Syntax,
                            v.span(),
                            format!("variable `{name}` shadows a declared symbol"),
                        );
                        return None;
                    }
                    bound.insert(name.to_string());
                    vars.push(name.to_string());
                }
                _ => {
                    self.diag(DiagKind::Syntax, v.span(), "variables must be plain names");
                    return None;
                }
            }
        }
        let body = self.parse_formula(&args[1], &Context::Axiom { level, bound })?;
        Some(Formula::forall(vars, body))
    }

    fn parse_term(&mut self, form: &Sexp, ctx: &Context) -> Option<Term> {
        match form {
            Sexp::Atom(token, span) => self.parse_leaf(token, *span, ctx),
            Sexp::List(items, span) => {
                let head = match items.first().and_then(Sexp::as_atom) {
                    Some(h) => h.to_string(),
                    None => {
                        self.diag(DiagKind::Syntax, *span, "application head must be a symbol");
                        return None;
                    }
                };
                let args: Option<Vec<Term>> =
                    items[1..].iter().map(|a| self.parse_term(a, ctx)).collect();
                let args = args?;
                match head.as_str() {
                    "+" => {
                        self.require_lra(*span)?;
                        if args.len() < 2 {
                            self.diag(DiagKind::Syntax, *span, "`+` takes at least two terms");
                            return None;
                        }
                        Some(self.pool.app("+", args))
                    }
                    "*" => {
                        self.require_lra(*span)?;
                        let scalar_ok = args.len() == 2
                            && matches!(args[0].node(), crate::core::TermNode::Num(_));
                        if !scalar_ok {
                            self.diag(
                                DiagKind::Syntax,
                                *span,
                                "`*` takes a rational literal and one term",
                            );
                            return None;
                        }
                        Some(self.pool.app("*", args))
                    }
                    name => self.parse_app(name, args, *span, ctx),
                }
            }
        }
    }

    fn parse_app(
        &mut self,
        name: &str,
        args: Vec<Term>,
        span: Span,
        ctx: &Context,
    ) -> Option<Term> {
        let decl = match self.sig.lookup(name) {
            Some(d) => d,
            None => {
                self.diag(DiagKind::UnknownSymbol, span, format!("`{name}` is not declared"));
                return None;
            }
        };
        let (arity, decl_level) = (decl.arity, decl.level);
        if arity != args.len() {
            self.diag(
                DiagKind::ArityMismatch,
                span,
                format!("`{name}` has arity {arity} but {} arguments were given", args.len()),
            );
            return None;
        }
        if let Context::Axiom { level, .. } = ctx {
            if decl_level > *level {
                self.diag(
                    DiagKind::LevelViolation,
                    span,
                    format!(
                        "`{name}` belongs to level {decl_level}, above this axiom's level {level}"
                    ),
                );
                return None;
            }
        }
        Some(self.pool.app(name, args))
    }

    fn parse_leaf(&mut self, token: &str, span: Span, ctx: &Context) -> Option<Term> {
        if numeric_token(token) {
            self.require_lra(span)?;
            return match parse_rational(token) {
                Some(q) => Some(self.pool.num(q)),
                None => {
                    self.diag(
                        DiagKind::Syntax,
                        span,
                        format!("`{token}` is not a rational literal"),
                    );
                    None
                }
            };
        }
        if !valid_identifier(token) {
            self.diag(DiagKind::Syntax, span, format!("`{token}` is not a valid identifier"));
            return None;
        }
        match ctx {
            Context::Axiom { level, bound } => {
                if bound.contains(token) {
                    return Some(self.pool.var(token));
                }
                match self.sig.lookup(token) {
                    Some(d) if d.arity != 0 => {
                        self.diag(
                            DiagKind::ArityMismatch,
                            span,
                            format!("`{token}` has arity {} but is used as a leaf", d.arity),
                        );
                        None
                    }
                    Some(d) if d.level > *level => {
                        self.diag(
                            DiagKind::LevelViolation,
                            span,
                            format!(
                                "`{token}` belongs to level {}, above this axiom's level {level}",
                                d.level
                            ),
                        );
                        None
                    }
                    Some(_) => Some(self.pool.cst(token)),
                    None => {
                        self.diag(
                            DiagKind::UnknownSymbol,
                            span,
                            format!("`{token}` is neither bound nor declared"),
                        );
                        None
                    }
                }
            }
            Context::Ground => match self.sig.lookup(token) {
                Some(d) if d.arity != 0 => {
                    self.diag(
                        DiagKind::ArityMismatch,
                        span,
                        format!("`{token}` has arity {} but is used as a leaf", d.arity),
                    );
                    None
                }
                _ => Some(self.pool.cst(token)),
            },
        }
    }

    fn require_lra(&mut self, span: Span) -> Option<()> {
        if self.base == BaseTheoryId::Lra {
            Some(())
        } else {
            self.diag(
                DiagKind::Syntax,
                span,
                format!("arithmetic requires base LRA, not {}", self.base.name()),
            );
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> TermPool {
        TermPool::new()
    }

    const MONOTONE_TWO_LEVEL: &str = "\
(base DLO)
(level 1 (functions (f 1) (h 1) (c 0)) (axioms))
(level 2
  (functions (g 1))
  (axioms
    (forall (x) (=> (<= x c) (= (g x) (f x))))
    (forall (x) (=> (< c x) (= (g x) (h x))))))
(params f h c)
(task symelim)
(goal (and (<= c1 c2) (< (g c2) (g c1))))
";

    #[test]
    fn the_two_level_fixture_parses_to_the_expected_chain() {
        let p = pool();
        let pf = parse_problem(&p, MONOTONE_TWO_LEVEL).unwrap();
        assert_eq!(pf.spec.base(), BaseTheoryId::Dlo);
        assert_eq!(pf.spec.num_levels(), 2);
        assert_eq!(
            pf.spec.levels()[0].functions,
            vec![("f".to_string(), 1), ("h".to_string(), 1), ("c".to_string(), 0)]
        );
        assert_eq!(pf.spec.levels()[1].functions, vec![("g".to_string(), 1)]);
        assert_eq!(pf.spec.levels()[1].axioms.len(), 2);
        assert_eq!(
            pf.spec.params().iter().cloned().collect::<Vec<_>>(),
            vec!["c".to_string(), "f".to_string(), "h".to_string()]
        );
        assert_eq!(pf.task, TaskKind::Symelim);
        assert_eq!(pf.goal.len(), 2);
        assert!(pf.goal.iter().all(|c| c.is_ground()));

        // The guarded definition clausifies to the paper's two-literal form.
        let low = &pf.spec.levels()[1].axioms[0];
        assert_eq!(low.lits().len(), 2);
        assert!(low.lits().iter().any(|l| !l.positive && l.rel == Rel::Le));
    }

    #[test]
    fn empty_file_is_a_syntax_error() {
        let p = pool();
        let diags = parse_problem(&p, "").unwrap_err();
        assert_eq!(diags[0].kind, DiagKind::Syntax);
        assert!(diags[0].msg.contains("empty"));
    }

    #[test]
    fn higher_level_symbol_in_a_lower_axiom_is_a_level_violation() {
        let p = pool();
        let text = "\
(base DLO)
(level 1 (functions (f 1)) (axioms (forall (x) (<= (f x) (g x)))))
(level 2 (functions (g 1)) (axioms))
(task sat)
(goal (< a a))
";
        let diags = parse_problem(&p, text).unwrap_err();
        assert!(diags.iter().any(|d| d.kind == DiagKind::LevelViolation
            && d.msg.contains("`g`")
            && d.span == Some(Span { line: 2, col: 58 })));
    }

    #[test]
    fn undeclared_symbols_in_axioms_are_rejected_with_positions() {
        let p = pool();
        let text = "(base EQ)\n(level 1 (functions (f 1)) (axioms (forall (x) (= (f x) q))))\n(task sat)\n(goal (= a a))";
        let diags = parse_problem(&p, text).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagKind::UnknownSymbol);
        assert!(diags[0].msg.contains("`q`"));
    }

    #[test]
    fn arity_errors_point_at_the_application() {
        let p = pool();
        let text = "(base DLO)\n(level 1 (functions (f 2)) (axioms))\n(task sat)\n(goal (< (f a) b))";
        let diags = parse_problem(&p, text).unwrap_err();
        assert_eq!(diags[0].kind, DiagKind::ArityMismatch);
        assert_eq!(diags[0].span, Some(Span { line: 4, col: 10 }));
    }

    #[test]
    fn numerals_are_lra_only() {
        let p = pool();
        let text = "(base DLO)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (< 1/2 a))";
        let diags = parse_problem(&p, text).unwrap_err();
        assert!(diags[0].msg.contains("LRA"));

        let text = "(base LRA)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (< 1/2 (+ a (* -2 b))))";
        let pf = parse_problem(&p, text).unwrap();
        assert_eq!(pf.goal.len(), 1);
    }

    #[test]
    fn goals_reject_quantifiers_and_reserved_names() {
        let p = pool();
        let text = "(base DLO)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (forall (x) (< x x)))";
        let diags = parse_problem(&p, text).unwrap_err();
        assert!(diags[0].msg.contains("ground"));

        let text = "(base DLO)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (< #1 a))";
        let diags = parse_problem(&p, text).unwrap_err();
        assert!(diags[0].msg.contains("#1"));
    }

    #[test]
    fn closure_forms_parse_to_the_two_policies() {
        let p = pool();
        let base = "(base TOrd)\n(level 1 (functions (f 1) (g 1)) (axioms))\n(task interpolate)\n(goalA (< a b))\n(goalB (< b a))\n";
        let pf = parse_problem(&p, &format!("{base}(closure subterm-only)")).unwrap();
        assert_eq!(pf.closure, Some(AmalgClosure::SubtermOnly));

        let pf =
            parse_problem(&p, &format!("{base}(closure (shared-constants f (constants d)))"))
                .unwrap();
        match pf.closure.unwrap() {
            AmalgClosure::SharedConstants { functions, constants } => {
                assert_eq!(functions.into_iter().collect::<Vec<_>>(), vec!["f".to_string()]);
                assert_eq!(
                    constants.unwrap().into_iter().collect::<Vec<_>>(),
                    vec!["d".to_string()]
                );
            }
            other => panic!("unexpected closure {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_missing_forms_are_reported() {
        let p = pool();
        let text = "(base DLO)\n(base EQ)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (< a b))";
        let diags = parse_problem(&p, text).unwrap_err();
        assert!(diags[0].msg.contains("duplicate"));

        let text = "(level 1 (functions (f 1)) (axioms))\n(task sat)";
        let diags = parse_problem(&p, text).unwrap_err();
        assert!(diags.iter().any(|d| d.msg.contains("missing `(base")));
    }

    #[test]
    fn level_numbering_must_be_contiguous_from_one() {
        let p = pool();
        let text = "(base DLO)\n(level 2 (functions (f 1)) (axioms))\n(task sat)\n(goal (< a b))";
        let diags = parse_problem(&p, text).unwrap_err();
        assert!(diags[0].msg.contains("levels must be declared"));
    }

    #[test]
    fn seed_terms_resolve_against_the_signature() {
        let p = pool();
        let text = "(base DLO)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (< a b))\n(seed-terms (f a) c)";
        let pf = parse_problem(&p, text).unwrap();
        assert_eq!(pf.seed_terms, vec![p.app("f", vec![p.cst("a")]), p.cst("c")]);

        let text = "(base DLO)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (< a b))\n(seed-terms (f x y))";
        assert!(parse_problem(&p, text).is_err());
    }

    #[test]
    fn ge_and_gt_normalize_to_mirrored_literals() {
        let p = pool();
        let text = "(base DLO)\n(level 1 (functions (f 1)) (axioms))\n(task sat)\n(goal (and (>= a b) (> c d)))";
        let pf = parse_problem(&p, text).unwrap();
        let lits: Vec<&Literal> = pf.goal.iter().flat_map(|c| c.lits().iter()).collect();
        assert!(lits
            .iter()
            .any(|l| l.rel == Rel::Le && l.lhs == p.cst("b") && l.rhs == p.cst("a")));
        assert!(lits
            .iter()
            .any(|l| l.rel == Rel::Lt && l.lhs == p.cst("d") && l.rhs == p.cst("c")));
    }
}
