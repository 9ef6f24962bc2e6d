//! Deterministic rendering of terms, formulas, and whole problem files in
//! the problem-file grammar, plus an SMT-LIB-style prefix rendering.
//!
//! Rendering is the inverse of parsing up to normalization: a rendered
//! problem file parses back to a structurally identical one, and every
//! rendered trace form lexes under the same s-expression reader.

use crate::core::{Clause, Formula, Literal, Rel, Signature, Term, TermNode};
use crate::interpolation::AmalgClosure;
use super::parse::ProblemFile;
use num::BigRational;
use std::collections::BTreeSet;
use std::fmt::Write;

pub fn term(t: &Term) -> String {
    match t.node() {
        TermNode::Var(v) => v.clone(),
        TermNode::Const(c) => c.clone(),
        TermNode::Num(q) => rational(q),
        TermNode::App(f, args) => {
            let mut out = format!("({f}");
            for a in args {
                out.push(' ');
                out.push_str(&term(a));
            }
            out.push(')');
            out
        }
    }
}

fn rational(q: &BigRational) -> String {
    if q.denom() == &num::BigInt::from(1) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn literal(l: &Literal) -> String {
    let atom = format!("({} {} {})", l.rel.symbol(), term(&l.lhs), term(&l.rhs));
    if l.positive {
        atom
    } else if l.rel == Rel::Eq {
        format!("(distinct {} {})", term(&l.lhs), term(&l.rhs))
    } else {
        format!("(not {atom})")
    }
}

pub fn formula(f: &Formula) -> String {
    match f {
        Formula::True => "(and)".into(),
        Formula::False => "(or)".into(),
        Formula::Atom(l) => literal(l),
        Formula::Not(inner) => format!("(not {})", formula(inner)),
        Formula::And(fs) => nary("and", fs),
        Formula::Or(fs) => nary("or", fs),
        Formula::Implies(p, q) => format!("(=> {} {})", formula(p), formula(q)),
        Formula::Forall(vars, body) => quantified("forall", vars, body),
        Formula::Exists(vars, body) => quantified("exists", vars, body),
    }
}

fn nary(head: &str, fs: &[Formula]) -> String {
    let mut out = format!("({head}");
    for f in fs {
        out.push(' ');
        out.push_str(&formula(f));
    }
    out.push(')');
    out
}

fn quantified(head: &str, vars: &[String], body: &Formula) -> String {
    format!("({head} ({}) {})", vars.join(" "), formula(body))
}

/// A clause as a formula: its single literal, or a disjunction.
pub fn clause(c: &Clause) -> String {
    match c.lits() {
        [l] => literal(l),
        lits => {
            let mut out = String::from("(or");
            for l in lits {
                out.push(' ');
                out.push_str(&literal(l));
            }
            out.push(')');
            out
        }
    }
}

/// An axiom clause with its variables bound by an explicit `forall`.
fn axiom(c: &Clause) -> String {
    let vars: Vec<String> = c.vars().into_iter().collect();
    if vars.is_empty() {
        clause(c)
    } else {
        format!("(forall ({}) {})", vars.join(" "), clause(c))
    }
}

pub fn closure_policy(w: &AmalgClosure) -> String {
    match w {
        AmalgClosure::SubtermOnly => "subterm-only".into(),
        AmalgClosure::SharedConstants { functions, constants } => {
            let mut out = String::from("(shared-constants");
            for f in functions {
                out.push(' ');
                out.push_str(f);
            }
            if let Some(cs) = constants {
                out.push_str(" (constants");
                for c in cs {
                    out.push(' ');
                    out.push_str(c);
                }
                out.push(')');
            }
            out.push(')');
            out
        }
    }
}

/// Renders a whole problem file. Parsing the result yields a structurally
/// identical [`ProblemFile`].
pub fn problem(pf: &ProblemFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(base {})", pf.spec.base().name());
    for (i, level) in pf.spec.levels().iter().enumerate() {
        let _ = writeln!(out, "(level {}", i + 1);
        let mut funcs = String::from("  (functions");
        for (name, arity) in &level.functions {
            let _ = write!(funcs, " ({name} {arity})");
        }
        let _ = writeln!(out, "{funcs})");
        if level.axioms.is_empty() {
            let _ = writeln!(out, "  (axioms))");
        } else {
            let _ = writeln!(out, "  (axioms");
            for (j, ax) in level.axioms.iter().enumerate() {
                let end = if j + 1 == level.axioms.len() { "))" } else { "" };
                let _ = writeln!(out, "    {}{end}", axiom(ax));
            }
        }
    }
    if !pf.spec.params().is_empty() {
        let names: Vec<String> = pf.spec.params().iter().cloned().collect();
        let _ = writeln!(out, "(params {})", names.join(" "));
    }
    if let Some(w) = &pf.closure {
        let _ = writeln!(out, "(closure {})", closure_policy(w));
    }
    let _ = writeln!(out, "(task {})", pf.task.name());
    for (head, clauses) in
        [("goal", &pf.goal), ("goalA", &pf.goal_a), ("goalB", &pf.goal_b)]
    {
        if clauses.is_empty() {
            continue;
        }
        let body: Vec<String> = clauses.iter().map(clause).collect();
        let _ = writeln!(out, "({head} {})", body.join(" "));
    }
    if !pf.seed_terms.is_empty() {
        let body: Vec<String> = pf.seed_terms.iter().map(term).collect();
        let _ = writeln!(out, "(seed-terms {})", body.join(" "));
    }
    out
}

// ---------------------------------------------------------------------------
// SMT-LIB-style rendering
// ---------------------------------------------------------------------------

fn smt_name(name: &str) -> String {
    if name.starts_with('#') {
        format!("|{name}|")
    } else {
        name.to_string()
    }
}

fn smt_rational(q: &BigRational) -> String {
    if q < &BigRational::from(num::BigInt::from(0)) {
        format!("(- {})", smt_rational(&-q.clone()))
    } else if q.denom() == &num::BigInt::from(1) {
        q.numer().to_string()
    } else {
        format!("(/ {} {})", q.numer(), q.denom())
    }
}

pub fn smt_term(t: &Term) -> String {
    match t.node() {
        TermNode::Var(v) => smt_name(v),
        TermNode::Const(c) => smt_name(c),
        TermNode::Num(q) => smt_rational(q),
        TermNode::App(f, args) => {
            let mut out = format!("({}", smt_name(f));
            for a in args {
                out.push(' ');
                out.push_str(&smt_term(a));
            }
            out.push(')');
            out
        }
    }
}

pub fn smt_formula(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Atom(l) => {
            let atom = format!("({} {} {})", l.rel.symbol(), smt_term(&l.lhs), smt_term(&l.rhs));
            if l.positive {
                atom
            } else {
                format!("(not {atom})")
            }
        }
        Formula::Not(inner) => format!("(not {})", smt_formula(inner)),
        Formula::And(fs) => smt_nary("and", fs),
        Formula::Or(fs) => smt_nary("or", fs),
        Formula::Implies(p, q) => format!("(=> {} {})", smt_formula(p), smt_formula(q)),
        Formula::Forall(vars, body) => smt_quantified("forall", vars, body),
        Formula::Exists(vars, body) => smt_quantified("exists", vars, body),
    }
}

fn smt_nary(head: &str, fs: &[Formula]) -> String {
    if fs.is_empty() {
        return if head == "and" { "true".into() } else { "false".into() };
    }
    let mut out = format!("({head}");
    for f in fs {
        out.push(' ');
        out.push_str(&smt_formula(f));
    }
    out.push(')');
    out
}

fn smt_quantified(head: &str, vars: &[String], body: &Formula) -> String {
    let binders: Vec<String> = vars.iter().map(|v| format!("({} Real)", smt_name(v))).collect();
    format!("({head} ({}) {})", binders.join(" "), smt_formula(body))
}

/// A full SMT-LIB-style script asserting the given formulas: sort and
/// symbol declarations (free constants and the extension functions that
/// occur), one `assert` per formula, and a `check-sat`.
pub fn smt_script(sig: &Signature, formulas: &[Formula]) -> String {
    let mut consts: BTreeSet<String> = BTreeSet::new();
    let mut funcs: BTreeSet<String> = BTreeSet::new();
    let mut vars: BTreeSet<String> = BTreeSet::new();
    for f in formulas {
        consts.extend(f.constants());
        vars.extend(f.free_vars());
        funcs.extend(f.func_names().into_iter().filter(|n| n != "+" && n != "*"));
    }
    let mut out = String::from("(set-logic ALL)\n");
    for c in consts.iter().chain(vars.iter()) {
        let _ = writeln!(out, "(declare-const {} Real)", smt_name(c));
    }
    for f in &funcs {
        let arity = sig.lookup(f).map_or(1, |d| d.arity);
        let sorts = vec!["Real"; arity].join(" ");
        let _ = writeln!(out, "(declare-fun {} ({sorts}) Real)", smt_name(f));
    }
    for f in formulas {
        let _ = writeln!(out, "(assert {})", smt_formula(f));
    }
    out.push_str("(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::parse::parse_problem;
    use crate::core::TermPool;

    fn pool() -> TermPool {
        TermPool::new()
    }

    #[test]
    fn literal_polarity_round_trips_through_text() {
        let p = pool();
        let pos = Literal::pos(Rel::Le, p.cst("a"), p.cst("b"));
        assert_eq!(literal(&pos), "(<= a b)");
        assert_eq!(literal(&pos.negated()), "(not (<= a b))");
        let eq = Literal::pos(Rel::Eq, p.cst("a"), p.cst("b"));
        assert_eq!(literal(&eq.negated()), "(distinct a b)");
    }

    #[test]
    fn degenerate_connectives_render_to_empty_forms() {
        assert_eq!(formula(&Formula::True), "(and)");
        assert_eq!(formula(&Formula::False), "(or)");
    }

    #[test]
    fn problem_files_round_trip_structurally() {
        let p = pool();
        let text = "\
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
(seed-terms (g c1))
";
        let pf = parse_problem(&p, text).unwrap();
        let rendered = problem(&pf);
        let reparsed = parse_problem(&p, &rendered).unwrap();
        assert!(pf.structurally_eq(&reparsed), "rendered:\n{rendered}");
        // And rendering is a fixpoint.
        assert_eq!(rendered, problem(&reparsed));
    }

    #[test]
    fn closure_forms_round_trip() {
        let p = pool();
        let text = "\
(base TOrd)
(level 1 (functions (f 1) (g 1)) (axioms))
(closure (shared-constants f (constants d)))
(task interpolate)
(goalA (<= d (g a)))
(goalB (not (<= (f b) c)))
";
        let pf = parse_problem(&p, text).unwrap();
        let reparsed = parse_problem(&p, &problem(&pf)).unwrap();
        assert!(pf.structurally_eq(&reparsed));
    }

    #[test]
    fn smt_rendering_uses_rational_and_quantifier_syntax() {
        let p = pool();
        let half = p.num(BigRational::new(1.into(), 2.into()));
        let neg = p.num(BigRational::from(num::BigInt::from(-3)));
        let sum = p.app("+", vec![p.cst("a"), p.app("*", vec![neg, p.cst("b")])]);
        let atom = Formula::Atom(Literal::pos(Rel::Lt, half, sum));
        assert_eq!(smt_formula(&atom), "(< (/ 1 2) (+ a (* (- 3) b)))");

        let bound = Formula::forall(
            vec!["y1".into()],
            Formula::Atom(Literal::pos(Rel::Le, p.app("h", vec![p.var("y1")]), p.var("y1"))),
        );
        assert_eq!(smt_formula(&bound), "(forall ((y1 Real)) (<= (h y1) y1))");
    }

    #[test]
    fn smt_scripts_declare_what_they_use() {
        let p = pool();
        let mut sig = Signature::new();
        sig.declare("f", 2, 1).unwrap();
        let f = Formula::Atom(Literal::pos(
            Rel::Le,
            p.app("f", vec![p.cst("a"), p.cst("#1")]),
            p.cst("b"),
        ));
        let script = smt_script(&sig, &[f]);
        assert!(script.contains("(declare-const a Real)"));
        assert!(script.contains("(declare-const |#1| Real)"));
        assert!(script.contains("(declare-fun f (Real Real) Real)"));
        assert!(script.contains("(assert (<= (f a |#1|) b))"));
        assert!(script.ends_with("(check-sat)\n"));
    }
}
