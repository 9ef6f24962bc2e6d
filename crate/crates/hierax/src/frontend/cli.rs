//! Command-line driver: argument handling, task dispatch, trace and report
//! rendering, exit-code mapping.
//!
//! Exit codes: `0` task success (UNSAT for `sat`, verified constraint or
//! interpolant otherwise), `1` task-level negative verdict (SAT goal,
//! failed guarantee or verification, jointly satisfiable interpolation
//! sides), `2` input error (usage, file, syntax, resolution), `3` engine
//! limit (normal-form cap exceeded) or oracle disagreement.
//!
//! Reports are deterministic: the same input bytes produce the same output
//! bytes. Traces at level 2 re-emit every intermediate set as s-expressions
//! in the problem-file grammar, so they can be read back by the same
//! reader.

use crate::base::{self, BaseTheoryId, QeConfig, QeError, Verdict};
use crate::core::{Clause, Formula, Literal, Term, TermPool};
use crate::interpolation::{self, InterpError, InterpolantReport, InterpolationProblem};
use crate::locality::{self, LocalityError, ReduceOptions, Reduction};
use crate::symelim::{self, ElimOptions, SymElimError, SymElimResult};
use super::parse::{parse_problem, Diagnostic, ProblemFile, TaskKind};
use super::render;
use clap::error::ErrorKind;
use clap::Parser;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "hierax",
    version,
    about = "Hierarchical satisfiability, symbol elimination, and ground \
             interpolation for chains of local theory extensions"
)]
struct Args {
    /// Task to run; must match the problem file's `(task ...)` form.
    #[arg(long, value_parser = parse_task)]
    task: TaskKind,

    /// Trace detail: 0 report only, 1 summaries, 2 full intermediate sets.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    trace: u8,

    /// Cross-check base-level verdicts against an exhaustive oracle.
    #[arg(long)]
    oracle: bool,

    /// Write the task's main result as an SMT-LIB-style script.
    #[arg(long, value_name = "file")]
    smtlib_out: Option<PathBuf>,

    /// Extra instantiation terms, as `(seed-terms ...)` forms in a file.
    #[arg(long, value_name = "file")]
    seed_terms: Option<PathBuf>,

    /// Problem file.
    problem: PathBuf,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    TaskKind::parse(s).ok_or_else(|| format!("`{s}` is not one of sat, symelim, interpolate"))
}

pub fn run() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut out = String::new();
    let code = match drive(&args, &mut out) {
        Ok(code) => code,
        Err(failure) => {
            for line in failure.messages {
                eprintln!("{line}");
            }
            failure.code
        }
    };
    print!("{out}");
    ExitCode::from(code)
}

/// A run abort: messages for standard error plus the exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    messages: Vec<String>,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Failure {
        Failure { code: 2, messages: vec![format!("error: {}", msg.into())] }
    }

    fn limit(msg: impl Into<String>) -> Failure {
        Failure { code: 3, messages: vec![format!("error: {}", msg.into())] }
    }

    fn diagnostics(path: &PathBuf, diags: Vec<Diagnostic>) -> Failure {
        Failure {
            code: 2,
            messages: diags.iter().map(|d| format!("{}:{d}", path.display())).collect(),
        }
    }
}

fn qe_failure(e: &QeError) -> Failure {
    match e {
        QeError::DisjunctCap(_) => Failure::limit(e.to_string()),
        other => Failure::input(other.to_string()),
    }
}

fn locality_failure(e: &LocalityError) -> Failure {
    match e {
        LocalityError::Base(q) => qe_failure(q),
        other => Failure::input(other.to_string()),
    }
}

fn symelim_failure(e: &SymElimError) -> Failure {
    match e {
        SymElimError::Locality(l) => locality_failure(l),
        SymElimError::Qe(q) => qe_failure(q),
        SymElimError::Overflow(_) => Failure::limit(e.to_string()),
        other => Failure::input(other.to_string()),
    }
}

fn interp_failure(e: &InterpError) -> Failure {
    match e {
        InterpError::Locality(l) => locality_failure(l),
        InterpError::Elim(s) => symelim_failure(s),
        InterpError::Qe(q) => qe_failure(q),
        InterpError::Overflow(_) => Failure::limit(e.to_string()),
        // Task-level negatives: there is nothing to compute, not a usage
        // problem.
        InterpError::NotUnsat | InterpError::SeparationIncomplete => {
            Failure { code: 1, messages: vec![format!("error: {e}")] }
        }
        other => Failure::input(other.to_string()),
    }
}

fn drive(args: &Args, out: &mut String) -> Result<u8, Failure> {
    let pool = TermPool::new();
    let text = std::fs::read_to_string(&args.problem)
        .map_err(|e| Failure::input(format!("{}: {e}", args.problem.display())))?;
    let pf = parse_problem(&pool, &text).map_err(|d| Failure::diagnostics(&args.problem, d))?;
    if pf.task != args.task {
        return Err(Failure::input(format!(
            "problem file declares task `{}` but `--task {}` was given",
            pf.task.name(),
            args.task.name()
        )));
    }

    let mut seed_terms = pf.seed_terms.clone();
    if let Some(path) = &args.seed_terms {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let extra = super::parse::parse_seed_terms(&pool, &pf.spec, &text)
            .map_err(|d| Failure::diagnostics(path, d))?;
        seed_terms.extend(extra);
    }
    let seeds = interpolation::seeds_by_level(&pf.spec, &seed_terms.iter().cloned().collect());

    let cfg = QeConfig::default();
    let _ = writeln!(out, "task: {}", pf.task.name());
    match pf.task {
        TaskKind::Sat => run_sat(args, &pool, &pf, seeds, &cfg, out),
        TaskKind::Symelim => run_symelim(args, &pool, &pf, seeds, &cfg, out),
        TaskKind::Interpolate => {
            if !seed_terms.is_empty() {
                eprintln!("note: seed terms are ignored by the interpolate task");
            }
            run_interpolate(args, &pool, &pf, &cfg, out)
        }
    }
}

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

fn run_sat(
    args: &Args,
    pool: &TermPool,
    pf: &ProblemFile,
    seeds: BTreeMap<usize, Vec<Term>>,
    cfg: &QeConfig,
    out: &mut String,
) -> Result<u8, Failure> {
    let opts = ReduceOptions { seeds, split: None };
    let decision = locality::decide_sat_extension(&pf.spec, pool, &pf.goal, &opts, cfg)
        .map_err(|e| locality_failure(&e))?;
    trace_reduction(args.trace, &decision.reduction, out);
    let _ = writeln!(out, "verdict: {}", decision.verdict);
    if args.oracle {
        oracle_line(pf.spec.base(), pool, &decision.reduction.base_clauses, decision.verdict, cfg, out)?;
    }
    if let Some(path) = &args.smtlib_out {
        let formulas: Vec<Formula> =
            decision.reduction.base_clauses.iter().map(Clause::to_formula).collect();
        write_smtlib(path, &render::smt_script(pf.spec.sig(), &formulas))?;
    }
    Ok(if decision.verdict == Verdict::Unsat { 0 } else { 1 })
}

fn run_symelim(
    args: &Args,
    pool: &TermPool,
    pf: &ProblemFile,
    seeds: BTreeMap<usize, Vec<Term>>,
    cfg: &QeConfig,
    out: &mut String,
) -> Result<u8, Failure> {
    let opts = ElimOptions { params: None, allowed_args: None, seeds, split: None };
    let result = symelim::symbol_eliminate(&pf.spec, pool, &pf.goal, &opts, cfg)
        .map_err(|e| symelim_failure(&e))?;
    trace_reduction(args.trace, &result.reduction, out);
    trace_elimination(args.trace, &result, out);
    let constraint = result.constraint.as_ref().expect("symbol_eliminate sets the constraint");
    let _ = writeln!(out, "qe-theory: {}", pf.spec.base().qe_label());
    let _ = writeln!(out, "constraint: {}", render::formula(constraint));
    let _ = writeln!(out, "constraint-smtlib: {}", render::smt_formula(constraint));

    let guarantee = symelim::check_unsat_guarantee(&pf.spec, pool, &pf.goal, &result, cfg)
        .map_err(|e| symelim_failure(&e))?;
    let pass = guarantee == Verdict::Unsat;
    let _ = writeln!(out, "guarantee: {}", if pass { "PASS" } else { "FAIL" });
    if args.oracle {
        let verdict = base::decide_ground_sat(pf.spec.base(), pool, &result.reduction.base_clauses, cfg)
            .map_err(|e| qe_failure(&e))?;
        oracle_line(pf.spec.base(), pool, &result.reduction.base_clauses, verdict, cfg, out)?;
    }
    if let Some(path) = &args.smtlib_out {
        write_smtlib(path, &render::smt_script(pf.spec.sig(), &[constraint.clone()]))?;
    }
    Ok(if pass { 0 } else { 1 })
}

fn run_interpolate(
    args: &Args,
    pool: &TermPool,
    pf: &ProblemFile,
    cfg: &QeConfig,
    out: &mut String,
) -> Result<u8, Failure> {
    let problem = InterpolationProblem {
        a: pf.goal_a.clone(),
        b: pf.goal_b.clone(),
        closure: pf.closure.clone(),
        from_b: false,
    };
    let report = interpolation::compute_interpolant(&pf.spec, pool, &problem, cfg)
        .map_err(|e| interp_failure(&e))?;
    trace_interpolation(args.trace, &report, out);
    let _ = writeln!(out, "qe-theory: {}", pf.spec.base().qe_label());
    let _ = writeln!(out, "interpolant: {}", render::formula(&report.interpolant));
    let _ = writeln!(out, "interpolant-smtlib: {}", render::smt_formula(&report.interpolant));
    let _ = writeln!(
        out,
        "verification: A-implies={} B-refutes={}",
        pass_fail(report.a_implies),
        pass_fail(report.b_refuted)
    );
    if report.audit_violations.is_empty() {
        let _ = writeln!(out, "audit: PASS");
    } else {
        let _ = writeln!(out, "audit: FAIL ({})", report.audit_violations.join(" "));
    }
    let _ = writeln!(out, "separability: assumed");
    if args.oracle {
        let mut joint = pf.goal_a.clone();
        joint.extend(pf.goal_b.iter().cloned());
        let decision =
            locality::decide_sat_extension(&pf.spec, pool, &joint, &ReduceOptions::default(), cfg)
                .map_err(|e| locality_failure(&e))?;
        oracle_line(pf.spec.base(), pool, &decision.reduction.base_clauses, decision.verdict, cfg, out)?;
    }
    if let Some(path) = &args.smtlib_out {
        write_smtlib(path, &render::smt_script(pf.spec.sig(), &[report.interpolant.clone()]))?;
    }
    Ok(if report.verified() { 0 } else { 1 })
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_smtlib(path: &PathBuf, script: &str) -> Result<(), Failure> {
    std::fs::write(path, script)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

fn trace_reduction(level: u8, reduction: &Reduction, out: &mut String) {
    if level == 0 {
        return;
    }
    for step in &reduction.steps {
        let _ = writeln!(out, "(step (level {})", step.level);
        let terms: Vec<String> = step.inst_terms.iter().map(render::term).collect();
        let _ = writeln!(out, "  (inst-terms {})", terms.join(" "));
        let defs: Vec<String> = step
            .defs
            .iter()
            .map(|(c, t)| format!("(= {} {})", render::term(c), render::term(t)))
            .collect();
        let _ = writeln!(out, "  (defs {})", defs.join(" "));
        if level < 2 {
            let _ = writeln!(
                out,
                "  (counts (instances {}) (k0 {}) (g0 {}) (con0 {})))",
                step.instances.len(),
                step.k0.len(),
                step.g0.len(),
                step.con0.len()
            );
            continue;
        }
        let clause_list = |cs: &[Clause]| -> String {
            cs.iter().map(render::clause).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "  (instances {})", clause_list(&step.instances));
        let _ = writeln!(out, "  (k0 {})", clause_list(&step.k0));
        let _ = writeln!(out, "  (g0 {})", clause_list(&step.g0));
        let cons: Vec<String> = step
            .con0
            .iter()
            .map(|c| {
                if c.trivial {
                    format!("(trivial {})", render::clause(&c.clause))
                } else {
                    render::clause(&c.clause)
                }
            })
            .collect();
        let _ = writeln!(out, "  (con0 {}))", cons.join(" "));
    }
    if level >= 2 {
        let clauses: Vec<String> =
            reduction.base_clauses.iter().map(render::clause).collect();
        let _ = writeln!(out, "(base-clauses {})", clauses.join(" "));
        let _ = writeln!(out, "(note instantiation-term-arguments-are-flattened-during-purification)");
    }
}

fn trace_elimination(level: u8, result: &SymElimResult, out: &mut String) {
    if level == 0 {
        return;
    }
    let names = |set: &BTreeSet<String>| -> String {
        set.iter().cloned().collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(
        out,
        "(partition (c-f {}) (c-p {}) (c-rest {}))",
        names(&result.partition.c_f),
        names(&result.partition.c_p),
        names(&result.partition.c_rest)
    );
    if !result.partition.nested_c_p.is_empty() {
        // Parameter arguments that are themselves purified terms; their
        // definitions are substituted back before abstraction.
        let _ = writeln!(out, "(nested-parameter-args {})", names(&result.partition.nested_c_p));
    }
    if level >= 2 {
        let _ = writeln!(out, "(gamma1-raw {})", render::formula(&result.gamma1_raw));
        let _ = writeln!(out, "(gamma1 {})", render::formula(&result.gamma1));
        let _ = writeln!(out, "(gamma2-raw {})", render::formula(&result.gamma2_raw));
    }
    let _ = writeln!(out, "(gamma2 {})", render::formula(&result.gamma2));
    if !result.abstracted.is_empty() {
        let pairs: Vec<String> = result
            .abstracted
            .iter()
            .map(|(c, v)| format!("({c} {v})"))
            .collect();
        let _ = writeln!(out, "(abstracted {})", pairs.join(" "));
    }
}

fn trace_interpolation(level: u8, report: &InterpolantReport, out: &mut String) {
    if level == 0 {
        return;
    }
    let functions: Vec<String> = report.shared.functions.iter().cloned().collect();
    let constants: Vec<String> = report.shared.constants.iter().cloned().collect();
    let _ = writeln!(
        out,
        "(shared (functions {}) (constants {}))",
        functions.join(" "),
        constants.join(" ")
    );
    let _ = writeln!(out, "(closure-used {})", render::closure_policy(&report.closure_used));
    let wa: Vec<String> = report.w_a.iter().map(render::term).collect();
    let wb: Vec<String> = report.w_b.iter().map(render::term).collect();
    let _ = writeln!(out, "(w-a {})", wa.join(" "));
    let _ = writeln!(out, "(w-b {})", wb.join(" "));
    trace_reduction(level, &report.elim.reduction, out);
    trace_elimination(level, &report.elim, out);
}

// ---------------------------------------------------------------------------
// Oracle cross-checks
// ---------------------------------------------------------------------------

/// Decides the flat base clause set by an exhaustive method and compares
/// with the engine's verdict: rank enumeration for the order and equality
/// theories, propositional assignment enumeration with exact feasibility
/// tests for linear arithmetic.
fn oracle_line(
    base_theory: BaseTheoryId,
    pool: &TermPool,
    clauses: &[Clause],
    engine: Verdict,
    cfg: &QeConfig,
    out: &mut String,
) -> Result<(), Failure> {
    let oracle = match base_theory {
        BaseTheoryId::Dlo | BaseTheoryId::TOrd | BaseTheoryId::Eq => {
            let consts: BTreeSet<String> =
                clauses.iter().flat_map(Clause::constants).collect();
            // Rank enumeration visits k^k assignments for k constants.
            if consts.len() > 7 {
                None
            } else {
                Some(base::finite_order_oracle(clauses, consts.len()))
            }
        }
        BaseTheoryId::Lra => lra_enumeration_oracle(pool, clauses, cfg)?,
    };
    match oracle {
        Some(v) if v == engine => {
            let _ = writeln!(out, "oracle: agree");
            Ok(())
        }
        Some(v) => Err(Failure {
            code: 3,
            messages: vec![format!(
                "ORACLE DISAGREEMENT: engine says {engine}, exhaustive check says {v}"
            )],
        }),
        None => {
            let _ = writeln!(out, "oracle: skipped (exhaustive enumeration too large)");
            Ok(())
        }
    }
}

/// Brute-force satisfiability for ground linear-arithmetic clause sets:
/// every propositional assignment to the distinct atoms is tested for
/// clause coverage, then for theory feasibility of its literal conjunction.
fn lra_enumeration_oracle(
    pool: &TermPool,
    clauses: &[Clause],
    cfg: &QeConfig,
) -> Result<Option<Verdict>, Failure> {
    let mut atoms: Vec<Literal> = Vec::new();
    for c in clauses {
        for l in c.lits() {
            let pos = if l.positive { l.clone() } else { l.negated() };
            if !atoms.contains(&pos) {
                atoms.push(pos);
            }
        }
    }
    if atoms.len() > 16 {
        return Ok(None);
    }
    if clauses.iter().any(|c| c.lits().is_empty()) {
        return Ok(Some(Verdict::Unsat));
    }
    for mask in 0u32..(1u32 << atoms.len()) {
        let truth = |l: &Literal| -> bool {
            let pos = if l.positive { l.clone() } else { l.negated() };
            let idx = atoms.iter().position(|a| *a == pos).unwrap();
            let val = mask & (1 << idx) != 0;
            if l.positive {
                val
            } else {
                !val
            }
        };
        if !clauses.iter().all(|c| c.lits().iter().any(&truth)) {
            continue;
        }
        let units: Vec<Clause> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Clause::unit(if mask & (1 << i) != 0 { a.clone() } else { a.negated() })
            })
            .collect();
        let feasible = base::decide_ground_sat(BaseTheoryId::Lra, pool, &units, cfg)
            .map_err(|e| qe_failure(&e))?;
        if feasible == Verdict::Sat {
            return Ok(Some(Verdict::Sat));
        }
    }
    Ok(Some(Verdict::Unsat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolation::AmalgClosure;

    #[test]
    fn lra_enumeration_matches_the_engine_on_small_sets() {
        let pool = TermPool::new();
        let cfg = QeConfig::default();
        let one = || pool.num(num::BigRational::from(num::BigInt::from(1)));
        // a <= b and b < a is unsatisfiable; a <= b or b < a+1 is fine.
        let le = Literal::pos(crate::core::Rel::Le, pool.cst("a"), pool.cst("b"));
        let lt = Literal::pos(crate::core::Rel::Lt, pool.cst("b"), pool.cst("a"));
        let bump = Literal::pos(
            crate::core::Rel::Lt,
            pool.cst("b"),
            pool.app("+", vec![pool.cst("a"), one()]),
        );
        let unsat = vec![Clause::unit(le.clone()), Clause::unit(lt.clone())];
        let sat = vec![Clause::new(vec![le, bump])];
        assert_eq!(
            lra_enumeration_oracle(&pool, &unsat, &cfg).unwrap(),
            Some(Verdict::Unsat)
        );
        assert_eq!(lra_enumeration_oracle(&pool, &sat, &cfg).unwrap(), Some(Verdict::Sat));
    }

    #[test]
    fn closure_policy_trace_rendering_matches_the_grammar() {
        let w = AmalgClosure::SharedConstants {
            functions: ["f".to_string()].into_iter().collect(),
            constants: Some(["d".to_string()].into_iter().collect()),
        };
        assert_eq!(render::closure_policy(&w), "(shared-constants f (constants d))");
    }
}
