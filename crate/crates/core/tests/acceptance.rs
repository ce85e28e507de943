//! Acceptance criteria, one line of output each. Exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualfpc::ad::{ad_context, ad_type};
use dualfpc::ast::{self, subst_term, Term, TermKind, Type};
use dualfpc::corpus;
use dualfpc::ops::OpRegistry;
use dualfpc::runtime::{
    apply_prim, tan_add, tan_basis, tan_scale, tan_zero, Backend, Env, Machine, Outcome, Tangent, Value, DEFAULT_FUEL,
};
use dualfpc::surface::{parse_type, SourceFile};
use dualfpc::typecheck::{check_against, Context, Lang};
use dualfpc::verify::{
    chain_rule_check, flatten_value, random_value, rel_err, unflatten_value, verify_program, FlatValue, Mode, Program,
    ProgramSummary, TrialConfig, Verdict,
};

type Outcomes = Result<String, String>;

struct Corpus {
    ops: OpRegistry,
    files: Vec<(&'static str, SourceFile)>,
    programs: Vec<Program>,
}

impl Corpus {
    fn load() -> Corpus {
        let ops = OpRegistry::standard();
        let files = corpus::load(&ops).unwrap_or_else(|(n, e)| panic!("{n}: {e}"));
        let programs = files
            .iter()
            .flat_map(|(_, f)| f.defs.iter().map(move |d| (f, d)))
            .map(|(f, d)| Program::from_file(f, &d.name, &ops).unwrap_or_else(|e| panic!("{}: {e}", d.name)))
            .collect();
        Corpus { ops, files, programs }
    }

    fn program(&self, name: &str) -> &Program {
        self.programs.iter().find(|p| p.name == name).expect("corpus program")
    }
}

fn point(p: &Program, v: Value) -> FlatValue {
    flatten_value(&v, &p.input).unwrap()
}

fn is_domain_error(o: &Outcome) -> bool {
    matches!(o, Outcome::DomainError { .. })
}

// ---- 1 ----

fn macro_types(c: &Corpus) -> Outcomes {
    let mut kinds = BTreeSet::new();
    let mut ops_used = BTreeSet::new();
    for p in &c.programs {
        p.term.visit(&mut |t| {
            kinds.insert(t.kind());
            if let Term::Op(o, _) = t {
                ops_used.insert(o.clone());
            }
        });
        let ty = Type::arrow(p.input.clone(), p.output.clone());
        let dty = ad_type(&ty).map_err(|e| format!("{}: {e}", p.name))?;
        let ctx = ad_context(&Context::new()).map_err(|e| e.to_string())?;
        check_against(&ctx, &p.dual, &dty, Lang::Target, &c.ops).map_err(|e| format!("{}: {e}", p.name))?;
    }
    if c.programs.len() < 25 {
        return Err(format!("only {} programs", c.programs.len()));
    }
    let all = [
        TermKind::Var,
        TermKind::Let,
        TermKind::Const,
        TermKind::Op,
        TermKind::Sign,
        TermKind::Inl,
        TermKind::Inr,
        TermKind::Case,
        TermKind::Unit,
        TermKind::Pair,
        TermKind::PairMatch,
        TermKind::Lam,
        TermKind::App,
        TermKind::Roll,
        TermKind::Unroll,
        TermKind::VoidMatch,
    ];
    let missing: Vec<_> = all.iter().filter(|k| !kinds.contains(k)).collect();
    if !missing.is_empty() {
        return Err(format!("constructors not covered: {missing:?}"));
    }
    let missing: Vec<_> = c.ops.symbols().filter(|o| !ops_used.contains(*o)).collect();
    if !missing.is_empty() {
        return Err(format!("ops not covered: {missing:?}"));
    }
    let sources: String = corpus::FILES.iter().map(|(_, s)| *s).collect();
    for kw in ["fix ", "iterate"] {
        if !sources.contains(kw) {
            return Err(format!("no program uses `{kw}`"));
        }
    }
    for name in ["relu", "taylor_exp"] {
        c.program(name);
    }
    Ok(format!(
        "{} programs, D(t) : D(ty) in the target language",
        c.programs.len()
    ))
}

// ---- 2 ----

fn primitives(c: &Corpus) -> Outcomes {
    let mut worst: f64 = 0.0;
    for op in c.ops.symbols() {
        let r = chain_rule_check(op, 1000, 7, 1e-6, 1e-6, &c.ops).map_err(|e| e.to_string())?;
        if !r.ok() {
            return Err(format!("{op}: {}", r.failures[0]));
        }
        worst = worst.max(r.max_rel_err_fd);
    }
    Ok(format!(
        "{} ops x 1000 samples, max rel err vs fd {worst:.1e}",
        c.ops.symbols().count()
    ))
}

// ---- 3, 4 ----

fn summaries(c: &Corpus, mode: Mode) -> Result<Vec<ProgramSummary>, String> {
    let cfg = TrialConfig {
        trials: 100,
        seed: 11,
        ..TrialConfig::default()
    };
    c.programs
        .iter()
        .map(|p| verify_program(p, mode, &cfg, &c.ops).map_err(|e| format!("{}: {e}", p.name)))
        .collect()
}

fn judge(sums: &[ProgramSummary], what: &str) -> Outcomes {
    let mut worst: f64 = 0.0;
    for s in sums {
        if let Some(r) = s.reports.iter().find(|r| r.verdict == Verdict::Fail) {
            return Err(format!("{} at {:?}: {}", s.program, r.point, r.notes.join("; ")));
        }
        if s.passed < 100 {
            return Err(format!("{}: only {} usable points", s.program, s.passed));
        }
        worst = worst.max(s.max_rel_err());
    }
    Ok(format!(
        "{} programs x 100 points, {what}, max rel err vs fd {worst:.1e}",
        sums.len()
    ))
}

fn forward(fwd: &[ProgramSummary]) -> Outcomes {
    judge(fwd, "primal bitwise equal")
}

fn reverse(c: &Corpus, rev: &[ProgramSummary]) -> Outcomes {
    for name in ["sum_list", "map_square_sum"] {
        c.program(name);
    }
    let cross = rev
        .iter()
        .flat_map(|s| &s.reports)
        .filter_map(|r| r.cross_mode_err)
        .fold(0.0, f64::max);
    judge(rev, &format!("max rel err vs forward {cross:.1e}"))
}

// ---- 5 ----

fn partiality(c: &Corpus, fwd: &[ProgramSummary], rev: &[ProgramSummary]) -> Outcomes {
    let ops = &c.ops;
    let relu = c.program("relu");
    let zero = point(relu, Value::Real(0.0));
    let primal = relu.primal(&zero, DEFAULT_FUEL, ops).unwrap();
    if !is_domain_error(&primal) {
        return Err(format!("relu 0.0 gave {primal}"));
    }
    for backend in [Backend::K1, Backend::KInf] {
        let o = relu
            .dual(&zero, &[tan_basis(1, backend)], backend, DEFAULT_FUEL, ops)
            .unwrap();
        if !is_domain_error(&o) {
            return Err(format!("D(relu) 0.0 on {backend} gave {o}"));
        }
    }
    let bad = [
        ("div", Value::pair(Value::Real(1.0), Value::Real(0.0))),
        ("div", Value::pair(Value::Real(0.0), Value::Real(0.0))),
        ("logarithm", Value::Real(0.0)),
        ("logarithm", Value::Real(-1.5)),
        ("root", Value::Real(-0.5)),
    ];
    for (name, v) in bad {
        let p = c.program(name);
        let pt = point(p, v);
        let seeds = vec![Tangent::Scalar(1.0); pt.slots.len()];
        let o = p.primal(&pt, DEFAULT_FUEL, ops).unwrap();
        let d = p.dual(&pt, &seeds, Backend::K1, DEFAULT_FUEL, ops).unwrap();
        if !is_domain_error(&o) || !is_domain_error(&d) {
            return Err(format!("{name} {:?}: {o} / {d}", pt.slots));
        }
    }
    let good = [
        ("div", Value::pair(Value::Real(1.0), Value::Real(-2.0))),
        ("logarithm", Value::Real(0.5)),
    ];
    for (name, v) in good {
        let p = c.program(name);
        let o = p.primal(&point(p, v), DEFAULT_FUEL, ops).unwrap();
        if o.is_bottom() {
            return Err(format!("{name} undefined inside its domain: {o}"));
        }
    }
    let reports: Vec<_> = fwd.iter().chain(rev).flat_map(|s| &s.reports).collect();
    let mismatched = reports
        .iter()
        .filter(|r| r.verdict == Verdict::Fail && r.notes.iter().any(|n| n.starts_with("program:")))
        .count();
    if mismatched > 0 {
        return Err(format!("{mismatched} trials with only one run undefined"));
    }
    let bottoms = reports.iter().filter(|r| r.verdict == Verdict::Bottom).count();
    let inconclusive = reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    let share = inconclusive as f64 / reports.len() as f64;
    if share > 0.05 {
        return Err(format!("{inconclusive} of {} trials inconclusive", reports.len()));
    }
    Ok(format!(
        "{} trials, {bottoms} consistently undefined, {inconclusive} inconclusive",
        reports.len()
    ))
}

// ---- 6 ----

struct Gen {
    rng: ChaCha8Rng,
    list: Type,
    n: usize,
}

impl Gen {
    fn fresh(&mut self) -> String {
        self.n += 1;
        format!("w{}", self.n)
    }

    fn real(&mut self) -> f64 {
        (self.rng.gen_range(-30..=30) as f64) / 10.0
    }

    /// A closed value term and a real-valued term consuming it through `x`.
    fn value_and_consumer(&mut self, x: &str) -> (Term, Term) {
        match self.rng.gen_range(0..5) {
            0 => (Term::Const(self.real()), self.expr(&[x.to_string()], 3)),
            1 => {
                let (a, b) = (self.fresh(), self.fresh());
                let body = self.expr(&[a.clone(), b.clone()], 3);
                (
                    ast::pair(Term::Const(self.real()), Term::Const(self.real())),
                    ast::pair_match(ast::var(x), &a, &b, body),
                )
            }
            2 => {
                let (a, b) = (self.fresh(), self.fresh());
                let v = if self.rng.gen_bool(0.5) {
                    Term::Inl(Rc::new(Term::Const(self.real())))
                } else {
                    Term::Inr(Rc::new(Term::Const(self.real())))
                };
                let (l, r) = (
                    self.expr(std::slice::from_ref(&a), 3),
                    self.expr(std::slice::from_ref(&b), 3),
                );
                (v, ast::case(ast::var(x), &a, l, &b, r))
            }
            3 => {
                let xs: Vec<f64> = (0..self.rng.gen_range(0..4)).map(|_| self.real()).collect();
                (self.list_term(&xs), self.list_sum(x))
            }
            _ => {
                let y = self.fresh();
                let body = self.expr(std::slice::from_ref(&y), 2);
                let k = self.real();
                (ast::lam(&y, body), ast::app(ast::var(x), Term::Const(k)))
            }
        }
    }

    fn list_term(&self, xs: &[f64]) -> Term {
        xs.iter().rev().fold(
            ast::roll(Term::Inl(Rc::new(Term::Unit)), self.list.clone()),
            |acc, x| ast::roll(Term::Inr(Rc::new(ast::pair(Term::Const(*x), acc))), self.list.clone()),
        )
    }

    /// Sums the first two elements of the list `x`.
    fn list_sum(&mut self, x: &str) -> Term {
        let step = |l: Term, k: &dyn Fn(Term, Term) -> Term, g: &mut Gen| {
            let (u, e, p, h, t) = (g.fresh(), g.fresh(), g.fresh(), g.fresh(), g.fresh());
            ast::unroll(
                l,
                &u,
                ast::case(
                    ast::var(&u),
                    &e,
                    Term::Const(0.0),
                    &p,
                    ast::pair_match(ast::var(&p), &h, &t, k(ast::var(&h), ast::var(&t))),
                ),
            )
        };
        let inner = |h1: Term, t: Term, g: &mut Gen| step(t, &|h2, _| ast::op("+", vec![h1.clone(), h2]), g);
        let (u, e, p, h, t) = (self.fresh(), self.fresh(), self.fresh(), self.fresh(), self.fresh());
        let rest = inner(ast::var(&h), ast::var(&t), self);
        ast::unroll(
            ast::var(x),
            &u,
            ast::case(
                ast::var(&u),
                &e,
                Term::Const(0.0),
                &p,
                ast::pair_match(ast::var(&p), &h, &t, rest),
            ),
        )
    }

    /// A real-valued term over the real variables `vars`.
    fn expr(&mut self, vars: &[String], depth: u32) -> Term {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return if self.rng.gen_bool(0.7) {
                ast::var(&vars[self.rng.gen_range(0..vars.len())])
            } else {
                Term::Const(self.real())
            };
        }
        match self.rng.gen_range(0..6) {
            0 => {
                let y = self.fresh();
                let a = self.expr(vars, depth - 1);
                let mut inner = vars.to_vec();
                inner.push(y.clone());
                ast::let_in(&y, a, self.expr(&inner, depth - 1))
            }
            1 => {
                let (a, b) = (self.fresh(), self.fresh());
                let c = self.expr(vars, depth - 1);
                let (l, r) = (self.expr(vars, depth - 1), self.expr(vars, depth - 1));
                ast::case(Term::Sign(Rc::new(c)), &a, l, &b, r)
            }
            2 => {
                let symbols = ["sin", "exp", "log", "sqrt", "tanh", "neg"];
                let s = symbols[self.rng.gen_range(0..symbols.len())];
                ast::op(s, vec![self.expr(vars, depth - 1)])
            }
            _ => {
                let symbols = ["+", "-", "*", "/"];
                let s = symbols[self.rng.gen_range(0..symbols.len())];
                ast::op(s, vec![self.expr(vars, depth - 1), self.expr(vars, depth - 1)])
            }
        }
    }
}

/// Same value, or both undefined by the same primitive at the same arguments.
fn identical(a: &Outcome, b: &Outcome) -> bool {
    match (a, b) {
        (Outcome::Converged(x), Outcome::Converged(y)) => x == y,
        (Outcome::DomainError { op: o1, args: a1, .. }, Outcome::DomainError { op: o2, args: a2, .. }) => {
            o1 == o2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        (Outcome::FuelExhausted(_), Outcome::FuelExhausted(_)) => true,
        _ => false,
    }
}

fn beta(c: &Corpus) -> Outcomes {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(6),
        list: parse_type("mu a. unit + real * a").unwrap(),
        n: 0,
    };
    let machine = Machine::new(&c.ops, Backend::K1);
    let mut count = 0;
    let mut bottoms = 0;
    for i in 0..300 {
        let x = "x";
        let (v, body) = g.value_and_consumer(x);
        let reduct = subst_term(&body, x, &v);
        let redex = match i % 6 {
            0 => ast::app(ast::lam(x, body), v),
            1 => ast::let_in(x, v, body),
            2 => ast::case(Term::Inl(Rc::new(v)), x, body, "unused", Term::Const(0.0)),
            3 => ast::case(Term::Inr(Rc::new(v)), "unused", Term::Const(0.0), x, body),
            4 => ast::unroll(ast::roll(v, g.list.clone()), x, body),
            _ => {
                let y = g.fresh();
                let w = Term::Const(g.real());
                let reduct = subst_term(&reduct, &y, &w);
                let redex = ast::pair_match(ast::pair(v, w), x, &y, body);
                let (a, b) = (machine.eval(&Env::new(), &redex), machine.eval(&Env::new(), &reduct));
                let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
                if !identical(&a, &b) {
                    return Err(format!("{redex}: {a} vs {b}"));
                }
                count += 1;
                bottoms += a.is_bottom() as usize;
                continue;
            }
        };
        let a = machine.eval(&Env::new(), &redex).map_err(|e| e.to_string())?;
        let b = machine.eval(&Env::new(), &reduct).map_err(|e| e.to_string())?;
        if !identical(&a, &b) {
            return Err(format!("{redex}: {a} vs {b}"));
        }
        count += 1;
        bottoms += a.is_bottom() as usize;
    }
    for _ in 0..100 {
        let s = ["+", "-", "*", "/", "log", "sqrt", "exp"][g.rng.gen_range(0..7)];
        let args: Vec<f64> = (0..c.ops.arity(s).unwrap()).map(|_| g.real()).collect();
        let redex = ast::op(s, args.iter().map(|a| Term::Const(*a)).collect());
        let a = machine.eval(&Env::new(), &redex).map_err(|e| e.to_string())?;
        let ok = match apply_prim(&c.ops, s, &args) {
            Ok(y) => a == Outcome::Converged(Value::Real(y)),
            Err(_) => is_domain_error(&a),
        };
        if !ok {
            return Err(format!("{redex}: {a}"));
        }
        count += 1;
    }
    Ok(format!("{count} instances ({bottoms} undefined on both sides)"))
}

// ---- 7 ----

fn round_trip() -> Outcomes {
    let types = [
        "real",
        "unit",
        "real * real",
        "real + unit",
        "(real + real) * (unit + real)",
        "void + real * real",
        "mu a. unit + real * a",
        "mu t. real + t * t",
        "mu t. real * (mu l. unit + t * l)",
        "mu a. unit + (mu b. unit + real * b) * a",
        "(mu a. unit + real * a) * (real + mu t. real + t * t)",
        "mu a. unit + (real + unit) * a",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut count = 0;
    for t in types {
        let ty = parse_type(t).unwrap();
        for _ in 0..50 {
            let v = random_value(&ty, &mut rng, 4, (-3.0, 3.0)).map_err(|e| e.to_string())?;
            let f = flatten_value(&v, &ty).map_err(|e| e.to_string())?;
            let back = unflatten_value(&f).map_err(|e| e.to_string())?;
            if back != v || flatten_value(&back, &ty).map_err(|e| e.to_string())? != f {
                return Err(format!("{t}: {v} came back as {back}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} values over {} types", types.len()))
}

// ---- 8 ----

fn max_gap(a: &Tangent, b: &Tangent) -> f64 {
    let keys = |t: &Tangent| -> Vec<u32> {
        match t {
            Tangent::Scalar(_) => vec![1],
            Tangent::Sparse(m) => m.keys().copied().collect(),
        }
    };
    keys(a)
        .into_iter()
        .chain(keys(b))
        .map(|i| (a.coord(i) - b.coord(i)).abs())
        .fold(0.0, f64::max)
}

fn tangent_laws() -> Outcomes {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for trial in 0..2000 {
        let integer = trial % 2 == 0;
        let backend = if trial % 4 < 2 { Backend::KInf } else { Backend::K1 };
        let num = |rng: &mut ChaCha8Rng| -> f64 {
            if integer {
                rng.gen_range(-9..=9) as f64
            } else {
                rng.gen_range(-1.0..1.0)
            }
        };
        let tangent = |rng: &mut ChaCha8Rng| match backend {
            Backend::K1 => Tangent::Scalar(num(rng)),
            Backend::KInf => {
                let n = rng.gen_range(0..5);
                Tangent::sparse((0..n).map(|_| (rng.gen_range(1..8), num(rng))).collect::<Vec<_>>())
            }
        };
        let (a, b, c) = (tangent(&mut rng), tangent(&mut rng), tangent(&mut rng));
        let (s, t) = if integer {
            (rng.gen_range(-9..=9) as f64, rng.gen_range(-9..=9) as f64)
        } else {
            (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        let zero = tan_zero(backend);
        let laws = [
            (tan_add(&tan_add(&a, &b), &c), tan_add(&a, &tan_add(&b, &c))),
            (tan_add(&a, &b), tan_add(&b, &a)),
            (tan_add(&a, &zero), a.clone()),
            (tan_add(&a, &tan_scale(&a, -1.0)), zero.clone()),
            (tan_scale(&a, 1.0), a.clone()),
            (tan_scale(&a, s * t), tan_scale(&tan_scale(&a, t), s)),
            (
                tan_scale(&tan_add(&a, &b), s),
                tan_add(&tan_scale(&a, s), &tan_scale(&b, s)),
            ),
            (tan_scale(&a, s + t), tan_add(&tan_scale(&a, s), &tan_scale(&a, t))),
        ];
        for (i, (l, r)) in laws.iter().enumerate() {
            let gap = max_gap(l, r);
            let limit = if integer { 0.0 } else { 1e-15 };
            if gap > limit {
                return Err(format!("law {i} off by {gap:e} on {a}, {b}, {c}, {s}, {t}"));
            }
            worst = worst.max(gap);
        }
    }
    Ok(format!("2000 triples x 8 laws, max gap {worst:.1e}"))
}

// ---- 9 ----

/// Partial sums of the exponential series, stopped at the first term
/// below 1e-12 in magnitude.
fn exp_series(x: f64) -> f64 {
    let (mut sum, mut term, mut i) = (0.0, 1.0_f64, 0.0);
    while term.abs() >= 1e-12 {
        sum += term;
        i += 1.0;
        term *= x / i;
    }
    sum
}

fn taylor(c: &Corpus) -> Outcomes {
    let p = c.program("taylor_exp");
    let mut worst_val: f64 = 0.0;
    let mut worst_der: f64 = 0.0;
    for k in 0..20 {
        let x = -2.85 + 0.3 * k as f64;
        let pt = point(p, Value::Real(x));
        let v = match p.primal(&pt, DEFAULT_FUEL, &c.ops).unwrap() {
            Outcome::Converged(Value::Real(v)) => v,
            o => return Err(format!("taylor_exp {x}: {o}")),
        };
        let d = match p
            .dual(&pt, &[Tangent::Scalar(1.0)], Backend::K1, DEFAULT_FUEL, &c.ops)
            .unwrap()
        {
            Outcome::Converged(Value::Pair(a, b)) => match (&*a, &*b) {
                (Value::Real(_), Value::Tan(t)) => t.coord(1),
                _ => return Err("dual output is not a dual number".into()),
            },
            o => return Err(format!("D(taylor_exp) {x}: {o}")),
        };
        worst_val = worst_val.max(rel_err(v, exp_series(x)));
        worst_der = worst_der.max(rel_err(d, x.exp()));
    }
    if worst_val > 1e-7 || worst_der > 1e-5 {
        return Err(format!("value err {worst_val:e}, derivative err {worst_der:e}"));
    }
    Ok(format!(
        "20 points, value err {worst_val:.1e}, derivative err vs exp {worst_der:.1e}"
    ))
}

fn main() -> ExitCode {
    let c = Corpus::load();
    assert!(!c.files.is_empty());
    let fwd = summaries(&c, Mode::Fwd);
    let rev = summaries(&c, Mode::Rev);
    let results: Vec<(&str, Outcomes)> = vec![
        ("macro type preservation", macro_types(&c)),
        ("per-primitive soundness", primitives(&c)),
        ("forward correctness", fwd.clone().and_then(|f| forward(&f))),
        ("reverse correctness", rev.clone().and_then(|r| reverse(&c, &r))),
        ("partiality", fwd.and_then(|f| rev.and_then(|r| partiality(&c, &f, &r)))),
        ("beta soundness of the evaluator", beta(&c)),
        ("flatten/unflatten round trip", round_trip()),
        ("tangent vector-space laws", tangent_laws()),
        ("truncated Taylor exp", taylor(&c)),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1)
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
