//! Surface terms: the core constructs plus sugar, and their elaboration.

use std::collections::BTreeSet;
use std::rc::Rc;

use crate::ast::{self, fresh_name, Name, Term, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Less,
    Greater,
}

/// A term as written, before sugar is removed.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceTerm {
    Var(Name),
    Let(Name, Box<SurfaceTerm>, Box<SurfaceTerm>),
    /// `let (a, b) = t in s`
    LetPair(Name, Name, Box<SurfaceTerm>, Box<SurfaceTerm>),
    Const(f64),
    Op(String, Vec<SurfaceTerm>),
    Sign(Box<SurfaceTerm>),
    Inl(Box<SurfaceTerm>),
    Inr(Box<SurfaceTerm>),
    Case(Box<SurfaceTerm>, Name, Box<SurfaceTerm>, Name, Box<SurfaceTerm>),
    Unit,
    Pair(Box<SurfaceTerm>, Box<SurfaceTerm>),
    PairMatch(Box<SurfaceTerm>, Name, Name, Box<SurfaceTerm>),
    Lam(Name, Box<SurfaceTerm>),
    App(Box<SurfaceTerm>, Box<SurfaceTerm>),
    Roll(Box<SurfaceTerm>, Type),
    Unroll(Box<SurfaceTerm>, Name, Box<SurfaceTerm>),
    /// `unroll t`, shorthand for `case t of roll x -> x`
    UnrollShort(Box<SurfaceTerm>),
    VoidMatch(Box<SurfaceTerm>),
    Basis(u32),
    ZeroTan,
    AddTan(Box<SurfaceTerm>, Box<SurfaceTerm>),
    ScaleTan(Box<SurfaceTerm>, Box<SurfaceTerm>),
    Proj(u32, Box<SurfaceTerm>),
    /// `if c then t else e` on a real condition: `then` when `c < 0`.
    If(Box<SurfaceTerm>, Box<SurfaceTerm>, Box<SurfaceTerm>),
    /// `a < b`, `a > b`, and chains such as `-c < y < c`.
    Compare(Vec<SurfaceTerm>, Vec<Cmp>),
    /// `fix f : ty = fun x -> body`
    Fix {
        name: Name,
        ty: Option<Type>,
        param: Name,
        body: Box<SurfaceTerm>,
    },
    /// `iterate step from x = init`
    Iterate {
        step: Box<SurfaceTerm>,
        var: Name,
        init: Box<SurfaceTerm>,
    },
}

/// Hands out names that avoid every name of the term being elaborated.
struct Names {
    used: BTreeSet<Name>,
}

impl Names {
    fn fresh(&mut self, hint: &str) -> Name {
        let n = fresh_name(&self.used, hint);
        self.used.insert(n.clone());
        n
    }
}

fn collect_names(t: &SurfaceTerm, out: &mut BTreeSet<Name>) {
    use SurfaceTerm::*;
    let mut add = |n: &Name| {
        out.insert(n.clone());
    };
    match t {
        Var(x) => add(x),
        Let(x, _, _) | Lam(x, _) | Unroll(_, x, _) => add(x),
        LetPair(a, b, _, _) | PairMatch(_, a, b, _) | Case(_, a, _, b, _) => {
            add(a);
            add(b);
        }
        Fix { name, param, .. } => {
            add(name);
            add(param);
        }
        Iterate { var, .. } => add(var),
        _ => {}
    }
    for c in children(t) {
        collect_names(c, out);
    }
}

fn children(t: &SurfaceTerm) -> Vec<&SurfaceTerm> {
    use SurfaceTerm::*;
    match t {
        Var(_) | Const(_) | Unit | Basis(_) | ZeroTan => vec![],
        Op(_, args) | Compare(args, _) => args.iter().collect(),
        Sign(a) | Inl(a) | Inr(a) | Lam(_, a) | Roll(a, _) | UnrollShort(a) | VoidMatch(a) | Proj(_, a) => vec![a],
        Fix { body, .. } => vec![body],
        Let(_, a, b)
        | LetPair(_, _, a, b)
        | Pair(a, b)
        | PairMatch(a, _, _, b)
        | App(a, b)
        | Unroll(a, _, b)
        | AddTan(a, b)
        | ScaleTan(a, b) => vec![a, b],
        Iterate { step, init, .. } => vec![step, init],
        Case(a, _, b, _, c) | If(a, b, c) => vec![a, b, c],
    }
}

/// Removes all sugar, producing a core term.
///
/// * `if c then t else e` becomes `case sign c of inl _ -> t | inr _ -> e`.
/// * `a < b` becomes `sign (b - a)`: `inl` means false, `inr` true. Chains
///   short-circuit left to right.
/// * `fix f = fun x -> t` is encoded by self-application through the
///   recursive type `mu a. a -> (t1 -> t2)`.
/// * `iterate step from x = v` loops while `step` returns `inl`, and yields
///   the payload of the first `inr`.
///
/// Type annotations that sugar cannot know (the `fix` types, when omitted)
/// are left as holes in `roll` annotations and filled in by elaboration.
pub fn desugar(t: &SurfaceTerm) -> Term {
    let mut used = BTreeSet::new();
    collect_names(t, &mut used);
    let mut names = Names { used };
    go(t, &mut names)
}

fn go(t: &SurfaceTerm, n: &mut Names) -> Term {
    use SurfaceTerm as S;
    let r = |t: &SurfaceTerm, n: &mut Names| Rc::new(go(t, n));
    match t {
        S::Var(x) => Term::Var(x.clone()),
        S::Let(x, a, b) => Term::Let(x.clone(), r(a, n), r(b, n)),
        S::LetPair(a, b, s, body) => Term::PairMatch {
            scrutinee: r(s, n),
            fst: a.clone(),
            snd: b.clone(),
            body: r(body, n),
        },
        S::Const(c) => Term::Const(*c),
        S::Op(o, args) => Term::Op(o.clone(), args.iter().map(|a| go(a, n)).collect()),
        S::Sign(a) => Term::Sign(r(a, n)),
        S::Inl(a) => Term::Inl(r(a, n)),
        S::Inr(a) => Term::Inr(r(a, n)),
        S::Case(s, x, a, y, b) => Term::Case {
            scrutinee: r(s, n),
            left: x.clone(),
            left_body: r(a, n),
            right: y.clone(),
            right_body: r(b, n),
        },
        S::Unit => Term::Unit,
        S::Pair(a, b) => Term::Pair(r(a, n), r(b, n)),
        S::PairMatch(s, x, y, b) => Term::PairMatch {
            scrutinee: r(s, n),
            fst: x.clone(),
            snd: y.clone(),
            body: r(b, n),
        },
        S::Lam(x, b) => Term::Lam(x.clone(), r(b, n)),
        S::App(a, b) => Term::App(r(a, n), r(b, n)),
        S::Roll(a, ty) => Term::Roll(r(a, n), ty.clone()),
        S::Unroll(s, x, b) => Term::Unroll {
            scrutinee: r(s, n),
            var: x.clone(),
            body: r(b, n),
        },
        S::UnrollShort(s) => {
            let x = n.fresh("u");
            ast::unroll(go(s, n), &x, Term::Var(x.clone()))
        }
        S::VoidMatch(a) => Term::VoidMatch(r(a, n)),
        S::Basis(i) => Term::Basis(*i),
        S::ZeroTan => Term::ZeroTan,
        S::AddTan(a, b) => Term::AddTan(r(a, n), r(b, n)),
        S::ScaleTan(a, b) => Term::ScaleTan(r(a, n), r(b, n)),
        S::Proj(i, a) => Term::Proj(*i, r(a, n)),
        S::If(c, a, b) => ast::case(Term::Sign(r(c, n)), "_", go(a, n), "_", go(b, n)),
        S::Compare(operands, ops) => compare(operands, ops, n),
        S::Fix { name, ty, param, body } => {
            let body = go(body, n);
            fix(name, ty.as_ref(), param, body, n)
        }
        S::Iterate { step, var, init } => {
            let step = go(step, n);
            let init = go(init, n);
            let lp = n.fresh("loop");
            let next = n.fresh("next");
            let done = n.fresh("done");
            let body = ast::case(
                step,
                &next,
                ast::app(Term::Var(lp.clone()), Term::Var(next.clone())),
                &done,
                Term::Var(done.clone()),
            );
            ast::app(fix(&lp, None, var, body, n), init)
        }
    }
}

fn less(a: Term, b: Term) -> Term {
    Term::Sign(Rc::new(ast::op("-", vec![b, a])))
}

fn compare(operands: &[SurfaceTerm], ops: &[Cmp], n: &mut Names) -> Term {
    let oriented = |a: Term, b: Term, c: Cmp| match c {
        Cmp::Less => less(a, b),
        Cmp::Greater => less(b, a),
    };
    if ops.len() == 1 {
        return oriented(go(&operands[0], n), go(&operands[1], n), ops[0]);
    }
    // a < b < c ...: bind each operand once, left to right, short-circuiting.
    let first = n.fresh("cmp");
    let rest = chain(Term::Var(first.clone()), &operands[1..], ops, n, &oriented);
    ast::let_in(&first, go(&operands[0], n), rest)
}

fn chain(
    prev: Term,
    operands: &[SurfaceTerm],
    ops: &[Cmp],
    n: &mut Names,
    oriented: &dyn Fn(Term, Term, Cmp) -> Term,
) -> Term {
    let cur = n.fresh("cmp");
    let test = oriented(prev, Term::Var(cur.clone()), ops[0]);
    let body = if ops.len() == 1 {
        test
    } else {
        let rest = chain(Term::Var(cur.clone()), &operands[1..], &ops[1..], n, oriented);
        ast::case(test, "_", Term::Inl(Rc::new(Term::Unit)), "_", rest)
    };
    ast::let_in(&cur, go(&operands[0], n), body)
}

/// `fix f = fun x -> body` as
/// `(fun g -> g (roll g)) (fun r -> let f = fun y -> (unroll r) r y in fun x -> body)`
/// at `mu a. a -> (t1 -> t2)`.
fn fix(f: &str, ty: Option<&Type>, param: &str, body: Term, n: &mut Names) -> Term {
    let fun_ty = ty.cloned().unwrap_or_else(|| Type::arrow(Type::Hole, Type::Hole));
    let mut avoid = BTreeSet::new();
    fun_ty.all_names(&mut avoid);
    let alpha = fresh_name(&avoid, "a");
    let rec_ty = Type::mu(&alpha, Type::arrow(Type::Var(alpha.clone()), fun_ty));
    let g = n.fresh("g");
    let r = n.fresh("r");
    let s = n.fresh("s");
    let y = n.fresh("y");
    let self_apply = ast::lam(
        &g,
        ast::app(Term::Var(g.clone()), ast::roll(Term::Var(g.clone()), rec_ty)),
    );
    let unrolled = ast::unroll(
        Term::Var(r.clone()),
        &s,
        ast::app(Term::Var(s.clone()), Term::Var(r.clone())),
    );
    let step = ast::lam(
        &r,
        ast::let_in(
            f,
            ast::lam(&y, ast::app(unrolled, Term::Var(y.clone()))),
            ast::lam(param, body),
        ),
    );
    ast::app(self_apply, step)
}
