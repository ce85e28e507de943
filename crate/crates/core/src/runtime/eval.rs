//! An iterative CEK-style machine, so deep recursion in the evaluated
//! program never grows the Rust stack.

use std::rc::Rc;

use super::tangent::{tan_add, tan_basis, tan_proj, tan_scale, tan_zero, Backend, Tangent};
use super::{apply_prim, sign_sem, Closure, Env, Outcome, PrimError, RuntimeError, Value};
use crate::ast::{Name, Term};
use crate::ops::OpRegistry;
use crate::surface::pretty_term;

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Evaluation settings: the primitives, the tangent backend, and the step
/// budget.
#[derive(Clone, Copy, Debug)]
pub struct Machine<'a> {
    pub ops: &'a OpRegistry,
    pub backend: Backend,
    pub fuel: u64,
}

/// Evaluates `t` in `env`.
pub fn eval(env: &Env, t: &Term, backend: Backend, fuel: u64, ops: &OpRegistry) -> Result<Outcome, RuntimeError> {
    Machine { ops, backend, fuel }.eval(env, t)
}

/// Applies a function value to an argument.
pub fn apply(f: &Value, arg: Value, backend: Backend, fuel: u64, ops: &OpRegistry) -> Result<Outcome, RuntimeError> {
    Machine { ops, backend, fuel }.apply(f, arg)
}

enum Frame {
    Let(Name, Rc<Term>, Env),
    Op { node: Rc<Term>, done: Vec<f64>, env: Env },
    Sign(Rc<Term>),
    Inl,
    Inr,
    Roll,
    Case(Rc<Term>, Env),
    PairFst(Rc<Term>, Env),
    PairSnd(Value),
    PairMatch(Rc<Term>, Env),
    AppFun(Rc<Term>, Env),
    AppArg(Value),
    Unroll(Rc<Term>, Env),
    VoidMatch,
    AddFst(Rc<Term>, Env),
    AddSnd(Tangent),
    ScaleFst(Rc<Term>, Env),
    ScaleSnd(Tangent),
    Proj(u32),
}

enum Control {
    Eval(Rc<Term>, Env),
    Return(Value),
}

fn position(t: &Term) -> String {
    const MAX: usize = 80;
    let s = pretty_term(t);
    if s.chars().count() > MAX {
        let cut: String = s.chars().take(MAX).collect();
        format!("{cut}...")
    } else {
        s
    }
}

fn domain_error(e: PrimError, at: &Term) -> Outcome {
    Outcome::DomainError {
        op: e.op,
        args: e.args,
        position: position(at),
    }
}

fn stuck<T>(what: impl Into<String>) -> Result<T, RuntimeError> {
    Err(RuntimeError(what.into()))
}

impl Machine<'_> {
    pub fn new(ops: &OpRegistry, backend: Backend) -> Machine<'_> {
        Machine {
            ops,
            backend,
            fuel: DEFAULT_FUEL,
        }
    }

    pub fn with_fuel(self, fuel: u64) -> Self {
        Machine { fuel, ..self }
    }

    pub fn eval(&self, env: &Env, t: &Term) -> Result<Outcome, RuntimeError> {
        self.eval_traced(env, t).map(|(o, _)| o)
    }

    pub fn apply(&self, f: &Value, arg: Value) -> Result<Outcome, RuntimeError> {
        self.apply_traced(f, arg).map(|(o, _)| o)
    }

    /// Like [`Machine::eval`], also returning the outcome of every `sign`
    /// in evaluation order (`true` for positive).
    pub fn eval_traced(&self, env: &Env, t: &Term) -> Result<(Outcome, Vec<bool>), RuntimeError> {
        self.run(Control::Eval(Rc::new(t.clone()), env.clone()), Vec::new())
    }

    pub fn apply_traced(&self, f: &Value, arg: Value) -> Result<(Outcome, Vec<bool>), RuntimeError> {
        self.run(Control::Return(arg), vec![Frame::AppArg(f.clone())])
    }

    fn run(&self, mut control: Control, mut stack: Vec<Frame>) -> Result<(Outcome, Vec<bool>), RuntimeError> {
        let mut steps = 0u64;
        let mut trace = Vec::new();
        loop {
            if steps >= self.fuel {
                return Ok((Outcome::FuelExhausted(steps), trace));
            }
            steps += 1;
            control = match control {
                Control::Eval(t, env) => match self.enter(t, env, &mut stack)? {
                    Ok(c) => c,
                    Err(bottom) => return Ok((bottom, trace)),
                },
                Control::Return(v) => match stack.pop() {
                    None => return Ok((Outcome::Converged(v), trace)),
                    Some(frame) => match self.resume(frame, v, &mut stack, &mut trace)? {
                        Ok(c) => c,
                        Err(bottom) => return Ok((bottom, trace)),
                    },
                },
            };
        }
    }

    /// One step on a term to evaluate. The inner `Err` is a domain error.
    fn enter(&self, t: Rc<Term>, env: Env, stack: &mut Vec<Frame>) -> Result<Result<Control, Outcome>, RuntimeError> {
        use Control::{Eval, Return};
        let next = match &*t {
            Term::Var(x) => match env.lookup(x) {
                Some(v) => Return(v.clone()),
                None => return stuck(format!("unbound variable `{x}`")),
            },
            Term::Const(c) => {
                if !c.is_finite() {
                    return stuck(format!("non-finite literal {c}"));
                }
                Return(Value::Real(*c))
            }
            Term::Unit => Return(Value::Unit),
            Term::Lam(x, body) => Return(Value::Closure(Rc::new(Closure {
                env,
                param: x.clone(),
                body: body.clone(),
            }))),
            Term::Let(x, a, b) => {
                stack.push(Frame::Let(x.clone(), b.clone(), env.clone()));
                Eval(a.clone(), env)
            }
            Term::Op(o, args) => {
                if args.is_empty() {
                    match apply_prim(self.ops, o, &[]) {
                        Ok(y) => Return(Value::Real(y)),
                        Err(e) => return Ok(Err(domain_error(e, &t))),
                    }
                } else {
                    let first = Rc::new(args[0].clone());
                    stack.push(Frame::Op {
                        node: t.clone(),
                        done: Vec::with_capacity(args.len()),
                        env: env.clone(),
                    });
                    Eval(first, env)
                }
            }
            Term::Sign(a) => {
                stack.push(Frame::Sign(t.clone()));
                Eval(a.clone(), env)
            }
            Term::Inl(a) => {
                stack.push(Frame::Inl);
                Eval(a.clone(), env)
            }
            Term::Inr(a) => {
                stack.push(Frame::Inr);
                Eval(a.clone(), env)
            }
            Term::Roll(a, _) => {
                stack.push(Frame::Roll);
                Eval(a.clone(), env)
            }
            Term::Case { scrutinee, .. } => {
                stack.push(Frame::Case(t.clone(), env.clone()));
                Eval(scrutinee.clone(), env)
            }
            Term::Pair(a, b) => {
                stack.push(Frame::PairFst(b.clone(), env.clone()));
                Eval(a.clone(), env)
            }
            Term::PairMatch { scrutinee, .. } => {
                stack.push(Frame::PairMatch(t.clone(), env.clone()));
                Eval(scrutinee.clone(), env)
            }
            Term::App(f, a) => {
                stack.push(Frame::AppFun(a.clone(), env.clone()));
                Eval(f.clone(), env)
            }
            Term::Unroll { scrutinee, .. } => {
                stack.push(Frame::Unroll(t.clone(), env.clone()));
                Eval(scrutinee.clone(), env)
            }
            Term::VoidMatch(a) => {
                stack.push(Frame::VoidMatch);
                Eval(a.clone(), env)
            }
            Term::Basis(i) => {
                if *i == 0 {
                    return stuck("basis index 0");
                }
                Return(Value::Tan(tan_basis(*i, self.backend)))
            }
            Term::ZeroTan => Return(Value::Tan(tan_zero(self.backend))),
            Term::AddTan(a, b) => {
                stack.push(Frame::AddFst(b.clone(), env.clone()));
                Eval(a.clone(), env)
            }
            Term::ScaleTan(a, b) => {
                stack.push(Frame::ScaleFst(b.clone(), env.clone()));
                Eval(a.clone(), env)
            }
            Term::Proj(i, a) => {
                if *i == 0 {
                    return stuck("projection index 0");
                }
                stack.push(Frame::Proj(*i));
                Eval(a.clone(), env)
            }
        };
        Ok(Ok(next))
    }

    /// One step returning `v` to the innermost frame.
    fn resume(
        &self,
        frame: Frame,
        v: Value,
        stack: &mut Vec<Frame>,
        trace: &mut Vec<bool>,
    ) -> Result<Result<Control, Outcome>, RuntimeError> {
        use Control::{Eval, Return};
        let next = match frame {
            Frame::Let(x, body, env) => Eval(body, env.bind(&x, v)),
            Frame::Op { node, mut done, env } => {
                let Term::Op(o, args) = &*node else { unreachable!() };
                match v {
                    Value::Real(x) => done.push(x),
                    other => return stuck(format!("`{o}` applied to {other}")),
                }
                if done.len() == args.len() {
                    match apply_prim(self.ops, o, &done) {
                        Ok(y) => Return(Value::Real(y)),
                        Err(e) => return Ok(Err(domain_error(e, &node))),
                    }
                } else {
                    let next = Rc::new(args[done.len()].clone());
                    stack.push(Frame::Op {
                        node: node.clone(),
                        done,
                        env: env.clone(),
                    });
                    Eval(next, env)
                }
            }
            Frame::Sign(node) => match v {
                Value::Real(x) => match sign_sem(x) {
                    Ok(b) => {
                        trace.push(x > 0.0);
                        Return(b)
                    }
                    Err(e) => return Ok(Err(domain_error(e, &node))),
                },
                other => return stuck(format!("sign applied to {other}")),
            },
            Frame::Inl => Return(Value::inl(v)),
            Frame::Inr => Return(Value::inr(v)),
            Frame::Roll => Return(Value::roll(v)),
            Frame::Case(node, env) => {
                let Term::Case {
                    left,
                    left_body,
                    right,
                    right_body,
                    ..
                } = &*node
                else {
                    unreachable!()
                };
                match v {
                    Value::Inl(w) => Eval(left_body.clone(), env.bind(left, (*w).clone())),
                    Value::Inr(w) => Eval(right_body.clone(), env.bind(right, (*w).clone())),
                    other => return stuck(format!("case on {other}")),
                }
            }
            Frame::PairFst(b, env) => {
                stack.push(Frame::PairSnd(v));
                Eval(b, env)
            }
            Frame::PairSnd(a) => Return(Value::pair(a, v)),
            Frame::PairMatch(node, env) => {
                let Term::PairMatch { fst, snd, body, .. } = &*node else {
                    unreachable!()
                };
                match v {
                    Value::Pair(a, b) => Eval(body.clone(), env.bind(fst, (*a).clone()).bind(snd, (*b).clone())),
                    other => return stuck(format!("pair match on {other}")),
                }
            }
            Frame::AppFun(a, env) => {
                stack.push(Frame::AppArg(v));
                Eval(a, env)
            }
            Frame::AppArg(f) => match f {
                Value::Closure(c) => Eval(c.body.clone(), c.env.bind(&c.param, v)),
                other => return stuck(format!("application of {other}")),
            },
            Frame::Unroll(node, env) => {
                let Term::Unroll { var, body, .. } = &*node else {
                    unreachable!()
                };
                match v {
                    Value::Roll(w) => Eval(body.clone(), env.bind(var, (*w).clone())),
                    other => return stuck(format!("unroll of {other}")),
                }
            }
            Frame::VoidMatch => return stuck(format!("absurd on {v}")),
            Frame::AddFst(b, env) => match v {
                Value::Tan(a) => {
                    stack.push(Frame::AddSnd(a));
                    Eval(b, env)
                }
                other => return stuck(format!("<+> applied to {other}")),
            },
            Frame::AddSnd(a) => match v {
                Value::Tan(b) => {
                    let s = tan_add(&a, &b);
                    if !s.is_finite() {
                        return Ok(Err(Outcome::DomainError {
                            op: "<+>".into(),
                            args: Vec::new(),
                            position: format!("{a} <+> {b}"),
                        }));
                    }
                    Return(Value::Tan(s))
                }
                other => return stuck(format!("<+> applied to {other}")),
            },
            Frame::ScaleFst(b, env) => match v {
                Value::Tan(a) => {
                    stack.push(Frame::ScaleSnd(a));
                    Eval(b, env)
                }
                other => return stuck(format!("<*> applied to {other}")),
            },
            Frame::ScaleSnd(a) => match v {
                Value::Real(s) => {
                    let r = tan_scale(&a, s);
                    if !r.is_finite() {
                        return Ok(Err(Outcome::DomainError {
                            op: "<*>".into(),
                            args: vec![s],
                            position: format!("{a} <*> {s:?}"),
                        }));
                    }
                    Return(Value::Tan(r))
                }
                other => return stuck(format!("<*> by {other}")),
            },
            Frame::Proj(i) => match v {
                Value::Tan(a) => {
                    let coords = tan_proj(i, &a);
                    let mut it = coords.into_iter().map(Value::Real);
                    let first = it.next().expect("index at least 1");
                    Return(it.fold(first, Value::pair))
                }
                other => return stuck(format!("proj applied to {other}")),
            },
        };
        Ok(Ok(next))
    }
}
