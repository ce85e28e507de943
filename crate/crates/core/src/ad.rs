//! The dual-numbers AD macro `D` on types, terms and contexts.
//!
//! `D(real) = real * tangent` and `D` commutes with every other type former.
//! On terms `D` is structural except at constants, `sign` and primitive
//! operations, where it builds dual-number code using the partial
//! derivative terms of the [`OpRegistry`].

use std::collections::BTreeSet;
use std::rc::Rc;

use thiserror::Error;

use crate::ast::{self, fresh_name, Name, Term, Type};
use crate::ops::OpRegistry;
use crate::typecheck::Context;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AdError {
    #[error("type `{0}` already mentions tangent")]
    TangentInSource(String),
    #[error("no derivative is registered for operation `{0}`")]
    UnknownOp(String),
    #[error("target-only construct {0:?} cannot be differentiated")]
    TargetOnly(ast::TermKind),
}

pub fn ad_type(ty: &Type) -> Result<Type, AdError> {
    fn go(ty: &Type) -> Type {
        match ty {
            Type::Real => Type::prod(Type::Real, Type::Tangent),
            Type::Tangent | Type::Unit | Type::Void | Type::Var(_) | Type::Hole => ty.clone(),
            Type::Sum(a, b) => Type::sum(go(a), go(b)),
            Type::Prod(a, b) => Type::prod(go(a), go(b)),
            Type::Arrow(a, b) => Type::arrow(go(a), go(b)),
            Type::Mu(a, b) => Type::Mu(a.clone(), Box::new(go(b))),
        }
    }
    if ty.mentions_tangent() {
        return Err(AdError::TangentInSource(ty.to_string()));
    }
    Ok(go(ty))
}

pub fn ad_context(ctx: &Context) -> Result<Context, AdError> {
    Ok(Context {
        kinds: ctx.kinds.clone(),
        vars: ctx
            .vars
            .iter()
            .map(|(x, ty)| Ok((x.clone(), ad_type(ty)?)))
            .collect::<Result<_, AdError>>()?,
    })
}

/// Applies `D` to a source term.
pub fn ad_term(t: &Term, ops: &OpRegistry) -> Result<Term, AdError> {
    let mut m = Macro {
        ops,
        used: t.all_names(),
    };
    m.term(t)
}

struct Macro<'a> {
    ops: &'a OpRegistry,
    used: BTreeSet<Name>,
}

impl Macro<'_> {
    fn fresh(&mut self, hint: &str) -> Name {
        let n = fresh_name(&self.used, hint);
        self.used.insert(n.clone());
        n
    }

    fn rc(&mut self, t: &Term) -> Result<Rc<Term>, AdError> {
        self.term(t).map(Rc::new)
    }

    fn ty(&self, ty: &Type) -> Result<Type, AdError> {
        ad_type(ty)
    }

    fn term(&mut self, t: &Term) -> Result<Term, AdError> {
        Ok(match t {
            Term::Var(_) | Term::Unit => t.clone(),
            Term::Const(c) => ast::pair(Term::Const(*c), Term::ZeroTan),
            Term::Sign(a) => {
                let (p, d) = (self.fresh("a"), self.fresh("b"));
                let da = self.term(a)?;
                Term::Sign(Rc::new(ast::pair_match(da, &p, &d, Term::Var(p.clone()))))
            }
            Term::Op(o, args) => self.op(o, args)?,
            Term::Let(x, a, b) => Term::Let(x.clone(), self.rc(a)?, self.rc(b)?),
            Term::Inl(a) => Term::Inl(self.rc(a)?),
            Term::Inr(a) => Term::Inr(self.rc(a)?),
            Term::Case {
                scrutinee,
                left,
                left_body,
                right,
                right_body,
            } => Term::Case {
                scrutinee: self.rc(scrutinee)?,
                left: left.clone(),
                left_body: self.rc(left_body)?,
                right: right.clone(),
                right_body: self.rc(right_body)?,
            },
            Term::Pair(a, b) => Term::Pair(self.rc(a)?, self.rc(b)?),
            Term::PairMatch {
                scrutinee,
                fst,
                snd,
                body,
            } => Term::PairMatch {
                scrutinee: self.rc(scrutinee)?,
                fst: fst.clone(),
                snd: snd.clone(),
                body: self.rc(body)?,
            },
            Term::Lam(x, b) => Term::Lam(x.clone(), self.rc(b)?),
            Term::App(f, a) => Term::App(self.rc(f)?, self.rc(a)?),
            Term::Roll(a, ty) => Term::Roll(self.rc(a)?, self.ty(ty)?),
            Term::Unroll { scrutinee, var, body } => Term::Unroll {
                scrutinee: self.rc(scrutinee)?,
                var: var.clone(),
                body: self.rc(body)?,
            },
            Term::VoidMatch(a) => Term::VoidMatch(self.rc(a)?),
            Term::Basis(_) | Term::ZeroTan | Term::AddTan(..) | Term::ScaleTan(..) | Term::Proj(..) => {
                return Err(AdError::TargetOnly(t.kind()))
            }
        })
    }

    /// `case D t1 of (x1, x1') -> ... case D tn of (xn, xn') ->
    ///  let v = op(x1..xn) in let z1 = d1 op(x1..xn) in ... in
    ///  (v, x1' <*> z1 <+> ... <+> xn' <*> zn)`
    fn op(&mut self, o: &str, args: &[Term]) -> Result<Term, AdError> {
        let reg = self.ops.get(o).ok_or_else(|| AdError::UnknownOp(o.to_string()))?;
        let mut duals = Vec::with_capacity(args.len());
        for a in args {
            duals.push(self.term(a)?);
        }
        let prims: Vec<Name> = (0..args.len()).map(|_| self.fresh("x")).collect();
        let tans: Vec<Name> = (0..args.len()).map(|_| self.fresh("dx")).collect();
        let v = self.fresh("v");
        let zs: Vec<Name> = (0..args.len()).map(|_| self.fresh("z")).collect();

        let xs: Vec<Term> = prims.iter().map(|x| Term::Var(x.clone())).collect();
        let tangent = tans
            .iter()
            .zip(&zs)
            .map(|(dx, z)| Term::ScaleTan(Rc::new(Term::Var(dx.clone())), Rc::new(Term::Var(z.clone()))))
            .reduce(|acc, s| Term::AddTan(Rc::new(acc), Rc::new(s)))
            .unwrap_or(Term::ZeroTan);

        let mut body = ast::pair(Term::Var(v.clone()), tangent);
        for (j, z) in zs.iter().enumerate().rev() {
            body = ast::let_in(z, reg.partial_term(j, &xs), body);
        }
        body = ast::let_in(&v, Term::Op(o.to_string(), xs.clone()), body);
        for ((d, x), dx) in duals.into_iter().zip(&prims).zip(&tans).rev() {
            body = ast::pair_match(d, x, dx, body);
        }
        Ok(body)
    }
}
