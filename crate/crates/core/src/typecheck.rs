//! Kinding and typing for the source and target languages.
//!
//! Lambdas and injections carry no annotations, so checking is bidirectional
//! with first-order unification over monomorphic types: expected types flow
//! into lambdas, case branches and injections, and unknowns are solved as
//! they are met. Recursive types are iso-recursive, so `mu` types unify only
//! with `mu` types (up to renaming of the binder). Holes in `roll`
//! annotations become unknowns and are filled in by [`elaborate`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::ast::{fresh_name, Name, Term, Type};
use crate::ops::OpRegistry;
use crate::surface::{Definition, SourceFile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lang {
    Source,
    Target,
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lang::Source => "source",
            Lang::Target => "target",
        })
    }
}

/// Kinding context and term context.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Context {
    pub kinds: BTreeSet<Name>,
    pub vars: Vec<(Name, Type)>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn with(mut self, x: &str, ty: Type) -> Self {
        self.vars.push((x.to_string(), ty));
        self
    }

    pub fn lookup(&self, x: &str) -> Option<&Type> {
        self.vars.iter().rev().find(|(n, _)| n == x).map(|(_, t)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TypeErrorKind {
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("operation `{op}` takes {expected} arguments, {found} given")]
    Arity { op: String, expected: usize, found: usize },
    #[error("target-only construct `{0}` in a source program")]
    TargetOnly(String),
    #[error("type `{0}` is not well-formed")]
    IllKinded(String),
    #[error("`roll` annotation `{0}` is not a recursive type")]
    RollNotMu(String),
    #[error("cannot determine the type of {0}")]
    Ambiguous(String),
    #[error("index must be at least 1")]
    ZeroIndex,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    /// Path from the root of the checked term to the offending subterm.
    pub path: Vec<String>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "at {}: {}", self.path.join("."), self.kind)
        }
    }
}

/// True iff every type variable is bound by an enclosing `mu` or in `delta`.
/// Holes are never well-kinded.
pub fn kind_check(delta: &BTreeSet<Name>, ty: &Type) -> bool {
    fn go(ty: &Type, bound: &mut Vec<Name>, delta: &BTreeSet<Name>) -> bool {
        match ty {
            Type::Real | Type::Tangent | Type::Unit | Type::Void => true,
            Type::Hole => false,
            Type::Var(a) => bound.contains(a) || delta.contains(a),
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Arrow(a, b) => go(a, bound, delta) && go(b, bound, delta),
            Type::Mu(a, body) => {
                bound.push(a.clone());
                let ok = go(body, bound, delta);
                bound.pop();
                ok
            }
        }
    }
    go(ty, &mut Vec::new(), delta)
}

/// Positive (data) types: built from `real`, `unit`, `void`, sums, products
/// and `mu`, with no function types and no tangents.
pub fn is_positive_type(ty: &Type) -> bool {
    match ty {
        Type::Real | Type::Unit | Type::Void | Type::Var(_) => true,
        Type::Tangent | Type::Arrow(..) | Type::Hole => false,
        Type::Sum(a, b) | Type::Prod(a, b) => is_positive_type(a) && is_positive_type(b),
        Type::Mu(_, body) => is_positive_type(body),
    }
}

// ---- internal types with unknowns ----

#[derive(Clone, Debug, PartialEq)]
enum Ty {
    Real,
    Tangent,
    Unit,
    Void,
    Sum(Rc<Ty>, Rc<Ty>),
    Prod(Rc<Ty>, Rc<Ty>),
    Arrow(Rc<Ty>, Rc<Ty>),
    Var(Name),
    Mu(Name, Rc<Ty>),
    Meta(usize),
}

fn sum(a: Ty, b: Ty) -> Ty {
    Ty::Sum(Rc::new(a), Rc::new(b))
}
fn prod(a: Ty, b: Ty) -> Ty {
    Ty::Prod(Rc::new(a), Rc::new(b))
}
fn arrow(a: Ty, b: Ty) -> Ty {
    Ty::Arrow(Rc::new(a), Rc::new(b))
}

fn ty_names(t: &Ty, out: &mut BTreeSet<Name>) {
    match t {
        Ty::Var(a) => {
            out.insert(a.clone());
        }
        Ty::Mu(a, b) => {
            out.insert(a.clone());
            ty_names(b, out);
        }
        Ty::Sum(a, b) | Ty::Prod(a, b) | Ty::Arrow(a, b) => {
            ty_names(a, out);
            ty_names(b, out);
        }
        _ => {}
    }
}

/// Capture-avoiding substitution of a type variable in an internal type.
/// Metas are opaque here; callers substitute resolved types.
fn ty_subst(t: &Ty, alpha: &str, s: &Ty) -> Ty {
    match t {
        Ty::Var(a) if a == alpha => s.clone(),
        Ty::Real | Ty::Tangent | Ty::Unit | Ty::Void | Ty::Var(_) | Ty::Meta(_) => t.clone(),
        Ty::Sum(a, b) => sum(ty_subst(a, alpha, s), ty_subst(b, alpha, s)),
        Ty::Prod(a, b) => prod(ty_subst(a, alpha, s), ty_subst(b, alpha, s)),
        Ty::Arrow(a, b) => arrow(ty_subst(a, alpha, s), ty_subst(b, alpha, s)),
        Ty::Mu(beta, body) => {
            if beta == alpha {
                return t.clone();
            }
            let mut names = BTreeSet::new();
            ty_names(s, &mut names);
            if names.contains(beta) {
                ty_names(body, &mut names);
                names.insert(alpha.to_string());
                let b2 = fresh_name(&names, beta);
                let body2 = ty_subst(body, beta, &Ty::Var(b2.clone()));
                Ty::Mu(b2, Rc::new(ty_subst(&body2, alpha, s)))
            } else {
                Ty::Mu(beta.clone(), Rc::new(ty_subst(body, alpha, s)))
            }
        }
    }
}

struct Checker<'a> {
    ops: &'a OpRegistry,
    lang: Lang,
    metas: Vec<Option<Ty>>,
    path: Vec<String>,
    kinds: BTreeSet<Name>,
    rename_counter: usize,
    /// Annotation of each `roll` with holes, keyed by node address.
    rolls: BTreeMap<usize, Ty>,
}

type TResult<T> = Result<T, TypeError>;

impl<'a> Checker<'a> {
    fn new(ops: &'a OpRegistry, lang: Lang, kinds: BTreeSet<Name>) -> Self {
        Checker {
            ops,
            lang,
            metas: Vec::new(),
            path: Vec::new(),
            kinds,
            rename_counter: 0,
            rolls: BTreeMap::new(),
        }
    }

    fn fail<T>(&self, kind: TypeErrorKind) -> TResult<T> {
        Err(TypeError {
            kind,
            path: self.path.clone(),
        })
    }

    fn meta(&mut self) -> Ty {
        self.metas.push(None);
        Ty::Meta(self.metas.len() - 1)
    }

    fn import(&mut self, t: &Type) -> Ty {
        match t {
            Type::Real => Ty::Real,
            Type::Tangent => Ty::Tangent,
            Type::Unit => Ty::Unit,
            Type::Void => Ty::Void,
            Type::Hole => self.meta(),
            Type::Var(a) => Ty::Var(a.clone()),
            Type::Sum(a, b) => sum(self.import(a), self.import(b)),
            Type::Prod(a, b) => prod(self.import(a), self.import(b)),
            Type::Arrow(a, b) => arrow(self.import(a), self.import(b)),
            Type::Mu(a, b) => Ty::Mu(a.clone(), Rc::new(self.import(b))),
        }
    }

    /// Replaces solved metas, recursively.
    fn zonk(&self, t: &Ty) -> Ty {
        match t {
            Ty::Meta(m) => match &self.metas[*m] {
                Some(s) => self.zonk(s),
                None => t.clone(),
            },
            Ty::Sum(a, b) => sum(self.zonk(a), self.zonk(b)),
            Ty::Prod(a, b) => prod(self.zonk(a), self.zonk(b)),
            Ty::Arrow(a, b) => arrow(self.zonk(a), self.zonk(b)),
            Ty::Mu(a, b) => Ty::Mu(a.clone(), Rc::new(self.zonk(b))),
            _ => t.clone(),
        }
    }

    /// Head-normalizes: follows solved metas at the root only.
    fn shallow(&self, t: &Ty) -> Ty {
        let mut t = t.clone();
        while let Ty::Meta(m) = t {
            match &self.metas[m] {
                Some(s) => t = s.clone(),
                None => break,
            }
        }
        t
    }

    fn export(&self, t: &Ty) -> Option<Type> {
        Some(match self.shallow(t) {
            Ty::Real => Type::Real,
            Ty::Tangent => Type::Tangent,
            Ty::Unit => Type::Unit,
            Ty::Void => Type::Void,
            Ty::Var(a) => Type::Var(a),
            Ty::Sum(a, b) => Type::sum(self.export(&a)?, self.export(&b)?),
            Ty::Prod(a, b) => Type::prod(self.export(&a)?, self.export(&b)?),
            Ty::Arrow(a, b) => Type::arrow(self.export(&a)?, self.export(&b)?),
            Ty::Mu(a, b) => Type::Mu(a, Box::new(self.export(&b)?)),
            Ty::Meta(_) => return None,
        })
    }

    fn show(&self, t: &Ty) -> String {
        fn go(c: &Checker, t: &Ty) -> Type {
            match c.shallow(t) {
                Ty::Real => Type::Real,
                Ty::Tangent => Type::Tangent,
                Ty::Unit => Type::Unit,
                Ty::Void => Type::Void,
                Ty::Var(a) => Type::Var(a),
                Ty::Sum(a, b) => Type::sum(go(c, &a), go(c, &b)),
                Ty::Prod(a, b) => Type::prod(go(c, &a), go(c, &b)),
                Ty::Arrow(a, b) => Type::arrow(go(c, &a), go(c, &b)),
                Ty::Mu(a, b) => Type::Mu(a, Box::new(go(c, &b))),
                Ty::Meta(_) => Type::Hole,
            }
        }
        go(self, t).to_string()
    }

    fn occurs(&self, m: usize, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Meta(n) => n == m,
            Ty::Sum(a, b) | Ty::Prod(a, b) | Ty::Arrow(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
            Ty::Mu(_, b) => self.occurs(m, &b),
            _ => false,
        }
    }

    fn unify(&mut self, expected: &Ty, found: &Ty) -> TResult<()> {
        if self.unify_inner(expected, found) {
            Ok(())
        } else {
            self.fail(TypeErrorKind::Mismatch {
                expected: self.show(expected),
                found: self.show(found),
            })
        }
    }

    fn unify_inner(&mut self, a: &Ty, b: &Ty) -> bool {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (&a, &b) {
            (Ty::Meta(m), Ty::Meta(n)) if m == n => true,
            (Ty::Meta(m), t) | (t, Ty::Meta(m)) => {
                if self.occurs(*m, t) {
                    return false;
                }
                self.metas[*m] = Some(t.clone());
                true
            }
            (Ty::Real, Ty::Real) | (Ty::Tangent, Ty::Tangent) | (Ty::Unit, Ty::Unit) | (Ty::Void, Ty::Void) => true,
            (Ty::Var(x), Ty::Var(y)) => x == y,
            (Ty::Sum(a1, a2), Ty::Sum(b1, b2))
            | (Ty::Prod(a1, a2), Ty::Prod(b1, b2))
            | (Ty::Arrow(a1, a2), Ty::Arrow(b1, b2)) => self.unify_inner(a1, b1) && self.unify_inner(a2, b2),
            (Ty::Mu(x, bx), Ty::Mu(y, by)) => {
                if x == y {
                    return self.unify_inner(bx, by);
                }
                // Rename both binders to a name neither side uses.
                let (zx, zy) = (self.zonk(bx), self.zonk(by));
                let mut names = BTreeSet::new();
                ty_names(&zx, &mut names);
                ty_names(&zy, &mut names);
                names.insert(x.clone());
                names.insert(y.clone());
                self.rename_counter += 1;
                let fresh = fresh_name(&names, &format!("{x}{}", self.rename_counter));
                let v = Ty::Var(fresh);
                self.unify_inner(&ty_subst(&zx, x, &v), &ty_subst(&zy, y, &v))
            }
            _ => false,
        }
    }

    fn well_formed(&self, t: &Type) -> TResult<()> {
        if self.lang == Lang::Source && t.mentions_tangent() {
            return self.fail(TypeErrorKind::TargetOnly(format!("tangent in type {t}")));
        }
        let mut probe = t.clone();
        // Holes are permitted in annotations; check the rest.
        fill_holes(&mut probe);
        if !kind_check(&self.kinds, &probe) {
            return self.fail(TypeErrorKind::IllKinded(t.to_string()));
        }
        Ok(())
    }

    fn target_only(&self, what: &str) -> TResult<()> {
        if self.lang == Lang::Source {
            self.fail(TypeErrorKind::TargetOnly(what.to_string()))
        } else {
            Ok(())
        }
    }

    fn scoped<T>(&mut self, step: &str, f: impl FnOnce(&mut Self) -> TResult<T>) -> TResult<T> {
        self.path.push(step.to_string());
        let r = f(self);
        if r.is_ok() {
            self.path.pop();
        }
        r
    }

    fn check(&mut self, env: &mut Vec<(Name, Ty)>, t: &Term, expected: &Ty) -> TResult<()> {
        let exp = self.shallow(expected);
        match (t, &exp) {
            (Term::Lam(x, body), Ty::Arrow(a, b)) => {
                env.push((x.clone(), (**a).clone()));
                let r = self.scoped("fun", |c| c.check(env, body, b));
                env.pop();
                r
            }
            (Term::Inl(a), Ty::Sum(l, _)) => self.scoped("inl", |c| c.check(env, a, l)),
            (Term::Inr(a), Ty::Sum(_, r)) => self.scoped("inr", |c| c.check(env, a, r)),
            (Term::Pair(a, b), Ty::Prod(l, r)) => {
                self.scoped("pair.0", |c| c.check(env, a, l))?;
                self.scoped("pair.1", |c| c.check(env, b, r))
            }
            (Term::Let(x, a, b), _) => {
                let ta = self.scoped("let.bound", |c| c.infer(env, a))?;
                env.push((x.clone(), ta));
                let r = self.scoped("let.body", |c| c.check(env, b, &exp));
                env.pop();
                r
            }
            (
                Term::Case {
                    scrutinee,
                    left,
                    left_body,
                    right,
                    right_body,
                },
                _,
            ) => {
                let (l, r) = self.sum_parts(env, scrutinee)?;
                env.push((left.clone(), l));
                let res = self.scoped("case.inl", |c| c.check(env, left_body, &exp));
                env.pop();
                res?;
                env.push((right.clone(), r));
                let res = self.scoped("case.inr", |c| c.check(env, right_body, &exp));
                env.pop();
                res
            }
            (
                Term::PairMatch {
                    scrutinee,
                    fst,
                    snd,
                    body,
                },
                _,
            ) => {
                let (l, r) = self.prod_parts(env, scrutinee)?;
                env.push((fst.clone(), l));
                env.push((snd.clone(), r));
                let res = self.scoped("match.body", |c| c.check(env, body, &exp));
                env.pop();
                env.pop();
                res
            }
            (Term::Unroll { scrutinee, var, body }, _) => {
                let unfolded = self.unroll_type(env, scrutinee)?;
                env.push((var.clone(), unfolded));
                let res = self.scoped("unroll.body", |c| c.check(env, body, &exp));
                env.pop();
                res
            }
            (Term::App(f, a), _) => self.app(env, f, a, &exp),
            (Term::Roll(a, ann), _) if ann.has_holes() => self.roll(env, t, a, ann, Some(&exp)).map(|_| ()),
            (Term::VoidMatch(a), _) => {
                self.scoped("absurd", |c| c.check(env, a, &Ty::Void))?;
                Ok(())
            }
            _ => {
                let found = self.infer(env, t)?;
                self.unify(&exp, &found)
            }
        }
    }

    /// `roll`, whose annotation may be completed from the expected type.
    fn roll(
        &mut self,
        env: &mut Vec<(Name, Ty)>,
        t: &Term,
        a: &Term,
        ann: &Type,
        expected: Option<&Ty>,
    ) -> TResult<Ty> {
        self.well_formed(ann)?;
        let mu = self.import(ann);
        if let Some(e) = expected {
            self.unify(e, &mu)?;
        }
        if ann.has_holes() {
            self.rolls.insert(t as *const Term as usize, mu.clone());
        }
        let (binder, body) = match self.shallow(&mu) {
            Ty::Mu(b, body) => (b, body),
            _ => return self.fail(TypeErrorKind::RollNotMu(ann.to_string())),
        };
        let unfolded = ty_subst(&body, &binder, &self.shallow(&mu));
        self.scoped("roll", |c| c.check(env, a, &unfolded))?;
        Ok(mu)
    }

    /// Applications are checked function first when the function is a
    /// variable or the argument a lambda, so known domains flow into
    /// arguments; otherwise argument first, so known argument types flow
    /// into the function (as in `(fix f = ...) v`). In both orders the
    /// expected result type is unified before the remaining part is checked.
    fn app(&mut self, env: &mut Vec<(Name, Ty)>, f: &Term, a: &Term, expected: &Ty) -> TResult<()> {
        if matches!(f, Term::Var(_)) || matches!(a, Term::Lam(..)) {
            let tf = self.scoped("app.fun", |c| c.infer(env, f))?;
            let (dom, cod) = match self.shallow(&tf) {
                Ty::Arrow(d, c) => ((*d).clone(), (*c).clone()),
                other => {
                    let (d, c) = (self.meta(), self.meta());
                    let shown = self.show(&other);
                    if !self.unify_inner(&arrow(d.clone(), c.clone()), &other) {
                        return self.scoped("app.fun", |ch| {
                            ch.fail(TypeErrorKind::Mismatch {
                                expected: "a function".into(),
                                found: shown,
                            })
                        });
                    }
                    (d, c)
                }
            };
            self.unify(expected, &cod)?;
            self.scoped("app.arg", |c| c.check(env, a, &dom))
        } else {
            let ta = self.scoped("app.arg", |c| c.infer(env, a))?;
            self.scoped("app.fun", |c| c.check(env, f, &arrow(ta, expected.clone())))
        }
    }

    fn sum_parts(&mut self, env: &mut Vec<(Name, Ty)>, s: &Term) -> TResult<(Ty, Ty)> {
        let (l, r) = (self.meta(), self.meta());
        self.scoped("case.scrutinee", |c| c.check(env, s, &sum(l.clone(), r.clone())))?;
        Ok((l, r))
    }

    fn prod_parts(&mut self, env: &mut Vec<(Name, Ty)>, s: &Term) -> TResult<(Ty, Ty)> {
        let (l, r) = (self.meta(), self.meta());
        self.scoped("match.scrutinee", |c| c.check(env, s, &prod(l.clone(), r.clone())))?;
        Ok((l, r))
    }

    fn unroll_type(&mut self, env: &mut Vec<(Name, Ty)>, s: &Term) -> TResult<Ty> {
        let ts = self.scoped("unroll.scrutinee", |c| c.infer(env, s))?;
        match self.zonk(&ts) {
            Ty::Mu(a, body) => {
                let mu = Ty::Mu(a.clone(), body.clone());
                Ok(ty_subst(&body, &a, &mu))
            }
            Ty::Meta(_) => self.scoped("unroll.scrutinee", |c| {
                c.fail(TypeErrorKind::Ambiguous(format!(
                    "the unrolled term `{s}` (annotate the enclosing `fix`)"
                )))
            }),
            other => {
                let found = self.show(&other);
                self.scoped("unroll.scrutinee", |c| {
                    c.fail(TypeErrorKind::Mismatch {
                        expected: "a recursive type".into(),
                        found,
                    })
                })
            }
        }
    }

    fn infer(&mut self, env: &mut Vec<(Name, Ty)>, t: &Term) -> TResult<Ty> {
        match t {
            Term::Var(x) => match env.iter().rev().find(|(n, _)| n == x) {
                Some((_, ty)) => Ok(ty.clone()),
                None => self.fail(TypeErrorKind::Unbound(x.clone())),
            },
            Term::Const(_) => Ok(Ty::Real),
            Term::Op(o, args) => {
                let arity = match self.ops.arity(o) {
                    Some(n) => n,
                    None => return self.fail(TypeErrorKind::UnknownOp(o.clone())),
                };
                if arity != args.len() {
                    return self.fail(TypeErrorKind::Arity {
                        op: o.clone(),
                        expected: arity,
                        found: args.len(),
                    });
                }
                for (i, a) in args.iter().enumerate() {
                    self.scoped(&format!("{o}.{i}"), |c| c.check(env, a, &Ty::Real))?;
                }
                Ok(Ty::Real)
            }
            Term::Sign(a) => {
                self.scoped("sign", |c| c.check(env, a, &Ty::Real))?;
                Ok(sum(Ty::Unit, Ty::Unit))
            }
            Term::Inl(a) => {
                let ta = self.scoped("inl", |c| c.infer(env, a))?;
                Ok(sum(ta, self.meta()))
            }
            Term::Inr(a) => {
                let ta = self.scoped("inr", |c| c.infer(env, a))?;
                Ok(sum(self.meta(), ta))
            }
            Term::Unit => Ok(Ty::Unit),
            Term::Pair(a, b) => {
                let ta = self.scoped("pair.0", |c| c.infer(env, a))?;
                let tb = self.scoped("pair.1", |c| c.infer(env, b))?;
                Ok(prod(ta, tb))
            }
            Term::Lam(x, body) => {
                let a = self.meta();
                env.push((x.clone(), a.clone()));
                let r = self.scoped("fun", |c| c.infer(env, body));
                env.pop();
                Ok(arrow(a, r?))
            }
            Term::App(..) => {
                let m = self.meta();
                self.check(env, t, &m)?;
                Ok(m)
            }
            Term::Roll(a, ann) => self.roll(env, t, a, ann, None),
            Term::Let(..) | Term::Case { .. } | Term::PairMatch { .. } | Term::Unroll { .. } | Term::VoidMatch(_) => {
                let m = self.meta();
                self.check(env, t, &m)?;
                Ok(m)
            }
            Term::Basis(i) => {
                self.target_only("basis")?;
                if *i == 0 {
                    return self.fail(TypeErrorKind::ZeroIndex);
                }
                Ok(Ty::Tangent)
            }
            Term::ZeroTan => {
                self.target_only("0t")?;
                Ok(Ty::Tangent)
            }
            Term::AddTan(a, b) => {
                self.target_only("<+>")?;
                self.scoped("add.0", |c| c.check(env, a, &Ty::Tangent))?;
                self.scoped("add.1", |c| c.check(env, b, &Ty::Tangent))?;
                Ok(Ty::Tangent)
            }
            Term::ScaleTan(a, b) => {
                self.target_only("<*>")?;
                self.scoped("scale.0", |c| c.check(env, a, &Ty::Tangent))?;
                self.scoped("scale.1", |c| c.check(env, b, &Ty::Real))?;
                Ok(Ty::Tangent)
            }
            Term::Proj(i, a) => {
                self.target_only("proj")?;
                if *i == 0 {
                    return self.fail(TypeErrorKind::ZeroIndex);
                }
                self.scoped("proj", |c| c.check(env, a, &Ty::Tangent))?;
                Ok(self.import(&Type::real_power(*i)))
            }
        }
    }

    fn context_env(&mut self, ctx: &Context) -> TResult<Vec<(Name, Ty)>> {
        let mut env = Vec::new();
        for (x, ty) in &ctx.vars {
            self.scoped(&format!("context.{x}"), |c| {
                c.well_formed(ty)?;
                if ty.has_holes() {
                    return c.fail(TypeErrorKind::IllKinded(ty.to_string()));
                }
                Ok(())
            })?;
            env.push((x.clone(), self.import(ty)));
        }
        Ok(env)
    }

    /// Rewrites `roll` annotations with their solved holes.
    fn fill(&self, t: &Term) -> TResult<Term> {
        let r = |s: &Rc<Term>| self.fill(s).map(Rc::new);
        Ok(match t {
            Term::Roll(a, ann) if ann.has_holes() => {
                let solved = self.rolls.get(&(t as *const Term as usize));
                let ty = match solved.and_then(|s| self.export(s)) {
                    Some(ty) => ty,
                    None => {
                        return self.fail(TypeErrorKind::Ambiguous(format!("the annotation of `{t}`")));
                    }
                };
                Term::Roll(r(a)?, ty)
            }
            Term::Var(_) | Term::Const(_) | Term::Unit | Term::Basis(_) | Term::ZeroTan => t.clone(),
            Term::Op(o, args) => Term::Op(o.clone(), args.iter().map(|a| self.fill(a)).collect::<TResult<_>>()?),
            Term::Sign(a) => Term::Sign(r(a)?),
            Term::Inl(a) => Term::Inl(r(a)?),
            Term::Inr(a) => Term::Inr(r(a)?),
            Term::Roll(a, ann) => Term::Roll(r(a)?, ann.clone()),
            Term::VoidMatch(a) => Term::VoidMatch(r(a)?),
            Term::Proj(i, a) => Term::Proj(*i, r(a)?),
            Term::Lam(x, a) => Term::Lam(x.clone(), r(a)?),
            Term::Let(x, a, b) => Term::Let(x.clone(), r(a)?, r(b)?),
            Term::Pair(a, b) => Term::Pair(r(a)?, r(b)?),
            Term::App(a, b) => Term::App(r(a)?, r(b)?),
            Term::AddTan(a, b) => Term::AddTan(r(a)?, r(b)?),
            Term::ScaleTan(a, b) => Term::ScaleTan(r(a)?, r(b)?),
            Term::Case {
                scrutinee,
                left,
                left_body,
                right,
                right_body,
            } => Term::Case {
                scrutinee: r(scrutinee)?,
                left: left.clone(),
                left_body: r(left_body)?,
                right: right.clone(),
                right_body: r(right_body)?,
            },
            Term::PairMatch {
                scrutinee,
                fst,
                snd,
                body,
            } => Term::PairMatch {
                scrutinee: r(scrutinee)?,
                fst: fst.clone(),
                snd: snd.clone(),
                body: r(body)?,
            },
            Term::Unroll { scrutinee, var, body } => Term::Unroll {
                scrutinee: r(scrutinee)?,
                var: var.clone(),
                body: r(body)?,
            },
        })
    }
}

fn fill_holes(t: &mut Type) {
    match t {
        Type::Hole => *t = Type::Unit,
        Type::Sum(a, b) | Type::Prod(a, b) | Type::Arrow(a, b) => {
            fill_holes(a);
            fill_holes(b);
        }
        Type::Mu(_, b) => fill_holes(b),
        _ => {}
    }
}

fn run<'o, T>(
    ctx: &Context,
    lang: Lang,
    ops: &'o OpRegistry,
    f: impl FnOnce(&mut Checker<'o>, &mut Vec<(Name, Ty)>) -> TResult<T>,
) -> TResult<(T, Checker<'o>)> {
    let mut c = Checker::new(ops, lang, ctx.kinds.clone());
    let mut env = c.context_env(ctx)?;
    let out = f(&mut c, &mut env)?;
    Ok((out, c))
}

fn source_check(t: &Term, lang: Lang) -> TResult<()> {
    if lang == Lang::Source {
        let mut bad = None;
        t.visit(&mut |s| {
            if bad.is_none() && s.kind().is_target_only() {
                bad = Some(format!("{:?}", s.kind()));
            }
        });
        if let Some(k) = bad {
            return Err(TypeError {
                kind: TypeErrorKind::TargetOnly(k),
                path: Vec::new(),
            });
        }
    }
    Ok(())
}

/// Infers the type of `t`. Fails if the type is not fully determined.
pub fn typecheck(ctx: &Context, t: &Term, lang: Lang, ops: &OpRegistry) -> Result<Type, TypeError> {
    elaborate(ctx, t, None, lang, ops).map(|(_, ty)| ty)
}

/// Checks `t` against `ty`.
pub fn check_against(ctx: &Context, t: &Term, ty: &Type, lang: Lang, ops: &OpRegistry) -> Result<(), TypeError> {
    elaborate(ctx, t, Some(ty), lang, ops).map(|_| ())
}

/// Checks `t` (against `expected`, if given) and returns it with every
/// hole in its `roll` annotations filled, together with its type.
pub fn elaborate(
    ctx: &Context,
    t: &Term,
    expected: Option<&Type>,
    lang: Lang,
    ops: &OpRegistry,
) -> Result<(Term, Type), TypeError> {
    source_check(t, lang)?;
    let ((), c) = run(ctx, lang, ops, |c, env| {
        let ty = match expected {
            Some(ty) => {
                c.scoped("type", |c| {
                    c.well_formed(ty)?;
                    if ty.has_holes() {
                        return c.fail(TypeErrorKind::IllKinded(ty.to_string()));
                    }
                    Ok(())
                })?;
                let ty = c.import(ty);
                c.check(env, t, &ty)?;
                ty
            }
            None => c.infer(env, t)?,
        };
        c.rolls.insert(usize::MAX, ty);
        Ok(())
    })?;
    let result = c.rolls[&usize::MAX].clone();
    let ty = match c.export(&result) {
        Some(ty) => ty,
        None => return c.fail(TypeErrorKind::Ambiguous(format!("`{t}`"))),
    };
    let filled = c.fill(t)?;
    Ok((filled, ty))
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("in definition `{name}` (line {line}): {error}")]
pub struct DefinitionError {
    pub name: Name,
    pub line: usize,
    pub error: TypeError,
}

/// Checks every definition of a file against its declared type, in order,
/// with earlier definitions in scope. Returns the file with `roll`
/// annotations filled in.
pub fn check_file(file: &SourceFile, lang: Lang, ops: &OpRegistry) -> Result<SourceFile, DefinitionError> {
    let mut ctx = Context::new();
    let mut out = SourceFile::default();
    for d in &file.defs {
        let (term, ty) = elaborate(&ctx, &d.term, Some(&d.ty), lang, ops).map_err(|error| DefinitionError {
            name: d.name.clone(),
            line: d.line,
            error,
        })?;
        ctx.vars.push((d.name.clone(), ty.clone()));
        out.defs.push(Definition {
            name: d.name.clone(),
            ty,
            term,
            line: d.line,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse, parse_term, parse_type};

    fn reg() -> OpRegistry {
        OpRegistry::standard()
    }

    fn ty(s: &str) -> Type {
        parse_type(s).unwrap()
    }

    fn infer(s: &str) -> Result<Type, TypeError> {
        typecheck(&Context::new(), &parse_term(s, &reg()).unwrap(), Lang::Source, &reg())
    }

    fn check(s: &str, t: &str) -> Result<(), TypeError> {
        check_against(
            &Context::new(),
            &parse_term(s, &reg()).unwrap(),
            &ty(t),
            Lang::Source,
            &reg(),
        )
    }

    #[test]
    fn kinding() {
        let none = BTreeSet::new();
        assert!(kind_check(&none, &ty("mu a. unit + real * a")));
        assert!(!kind_check(&none, &Type::var("a")));
        assert!(kind_check(&BTreeSet::from(["a".to_string()]), &Type::var("a")));
        assert!(!kind_check(&none, &Type::Hole));
    }

    #[test]
    fn positive_types() {
        assert!(is_positive_type(&ty("mu a. unit + real * a")));
        assert!(!is_positive_type(&ty("real -> real")));
        assert!(!is_positive_type(&Type::Tangent));
    }

    #[test]
    fn basic_inference() {
        assert_eq!(infer("1.0 + 2.0").unwrap(), Type::Real);
        assert_eq!(infer("(fun x -> x * x) 3.0").unwrap(), Type::Real);
        assert_eq!(infer("sign 1.0").unwrap(), Type::bool());
        assert_eq!(infer("fun x -> exp x").unwrap(), ty("real -> real"));
        assert_eq!(infer("(1.0, ())").unwrap(), ty("real * unit"));
    }

    #[test]
    fn unannotated_lambdas_need_context() {
        let e = infer("fun x -> x").unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::Ambiguous(_)));
        assert!(check("fun x -> x", "unit -> unit").is_ok());
        assert!(check("inl 1.0", "real + unit").is_ok());
    }

    #[test]
    fn mismatches_report_paths() {
        let e = infer("let f = fun x -> x + 1.0 in f ()").unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::Mismatch { .. }));
        assert_eq!(e.path, vec!["let.body".to_string(), "app.arg".to_string()]);
        let e = infer("case sign 1.0 of inl a -> 1.0 | inr b -> ()").unwrap_err();
        assert_eq!(e.path, vec!["case.inr".to_string()]);
        assert!(matches!(infer("z").unwrap_err().kind, TypeErrorKind::Unbound(_)));
    }

    #[test]
    fn ops_are_checked() {
        let e = typecheck(&Context::new(), &Term::Op("exp".into(), vec![]), Lang::Source, &reg()).unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::Arity { .. }));
        let e = typecheck(&Context::new(), &Term::Op("nope".into(), vec![]), Lang::Source, &reg()).unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::UnknownOp(_)));
    }

    #[test]
    fn target_constructs_only_in_target() {
        let t = parse_term("proj 2 (basis 1 <+> basis 2 <*> 3.0)", &reg()).unwrap();
        let e = typecheck(&Context::new(), &t, Lang::Source, &reg()).unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::TargetOnly(_)));
        assert_eq!(
            typecheck(&Context::new(), &t, Lang::Target, &reg()).unwrap(),
            ty("real * real")
        );
        let ctx = Context::new().with("v", Type::Tangent);
        assert!(typecheck(&ctx, &Term::Var("v".into()), Lang::Source, &reg()).is_err());
    }

    #[test]
    fn recursive_types_are_iso() {
        let list = "mu a. unit + real * a";
        assert!(check(&format!("roll[{list}] (inl ())"), list).is_ok());
        assert!(check("inl ()", list).is_err());
        // alpha-renamed binders unify
        assert!(check(&format!("roll[{list}] (inl ())"), "mu b. unit + real * b").is_ok());
        let head = "fun l -> case l of roll u -> case u of inl e -> 0.0 | inr p -> (case p of (h, t) -> h)".to_string();
        assert!(check(&head, &format!("({list}) -> real")).is_ok());
    }

    #[test]
    fn fix_holes_are_filled() {
        let t = parse_term("fix f = fun n -> if n then 0.0 else f (n - 1.0)", &reg()).unwrap();
        let (filled, ty) = elaborate(
            &Context::new(),
            &t,
            Some(&Type::arrow(Type::Real, Type::Real)),
            Lang::Source,
            &reg(),
        )
        .unwrap();
        assert_eq!(ty, Type::arrow(Type::Real, Type::Real));
        let mut holes = false;
        filled.visit(&mut |s| {
            if let Term::Roll(_, a) = s {
                holes |= a.has_holes();
            }
        });
        assert!(!holes, "{filled}");
        // the filled term checks again without unknowns
        assert!(check_against(&Context::new(), &filled, &ty, Lang::Source, &reg()).is_ok());
    }

    #[test]
    fn known_types_reach_unrolls_inside_fix() {
        let list = "mu a. unit + real * a";
        let sum = "fix go = fun l -> case unroll l of inl e -> 0.0 | inr p -> (case p of (h, t) -> h + go t)";
        assert!(check(sum, &format!("({list}) -> real")).is_ok());
        let applied = format!("fun l -> ({sum}) l");
        assert!(check(&applied, &format!("({list}) -> real")).is_ok());
        let e = infer(sum).unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::Ambiguous(_)));
    }

    #[test]
    fn roll_annotations_from_the_expected_type() {
        let list = "mu a. unit + real * a";
        let two = "roll[_] (inr (1.0, roll[_] (inr (2.0, roll[_] (inl ())))))";
        assert!(check(two, list).is_ok());
        let (t, _) = elaborate(
            &Context::new(),
            &parse_term(two, &reg()).unwrap(),
            Some(&ty(list)),
            Lang::Source,
            &reg(),
        )
        .unwrap();
        t.visit(&mut |s| {
            if let Term::Roll(_, a) = s {
                assert_eq!(a, &ty(list));
            }
        });
        assert!(check("roll[_] (inl ())", "real").is_err());
    }

    #[test]
    fn files_check_in_order() {
        let src = "
            def sq : real -> real = fun x -> x * x ;;
            def main : real = sq 3.0 ;;
        ";
        let f = parse(src, &reg()).unwrap();
        assert!(check_file(&f, Lang::Source, &reg()).is_ok());
        let bad = parse("def main : real = () ;;", &reg()).unwrap();
        let e = check_file(&bad, Lang::Source, &reg()).unwrap_err();
        assert_eq!(e.name, "main");
    }

    #[test]
    fn ill_kinded_annotations_are_rejected() {
        assert!(check("1.0", "a").is_err());
        let e = infer("roll[real] 1.0").unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::RollNotMu(_)));
    }
}
