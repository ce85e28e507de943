//! Abstract syntax shared by the source and target languages.
//!
//! The target language is a strict superset of the source language: it adds
//! the `tangent` type together with the vector-space constructs [`Term::Basis`],
//! [`Term::ZeroTan`], [`Term::AddTan`], [`Term::ScaleTan`] and the projection
//! handler [`Term::Proj`].
//!
//! Names are plain strings. Binders are renamed with [`fresh_name`], which
//! appends an integer suffix to a base name.

use std::collections::BTreeSet;
use std::fmt;
use std::rc::Rc;

pub type Name = String;

/// Types of both languages.
///
/// `Hole` only appears in `roll` annotations written by the user (or produced
/// by desugaring) before elaboration fills it in; it never kind-checks.
#[derive(Clone, Debug, PartialEq)]
pub enum Type {
    Real,
    Tangent,
    Unit,
    Void,
    Sum(Box<Type>, Box<Type>),
    Prod(Box<Type>, Box<Type>),
    Arrow(Box<Type>, Box<Type>),
    Var(Name),
    Mu(Name, Box<Type>),
    Hole,
}

impl Type {
    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn var(name: &str) -> Type {
        Type::Var(name.to_string())
    }

    pub fn mu(binder: &str, body: Type) -> Type {
        Type::Mu(binder.to_string(), Box::new(body))
    }

    /// `unit + unit`, the type of `sign` and of comparisons.
    pub fn bool() -> Type {
        Type::sum(Type::Unit, Type::Unit)
    }

    /// `real^i`, left-nested: `real^1 = real`, `real^(i+1) = real^i * real`.
    pub fn real_power(i: u32) -> Type {
        assert!(i >= 1, "real^0 is not a type");
        (1..i).fold(Type::Real, |acc, _| Type::prod(acc, Type::Real))
    }

    /// Whether `tangent` occurs anywhere in the type.
    pub fn mentions_tangent(&self) -> bool {
        match self {
            Type::Tangent => true,
            Type::Real | Type::Unit | Type::Void | Type::Var(_) | Type::Hole => false,
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Arrow(a, b) => a.mentions_tangent() || b.mentions_tangent(),
            Type::Mu(_, body) => body.mentions_tangent(),
        }
    }

    pub fn has_holes(&self) -> bool {
        match self {
            Type::Hole => true,
            Type::Real | Type::Tangent | Type::Unit | Type::Void | Type::Var(_) => false,
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Arrow(a, b) => a.has_holes() || b.has_holes(),
            Type::Mu(_, body) => body.has_holes(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Type::Var(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            Type::Real | Type::Tangent | Type::Unit | Type::Void | Type::Hole => {}
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Arrow(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Type::Mu(binder, body) => {
                bound.push(binder.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every type-variable name occurring in the type, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Type::Var(a) => {
                out.insert(a.clone());
            }
            Type::Real | Type::Tangent | Type::Unit | Type::Void | Type::Hole => {}
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Arrow(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Type::Mu(binder, body) => {
                out.insert(binder.clone());
                body.all_names(out);
            }
        }
    }

    /// One-step unfolding `body[mu a. body / a]` of a recursive type.
    pub fn unfold(&self) -> Option<Type> {
        match self {
            Type::Mu(binder, body) => Some(subst_type(body, binder, self)),
            _ => None,
        }
    }
}

/// Terms of both languages.
///
/// `Case`, `PairMatch` and `Unroll` bind variables in their branches. `Roll`
/// carries the recursive type it introduces.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(Name),
    Let(Name, Rc<Term>, Rc<Term>),
    Const(f64),
    Op(String, Vec<Term>),
    Sign(Rc<Term>),
    Inl(Rc<Term>),
    Inr(Rc<Term>),
    Case {
        scrutinee: Rc<Term>,
        left: Name,
        left_body: Rc<Term>,
        right: Name,
        right_body: Rc<Term>,
    },
    Unit,
    Pair(Rc<Term>, Rc<Term>),
    PairMatch {
        scrutinee: Rc<Term>,
        fst: Name,
        snd: Name,
        body: Rc<Term>,
    },
    Lam(Name, Rc<Term>),
    App(Rc<Term>, Rc<Term>),
    Roll(Rc<Term>, Type),
    Unroll {
        scrutinee: Rc<Term>,
        var: Name,
        body: Rc<Term>,
    },
    VoidMatch(Rc<Term>),
    // target-only
    Basis(u32),
    ZeroTan,
    AddTan(Rc<Term>, Rc<Term>),
    ScaleTan(Rc<Term>, Rc<Term>),
    Proj(u32, Rc<Term>),
}

/// Constructor tags, used for coverage accounting and error messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermKind {
    Var,
    Let,
    Const,
    Op,
    Sign,
    Inl,
    Inr,
    Case,
    Unit,
    Pair,
    PairMatch,
    Lam,
    App,
    Roll,
    Unroll,
    VoidMatch,
    Basis,
    ZeroTan,
    AddTan,
    ScaleTan,
    Proj,
}

impl TermKind {
    pub const SOURCE: [TermKind; 16] = [
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

    pub fn is_target_only(self) -> bool {
        matches!(
            self,
            TermKind::Basis | TermKind::ZeroTan | TermKind::AddTan | TermKind::ScaleTan | TermKind::Proj
        )
    }
}

pub fn var(x: &str) -> Term {
    Term::Var(x.to_string())
}

pub fn lam(x: &str, body: Term) -> Term {
    Term::Lam(x.to_string(), Rc::new(body))
}

pub fn app(f: Term, a: Term) -> Term {
    Term::App(Rc::new(f), Rc::new(a))
}

pub fn let_in(x: &str, bound: Term, body: Term) -> Term {
    Term::Let(x.to_string(), Rc::new(bound), Rc::new(body))
}

pub fn pair(a: Term, b: Term) -> Term {
    Term::Pair(Rc::new(a), Rc::new(b))
}

pub fn op(symbol: &str, args: Vec<Term>) -> Term {
    Term::Op(symbol.to_string(), args)
}

pub fn pair_match(scrutinee: Term, fst: &str, snd: &str, body: Term) -> Term {
    Term::PairMatch {
        scrutinee: Rc::new(scrutinee),
        fst: fst.to_string(),
        snd: snd.to_string(),
        body: Rc::new(body),
    }
}

pub fn case(scrutinee: Term, left: &str, left_body: Term, right: &str, right_body: Term) -> Term {
    Term::Case {
        scrutinee: Rc::new(scrutinee),
        left: left.to_string(),
        left_body: Rc::new(left_body),
        right: right.to_string(),
        right_body: Rc::new(right_body),
    }
}

pub fn unroll(scrutinee: Term, x: &str, body: Term) -> Term {
    Term::Unroll {
        scrutinee: Rc::new(scrutinee),
        var: x.to_string(),
        body: Rc::new(body),
    }
}

pub fn roll(t: Term, ty: Type) -> Term {
    Term::Roll(Rc::new(t), ty)
}

impl Term {
    pub fn kind(&self) -> TermKind {
        match self {
            Term::Var(_) => TermKind::Var,
            Term::Let(..) => TermKind::Let,
            Term::Const(_) => TermKind::Const,
            Term::Op(..) => TermKind::Op,
            Term::Sign(_) => TermKind::Sign,
            Term::Inl(_) => TermKind::Inl,
            Term::Inr(_) => TermKind::Inr,
            Term::Case { .. } => TermKind::Case,
            Term::Unit => TermKind::Unit,
            Term::Pair(..) => TermKind::Pair,
            Term::PairMatch { .. } => TermKind::PairMatch,
            Term::Lam(..) => TermKind::Lam,
            Term::App(..) => TermKind::App,
            Term::Roll(..) => TermKind::Roll,
            Term::Unroll { .. } => TermKind::Unroll,
            Term::VoidMatch(_) => TermKind::VoidMatch,
            Term::Basis(_) => TermKind::Basis,
            Term::ZeroTan => TermKind::ZeroTan,
            Term::AddTan(..) => TermKind::AddTan,
            Term::ScaleTan(..) => TermKind::ScaleTan,
            Term::Proj(..) => TermKind::Proj,
        }
    }

    /// Calls `f` on this term and every subterm, pre-order.
    pub fn visit(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        match self {
            Term::Var(_) | Term::Const(_) | Term::Unit | Term::Basis(_) | Term::ZeroTan => {}
            Term::Op(_, args) => args.iter().for_each(|a| a.visit(f)),
            Term::Sign(t)
            | Term::Inl(t)
            | Term::Inr(t)
            | Term::Lam(_, t)
            | Term::Roll(t, _)
            | Term::VoidMatch(t)
            | Term::Proj(_, t) => t.visit(f),
            Term::Let(_, a, b) | Term::Pair(a, b) | Term::App(a, b) | Term::AddTan(a, b) | Term::ScaleTan(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Term::Case {
                scrutinee,
                left_body,
                right_body,
                ..
            } => {
                scrutinee.visit(f);
                left_body.visit(f);
                right_body.visit(f);
            }
            Term::PairMatch { scrutinee, body, .. } | Term::Unroll { scrutinee, body, .. } => {
                scrutinee.visit(f);
                body.visit(f);
            }
        }
    }

    /// True when no target-only constructor or `tangent` annotation occurs.
    pub fn is_source(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |t| {
            if t.kind().is_target_only() {
                ok = false;
            }
            if let Term::Roll(_, ty) = t {
                if ty.mentions_tangent() {
                    ok = false;
                }
            }
        });
        ok
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        fn under(t: &Term, names: &[&Name], bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
            for n in names {
                bound.push((*n).clone());
            }
            t.collect_free(bound, out);
            for _ in names {
                bound.pop();
            }
        }
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Const(_) | Term::Unit | Term::Basis(_) | Term::ZeroTan => {}
            Term::Op(_, args) => args.iter().for_each(|a| a.collect_free(bound, out)),
            Term::Sign(t) | Term::Inl(t) | Term::Inr(t) | Term::Roll(t, _) | Term::VoidMatch(t) | Term::Proj(_, t) => {
                t.collect_free(bound, out)
            }
            Term::Pair(a, b) | Term::App(a, b) | Term::AddTan(a, b) | Term::ScaleTan(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::Let(x, a, b) => {
                a.collect_free(bound, out);
                under(b, &[x], bound, out);
            }
            Term::Lam(x, b) => under(b, &[x], bound, out),
            Term::Case {
                scrutinee,
                left,
                left_body,
                right,
                right_body,
            } => {
                scrutinee.collect_free(bound, out);
                under(left_body, &[left], bound, out);
                under(right_body, &[right], bound, out);
            }
            Term::PairMatch {
                scrutinee,
                fst,
                snd,
                body,
            } => {
                scrutinee.collect_free(bound, out);
                under(body, &[fst, snd], bound, out);
            }
            Term::Unroll { scrutinee, var, body } => {
                scrutinee.collect_free(bound, out);
                under(body, &[var], bound, out);
            }
        }
    }

    /// Every term-variable name occurring in the term, bound or free.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| match t {
            Term::Var(x) | Term::Let(x, ..) | Term::Lam(x, _) => {
                out.insert(x.clone());
            }
            Term::Case { left, right, .. } => {
                out.insert(left.clone());
                out.insert(right.clone());
            }
            Term::PairMatch { fst, snd, .. } => {
                out.insert(fst.clone());
                out.insert(snd.clone());
            }
            Term::Unroll { var, .. } => {
                out.insert(var.clone());
            }
            _ => {}
        });
        out
    }

    /// Whether the term is a syntactic value (the CBV notion).
    pub fn is_value(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) | Term::Unit | Term::Lam(..) | Term::Basis(_) | Term::ZeroTan => true,
            Term::Inl(t) | Term::Inr(t) | Term::Roll(t, _) => t.is_value(),
            Term::Pair(a, b) => a.is_value() && b.is_value(),
            _ => false,
        }
    }
}

/// Splits `x12` into `("x", Some(12))`.
fn split_suffix(name: &str) -> (&str, Option<u64>) {
    let base = name.trim_end_matches(|c: char| c.is_ascii_digit());
    if base.is_empty() || base.len() == name.len() {
        return (name, None);
    }
    (base, name[base.len()..].parse().ok())
}

/// A name based on `hint` that is not in `avoid`.
///
/// Returns `hint` itself when it is free, otherwise the base of `hint`
/// followed by the smallest positive integer suffix that avoids the set.
pub fn fresh_name(avoid: &BTreeSet<Name>, hint: &str) -> Name {
    if !avoid.contains(hint) {
        return hint.to_string();
    }
    let (base, _) = split_suffix(hint);
    (1u64..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded suffix search")
}

/// Capture-avoiding substitution `t[v/x]`.
pub fn subst_term(t: &Term, x: &str, v: &Term) -> Term {
    let fv = v.free_vars();
    subst_with(t, x, v, &fv)
}

/// Renames binder `y` in `body` when it would capture a free variable of the
/// substituted term. Returns the (possibly new) binder and body.
fn avoid_capture(y: &Name, body: &Rc<Term>, x: &str, fv_v: &BTreeSet<Name>, extra: &[&Name]) -> (Name, Rc<Term>) {
    if fv_v.contains(y) && body.free_vars().contains(x) {
        let mut avoid = fv_v.clone();
        avoid.extend(body.free_vars());
        avoid.extend(body.all_names());
        avoid.insert(x.to_string());
        for e in extra {
            avoid.insert((*e).clone());
        }
        let y2 = fresh_name(&avoid, y);
        let renamed = subst_term(body, y, &Term::Var(y2.clone()));
        (y2, Rc::new(renamed))
    } else {
        (y.clone(), body.clone())
    }
}

fn subst_with(t: &Term, x: &str, v: &Term, fv_v: &BTreeSet<Name>) -> Term {
    let go = |s: &Rc<Term>| Rc::new(subst_with(s, x, v, fv_v));
    match t {
        Term::Var(y) => {
            if y == x {
                v.clone()
            } else {
                t.clone()
            }
        }
        Term::Const(_) | Term::Unit | Term::Basis(_) | Term::ZeroTan => t.clone(),
        Term::Op(o, args) => Term::Op(o.clone(), args.iter().map(|a| subst_with(a, x, v, fv_v)).collect()),
        Term::Sign(s) => Term::Sign(go(s)),
        Term::Inl(s) => Term::Inl(go(s)),
        Term::Inr(s) => Term::Inr(go(s)),
        Term::Roll(s, ty) => Term::Roll(go(s), ty.clone()),
        Term::VoidMatch(s) => Term::VoidMatch(go(s)),
        Term::Proj(i, s) => Term::Proj(*i, go(s)),
        Term::Pair(a, b) => Term::Pair(go(a), go(b)),
        Term::App(a, b) => Term::App(go(a), go(b)),
        Term::AddTan(a, b) => Term::AddTan(go(a), go(b)),
        Term::ScaleTan(a, b) => Term::ScaleTan(go(a), go(b)),
        Term::Let(y, a, b) => {
            let a = go(a);
            if y == x {
                return Term::Let(y.clone(), a, b.clone());
            }
            let (y, b) = avoid_capture(y, b, x, fv_v, &[]);
            Term::Let(y, a, go(&b))
        }
        Term::Lam(y, b) => {
            if y == x {
                return t.clone();
            }
            let (y, b) = avoid_capture(y, b, x, fv_v, &[]);
            Term::Lam(y, go(&b))
        }
        Term::Case {
            scrutinee,
            left,
            left_body,
            right,
            right_body,
        } => {
            let scrutinee = go(scrutinee);
            let (left, left_body) = if left == x {
                (left.clone(), left_body.clone())
            } else {
                let (l, b) = avoid_capture(left, left_body, x, fv_v, &[]);
                (l, go(&b))
            };
            let (right, right_body) = if right == x {
                (right.clone(), right_body.clone())
            } else {
                let (r, b) = avoid_capture(right, right_body, x, fv_v, &[]);
                (r, go(&b))
            };
            Term::Case {
                scrutinee,
                left,
                left_body,
                right,
                right_body,
            }
        }
        Term::PairMatch {
            scrutinee,
            fst,
            snd,
            body,
        } => {
            let scrutinee = go(scrutinee);
            if fst == x || snd == x {
                return Term::PairMatch {
                    scrutinee,
                    fst: fst.clone(),
                    snd: snd.clone(),
                    body: body.clone(),
                };
            }
            let (fst, body) = avoid_capture(fst, body, x, fv_v, &[snd]);
            let (snd, body) = avoid_capture(snd, &body, x, fv_v, &[&fst]);
            Term::PairMatch {
                scrutinee,
                fst,
                snd,
                body: go(&body),
            }
        }
        Term::Unroll { scrutinee, var, body } => {
            let scrutinee = go(scrutinee);
            if var == x {
                return Term::Unroll {
                    scrutinee,
                    var: var.clone(),
                    body: body.clone(),
                };
            }
            let (var, body) = avoid_capture(var, body, x, fv_v, &[]);
            Term::Unroll {
                scrutinee,
                var,
                body: go(&body),
            }
        }
    }
}

/// Capture-avoiding type substitution `ty[sigma/alpha]`.
pub fn subst_type(ty: &Type, alpha: &str, sigma: &Type) -> Type {
    match ty {
        Type::Var(a) => {
            if a == alpha {
                sigma.clone()
            } else {
                ty.clone()
            }
        }
        Type::Real | Type::Tangent | Type::Unit | Type::Void | Type::Hole => ty.clone(),
        Type::Sum(a, b) => Type::sum(subst_type(a, alpha, sigma), subst_type(b, alpha, sigma)),
        Type::Prod(a, b) => Type::prod(subst_type(a, alpha, sigma), subst_type(b, alpha, sigma)),
        Type::Arrow(a, b) => Type::arrow(subst_type(a, alpha, sigma), subst_type(b, alpha, sigma)),
        Type::Mu(beta, body) => {
            if beta == alpha {
                return ty.clone();
            }
            let fv_sigma = sigma.free_vars();
            if fv_sigma.contains(beta) && body.free_vars().contains(alpha) {
                let mut avoid = fv_sigma;
                body.all_names(&mut avoid);
                avoid.insert(alpha.to_string());
                let beta2 = fresh_name(&avoid, beta);
                let body2 = subst_type(body, beta, &Type::Var(beta2.clone()));
                Type::Mu(beta2, Box::new(subst_type(&body2, alpha, sigma)))
            } else {
                Type::Mu(beta.clone(), Box::new(subst_type(body, alpha, sigma)))
            }
        }
    }
}

/// Equality up to consistent renaming of bound names.
pub trait AlphaEq {
    fn alpha_eq(&self, other: &Self) -> bool;
}

/// Paired binder stacks; a variable is identified by its binding depth.
struct Scopes {
    left: Vec<Name>,
    right: Vec<Name>,
}

impl Scopes {
    fn new() -> Self {
        Scopes {
            left: Vec::new(),
            right: Vec::new(),
        }
    }

    fn same_var(&self, a: &str, b: &str) -> bool {
        let ia = self.left.iter().rposition(|n| n == a);
        let ib = self.right.iter().rposition(|n| n == b);
        match (ia, ib) {
            (Some(i), Some(j)) => i == j,
            (None, None) => a == b,
            _ => false,
        }
    }

    fn bind(&mut self, a: &str, b: &str) {
        self.left.push(a.to_string());
        self.right.push(b.to_string());
    }

    fn unbind(&mut self, n: usize) {
        for _ in 0..n {
            self.left.pop();
            self.right.pop();
        }
    }
}

fn type_alpha(a: &Type, b: &Type, s: &mut Scopes) -> bool {
    match (a, b) {
        (Type::Real, Type::Real)
        | (Type::Tangent, Type::Tangent)
        | (Type::Unit, Type::Unit)
        | (Type::Void, Type::Void)
        | (Type::Hole, Type::Hole) => true,
        (Type::Sum(a1, a2), Type::Sum(b1, b2))
        | (Type::Prod(a1, a2), Type::Prod(b1, b2))
        | (Type::Arrow(a1, a2), Type::Arrow(b1, b2)) => type_alpha(a1, b1, s) && type_alpha(a2, b2, s),
        (Type::Var(x), Type::Var(y)) => s.same_var(x, y),
        (Type::Mu(x, bx), Type::Mu(y, by)) => {
            s.bind(x, y);
            let r = type_alpha(bx, by, s);
            s.unbind(1);
            r
        }
        _ => false,
    }
}

impl AlphaEq for Type {
    fn alpha_eq(&self, other: &Type) -> bool {
        type_alpha(self, other, &mut Scopes::new())
    }
}

fn term_alpha(a: &Term, b: &Term, s: &mut Scopes) -> bool {
    fn bound(a: &Term, b: &Term, names: &[(&str, &str)], s: &mut Scopes) -> bool {
        for (x, y) in names {
            s.bind(x, y);
        }
        let r = term_alpha(a, b, s);
        s.unbind(names.len());
        r
    }
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => s.same_var(x, y),
        (Term::Const(x), Term::Const(y)) => x.to_bits() == y.to_bits(),
        (Term::Unit, Term::Unit) | (Term::ZeroTan, Term::ZeroTan) => true,
        (Term::Basis(i), Term::Basis(j)) => i == j,
        (Term::Op(o1, a1), Term::Op(o2, a2)) => {
            o1 == o2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| term_alpha(x, y, s))
        }
        (Term::Sign(x), Term::Sign(y))
        | (Term::Inl(x), Term::Inl(y))
        | (Term::Inr(x), Term::Inr(y))
        | (Term::VoidMatch(x), Term::VoidMatch(y)) => term_alpha(x, y, s),
        (Term::Proj(i, x), Term::Proj(j, y)) => i == j && term_alpha(x, y, s),
        (Term::Roll(x, tx), Term::Roll(y, ty)) => tx.alpha_eq(ty) && term_alpha(x, y, s),
        (Term::Pair(a1, a2), Term::Pair(b1, b2))
        | (Term::App(a1, a2), Term::App(b1, b2))
        | (Term::AddTan(a1, a2), Term::AddTan(b1, b2))
        | (Term::ScaleTan(a1, a2), Term::ScaleTan(b1, b2)) => term_alpha(a1, b1, s) && term_alpha(a2, b2, s),
        (Term::Let(x, a1, a2), Term::Let(y, b1, b2)) => term_alpha(a1, b1, s) && bound(a2, b2, &[(x, y)], s),
        (Term::Lam(x, a1), Term::Lam(y, b1)) => bound(a1, b1, &[(x, y)], s),
        (
            Term::Case {
                scrutinee: s1,
                left: l1,
                left_body: lb1,
                right: r1,
                right_body: rb1,
            },
            Term::Case {
                scrutinee: s2,
                left: l2,
                left_body: lb2,
                right: r2,
                right_body: rb2,
            },
        ) => term_alpha(s1, s2, s) && bound(lb1, lb2, &[(l1, l2)], s) && bound(rb1, rb2, &[(r1, r2)], s),
        (
            Term::PairMatch {
                scrutinee: s1,
                fst: f1,
                snd: n1,
                body: b1,
            },
            Term::PairMatch {
                scrutinee: s2,
                fst: f2,
                snd: n2,
                body: b2,
            },
        ) => term_alpha(s1, s2, s) && bound(b1, b2, &[(f1, f2), (n1, n2)], s),
        (
            Term::Unroll {
                scrutinee: s1,
                var: v1,
                body: b1,
            },
            Term::Unroll {
                scrutinee: s2,
                var: v2,
                body: b2,
            },
        ) => term_alpha(s1, s2, s) && bound(b1, b2, &[(v1, v2)], s),
        _ => false,
    }
}

impl AlphaEq for Term {
    fn alpha_eq(&self, other: &Term) -> bool {
        term_alpha(self, other, &mut Scopes::new())
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::pretty_type(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::surface::pretty_term(self))
    }
}
