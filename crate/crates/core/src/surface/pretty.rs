//! Printing of types and core terms in the concrete syntax.
//!
//! Output always re-parses to an alpha-equivalent tree. Compound operands of
//! type constructors are always parenthesized; terms get the minimum
//! parentheses the grammar needs, except that negative literals always carry
//! their own.

use crate::ast::{Term, Type};
use crate::ops::INFIX;

pub fn pretty_type(t: &Type) -> String {
    fn operand(t: &Type) -> String {
        match t {
            Type::Sum(..) | Type::Prod(..) | Type::Arrow(..) | Type::Mu(..) => format!("({})", pretty_type(t)),
            _ => pretty_type(t),
        }
    }
    match t {
        Type::Real => "real".into(),
        Type::Tangent => "tangent".into(),
        Type::Unit => "unit".into(),
        Type::Void => "void".into(),
        Type::Hole => "_".into(),
        Type::Var(a) => a.clone(),
        Type::Sum(a, b) => format!("{} + {}", operand(a), operand(b)),
        Type::Prod(a, b) => format!("{} * {}", operand(a), operand(b)),
        Type::Arrow(a, b) => format!("{} -> {}", operand(a), operand(b)),
        Type::Mu(a, body) => format!("mu {a}. {}", pretty_type(body)),
    }
}

const OPEN: u8 = 0;
const BRANCH: u8 = 1;
const ADD: u8 = 2;
const MUL: u8 = 3;
const UNARY: u8 = 4;
const APP: u8 = 5;
const ATOM: u8 = 6;

fn level(t: &Term) -> u8 {
    match t {
        Term::Let(..)
        | Term::Lam(..)
        | Term::Case { .. }
        | Term::PairMatch { .. }
        | Term::Unroll { .. }
        | Term::VoidMatch(_) => OPEN,
        Term::Op(o, args) if args.len() == 2 && (o == "+" || o == "-") => ADD,
        Term::Op(o, args) if args.len() == 2 && (o == "*" || o == "/") => MUL,
        Term::AddTan(..) => ADD,
        Term::ScaleTan(..) => MUL,
        Term::Op(_, args) if args.is_empty() => ATOM,
        Term::Op(..)
        | Term::Sign(_)
        | Term::Inl(_)
        | Term::Inr(_)
        | Term::Roll(..)
        | Term::Proj(..)
        | Term::App(..) => APP,
        Term::Var(_) | Term::Const(_) | Term::Unit | Term::Pair(..) | Term::Basis(_) | Term::ZeroTan => ATOM,
    }
}

fn number(c: f64) -> String {
    if c.is_sign_negative() {
        format!("({c:?})")
    } else {
        format!("{c:?}")
    }
}

struct Printer {
    multiline: bool,
}

impl Printer {
    fn newline(&self, indent: usize) -> String {
        if self.multiline {
            format!("\n{}", " ".repeat(indent))
        } else {
            " ".into()
        }
    }

    fn at(&self, t: &Term, min: u8, indent: usize) -> String {
        let s = self.term(t, indent);
        if level(t) < min {
            format!("({s})")
        } else {
            s
        }
    }

    fn term(&self, t: &Term, ind: usize) -> String {
        match t {
            Term::Var(x) => x.clone(),
            Term::Const(c) => number(*c),
            Term::Unit => "()".into(),
            Term::ZeroTan => "0t".into(),
            Term::Basis(i) => format!("basis {i}"),
            Term::Pair(a, b) => format!("({}, {})", self.at(a, OPEN, ind), self.at(b, OPEN, ind)),
            Term::Op(o, args) if args.len() == 2 && INFIX.contains(&o.as_str()) => {
                let (l, r) = if o == "+" || o == "-" { (ADD, MUL) } else { (MUL, UNARY) };
                format!("{} {o} {}", self.at(&args[0], l, ind), self.at(&args[1], r, ind))
            }
            Term::Op(o, args) => match args.len() {
                0 => o.clone(),
                1 => format!("{o} {}", self.at(&args[0], ATOM, ind)),
                _ => {
                    let inner: Vec<String> = args.iter().map(|a| self.at(a, OPEN, ind)).collect();
                    format!("{o}({})", inner.join(", "))
                }
            },
            Term::AddTan(a, b) => format!("{} <+> {}", self.at(a, ADD, ind), self.at(b, MUL, ind)),
            Term::ScaleTan(a, b) => format!("{} <*> {}", self.at(a, MUL, ind), self.at(b, UNARY, ind)),
            Term::Sign(a) => format!("sign {}", self.at(a, ATOM, ind)),
            Term::Inl(a) => format!("inl {}", self.at(a, ATOM, ind)),
            Term::Inr(a) => format!("inr {}", self.at(a, ATOM, ind)),
            Term::Roll(a, ty) => format!("roll[{}] {}", pretty_type(ty), self.at(a, ATOM, ind)),
            Term::Proj(i, a) => format!("proj {i} {}", self.at(a, ATOM, ind)),
            Term::App(f, a) => format!("{} {}", self.at(f, APP, ind), self.at(a, ATOM, ind)),
            Term::Lam(x, b) => format!("fun {x} -> {}", self.term(b, ind)),
            Term::Let(x, a, b) => format!(
                "let {x} = {} in{}{}",
                self.term(a, ind + 2),
                self.newline(ind),
                self.term(b, ind)
            ),
            Term::Case {
                scrutinee,
                left,
                left_body,
                right,
                right_body,
            } => {
                let n = self.newline(ind + 2);
                format!(
                    "case {} of{n}inl {left} -> {}{n}| inr {right} -> {}",
                    self.term(scrutinee, ind + 2),
                    self.at(left_body, BRANCH, ind + 4),
                    self.term(right_body, ind + 4),
                )
            }
            Term::PairMatch {
                scrutinee,
                fst,
                snd,
                body,
            } => format!(
                "case {} of ({fst}, {snd}) ->{}{}",
                self.term(scrutinee, ind + 2),
                self.newline(ind + 2),
                self.term(body, ind + 2)
            ),
            Term::Unroll { scrutinee, var, body } => format!(
                "case {} of roll {var} ->{}{}",
                self.term(scrutinee, ind + 2),
                self.newline(ind + 2),
                self.term(body, ind + 2)
            ),
            Term::VoidMatch(a) => format!("case {} of {{}}", self.term(a, ind + 2)),
        }
    }
}

/// Single-line rendering.
pub fn pretty_term(t: &Term) -> String {
    Printer { multiline: false }.term(t, 0)
}

/// Rendering with line breaks after `let ... in` and between case branches.
pub fn pretty_term_multiline(t: &Term, indent: usize) -> String {
    Printer { multiline: true }.term(t, indent)
}
