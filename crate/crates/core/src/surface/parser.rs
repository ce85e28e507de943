use std::collections::BTreeMap;

use super::lexer::{lex, Spanned, Tok};
use super::syntax::{desugar, Cmp, SurfaceTerm};
use super::{Definition, ParseError, SourceFile};
use crate::ast::{Name, Type};
use crate::ops::OpRegistry;

type PResult<T> = Result<T, ParseError>;

pub struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    ops: &'a OpRegistry,
    aliases: BTreeMap<Name, Type>,
}

fn boxed(t: SurfaceTerm) -> Box<SurfaceTerm> {
    Box::new(t)
}

impl<'a> Parser<'a> {
    pub fn new(src: &str, ops: &'a OpRegistry) -> PResult<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            ops,
            aliases: BTreeMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let s = &self.toks[self.pos];
        Err(ParseError::syntax(s.line, s.col, msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(x) if *x == k)
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{k}`"))
        }
    }

    /// A binder: an identifier or `_`. Keywords and operation names are reserved.
    fn binder(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                if self.ops.get(&x).is_some() {
                    let s = &self.toks[self.pos];
                    return Err(ParseError::reserved(s.line, s.col, &x));
                }
                self.bump();
                Ok(x)
            }
            Tok::Underscore => {
                self.bump();
                Ok("_".to_string())
            }
            Tok::Keyword(k) => {
                let s = &self.toks[self.pos];
                Err(ParseError::reserved(s.line, s.col, k))
            }
            _ => self.unexpected("a variable name"),
        }
    }

    fn index(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Number(n) if n >= 1.0 && n.fract() == 0.0 && n <= u32::MAX as f64 => {
                self.bump();
                Ok(n as u32)
            }
            _ => self.unexpected("a positive integer index"),
        }
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    // ---- types ----

    pub fn ty(&mut self) -> PResult<Type> {
        self.ty_in(&mut Vec::new())
    }

    fn ty_in(&mut self, bound: &mut Vec<Name>) -> PResult<Type> {
        if self.is_kw("mu") {
            self.bump();
            let a = match self.bump() {
                Tok::Ident(a) => a,
                Tok::Keyword(k) => {
                    let s = &self.toks[self.pos - 1];
                    return Err(ParseError::reserved(s.line, s.col, k));
                }
                _ => return self.error("expected a type variable after `mu`"),
            };
            self.expect_sym(".")?;
            bound.push(a.clone());
            let body = self.ty_in(bound);
            bound.pop();
            return Ok(Type::Mu(a, Box::new(body?)));
        }
        let lhs = self.ty_sum(bound)?;
        if self.is_sym("->") {
            self.bump();
            let rhs = self.ty_in(bound)?;
            return Ok(Type::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_sum(&mut self, bound: &mut Vec<Name>) -> PResult<Type> {
        let mut acc = self.ty_prod(bound)?;
        while self.is_sym("+") {
            self.bump();
            acc = Type::sum(acc, self.ty_prod(bound)?);
        }
        Ok(acc)
    }

    fn ty_prod(&mut self, bound: &mut Vec<Name>) -> PResult<Type> {
        let mut acc = self.ty_atom(bound)?;
        while self.is_sym("*") {
            self.bump();
            acc = Type::prod(acc, self.ty_atom(bound)?);
        }
        Ok(acc)
    }

    fn ty_atom(&mut self, bound: &mut Vec<Name>) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Keyword("real") => {
                self.bump();
                Ok(Type::Real)
            }
            Tok::Keyword("tangent") => {
                self.bump();
                Ok(Type::Tangent)
            }
            Tok::Keyword("unit") => {
                self.bump();
                Ok(Type::Unit)
            }
            Tok::Keyword("void") => {
                self.bump();
                Ok(Type::Void)
            }
            Tok::Keyword("mu") => self.ty_in(bound),
            Tok::Underscore => {
                self.bump();
                Ok(Type::Hole)
            }
            Tok::Ident(a) => {
                self.bump();
                if !bound.contains(&a) {
                    if let Some(t) = self.aliases.get(&a) {
                        return Ok(t.clone());
                    }
                }
                Ok(Type::Var(a))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty_in(bound)?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => self.unexpected("a type"),
        }
    }

    // ---- terms ----

    pub fn term(&mut self) -> PResult<SurfaceTerm> {
        match self.peek().clone() {
            Tok::Keyword("fun") => {
                self.bump();
                let mut params = vec![self.binder()?];
                while !self.is_sym("->") {
                    params.push(self.binder()?);
                }
                self.expect_sym("->")?;
                let body = self.term()?;
                Ok(params
                    .into_iter()
                    .rev()
                    .fold(body, |b, p| SurfaceTerm::Lam(p, boxed(b))))
            }
            Tok::Keyword("let") => {
                self.bump();
                if self.is_sym("(") {
                    self.bump();
                    let a = self.binder()?;
                    self.expect_sym(",")?;
                    let b = self.binder()?;
                    self.expect_sym(")")?;
                    self.expect_sym("=")?;
                    let bound = self.term()?;
                    self.expect_kw("in")?;
                    let body = self.term()?;
                    return Ok(SurfaceTerm::LetPair(a, b, boxed(bound), boxed(body)));
                }
                let x = self.binder()?;
                self.expect_sym("=")?;
                let bound = self.term()?;
                self.expect_kw("in")?;
                let body = self.term()?;
                Ok(SurfaceTerm::Let(x, boxed(bound), boxed(body)))
            }
            Tok::Keyword("case") => {
                self.bump();
                let scrutinee = self.term()?;
                self.expect_kw("of")?;
                self.branches(scrutinee)
            }
            Tok::Keyword("if") => {
                self.bump();
                let c = self.term()?;
                self.expect_kw("then")?;
                let a = self.term()?;
                self.expect_kw("else")?;
                let b = self.term()?;
                Ok(SurfaceTerm::If(boxed(c), boxed(a), boxed(b)))
            }
            Tok::Keyword("fix") => {
                self.bump();
                let name = self.binder()?;
                let ty = if self.is_sym(":") {
                    self.bump();
                    let t = self.ty()?;
                    if !matches!(t, Type::Arrow(..)) {
                        return self.error("the type of a `fix` must be a function type");
                    }
                    Some(t)
                } else {
                    None
                };
                self.expect_sym("=")?;
                match self.term()? {
                    SurfaceTerm::Lam(param, body) => Ok(SurfaceTerm::Fix { name, ty, param, body }),
                    _ => self.error("`fix` expects a function `fun x -> ...`"),
                }
            }
            Tok::Keyword("iterate") => {
                self.bump();
                let step = self.term()?;
                self.expect_kw("from")?;
                let var = self.binder()?;
                self.expect_sym("=")?;
                let init = self.term()?;
                Ok(SurfaceTerm::Iterate {
                    step: boxed(step),
                    var,
                    init: boxed(init),
                })
            }
            _ => self.comparison(),
        }
    }

    fn branches(&mut self, scrutinee: SurfaceTerm) -> PResult<SurfaceTerm> {
        let s = boxed(scrutinee);
        if self.is_sym("|") {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Keyword("inl") => {
                self.bump();
                let x = self.binder()?;
                self.expect_sym("->")?;
                let a = self.term()?;
                self.expect_sym("|")?;
                self.expect_kw("inr")?;
                let y = self.binder()?;
                self.expect_sym("->")?;
                let b = self.term()?;
                Ok(SurfaceTerm::Case(s, x, boxed(a), y, boxed(b)))
            }
            Tok::Sym("(") => {
                self.bump();
                let x = self.binder()?;
                self.expect_sym(",")?;
                let y = self.binder()?;
                self.expect_sym(")")?;
                self.expect_sym("->")?;
                let body = self.term()?;
                Ok(SurfaceTerm::PairMatch(s, x, y, boxed(body)))
            }
            Tok::Keyword("roll") => {
                self.bump();
                let x = self.binder()?;
                self.expect_sym("->")?;
                let body = self.term()?;
                Ok(SurfaceTerm::Unroll(s, x, boxed(body)))
            }
            Tok::Sym("{") => {
                self.bump();
                self.expect_sym("}")?;
                Ok(SurfaceTerm::VoidMatch(s))
            }
            _ => self.unexpected("`inl`, `(`, `roll` or `{}` after `of`"),
        }
    }

    fn comparison(&mut self) -> PResult<SurfaceTerm> {
        let first = self.additive()?;
        let mut operands = vec![first];
        let mut ops = Vec::new();
        loop {
            let c = if self.is_sym("<") {
                Cmp::Less
            } else if self.is_sym(">") {
                Cmp::Greater
            } else {
                break;
            };
            self.bump();
            ops.push(c);
            operands.push(self.additive()?);
        }
        if ops.is_empty() {
            Ok(operands.pop().unwrap())
        } else {
            Ok(SurfaceTerm::Compare(operands, ops))
        }
    }

    fn additive(&mut self) -> PResult<SurfaceTerm> {
        let mut acc = self.multiplicative()?;
        while let Tok::Sym(s @ ("+" | "-" | "<+>")) = self.peek() {
            let sym = *s;
            self.bump();
            let rhs = self.multiplicative()?;
            acc = match sym {
                "<+>" => SurfaceTerm::AddTan(boxed(acc), boxed(rhs)),
                s => SurfaceTerm::Op(s.to_string(), vec![acc, rhs]),
            };
        }
        Ok(acc)
    }

    fn multiplicative(&mut self) -> PResult<SurfaceTerm> {
        let mut acc = self.unary()?;
        while let Tok::Sym(s @ ("*" | "/" | "<*>")) = self.peek() {
            let sym = *s;
            self.bump();
            let rhs = self.unary()?;
            acc = match sym {
                "<*>" => SurfaceTerm::ScaleTan(boxed(acc), boxed(rhs)),
                s => SurfaceTerm::Op(s.to_string(), vec![acc, rhs]),
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> PResult<SurfaceTerm> {
        if self.is_sym("-") {
            self.bump();
            if let Tok::Number(n) = *self.peek() {
                self.bump();
                return Ok(SurfaceTerm::Const(-n));
            }
            let t = self.unary()?;
            return Ok(SurfaceTerm::Op("neg".into(), vec![t]));
        }
        self.application()
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(x) => self.ops.get(x).is_none_or(|o| o.sig.arity == 0),
            Tok::Number(_) | Tok::ZeroTan => true,
            Tok::Sym("(") => true,
            Tok::Keyword("basis") => true,
            _ => false,
        }
    }

    fn application(&mut self) -> PResult<SurfaceTerm> {
        let mut head = self.prefixed()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            head = SurfaceTerm::App(boxed(head), boxed(arg));
        }
        Ok(head)
    }

    /// Keyword-prefixed forms and operation calls, which take atomic arguments.
    fn prefixed(&mut self) -> PResult<SurfaceTerm> {
        match self.peek().clone() {
            Tok::Keyword("inl") => {
                self.bump();
                Ok(SurfaceTerm::Inl(boxed(self.atom()?)))
            }
            Tok::Keyword("inr") => {
                self.bump();
                Ok(SurfaceTerm::Inr(boxed(self.atom()?)))
            }
            Tok::Keyword("sign") => {
                self.bump();
                Ok(SurfaceTerm::Sign(boxed(self.atom()?)))
            }
            Tok::Keyword("unroll") => {
                self.bump();
                Ok(SurfaceTerm::UnrollShort(boxed(self.atom()?)))
            }
            Tok::Keyword("roll") => {
                self.bump();
                self.expect_sym("[")?;
                let ty = self.ty()?;
                self.expect_sym("]")?;
                Ok(SurfaceTerm::Roll(boxed(self.atom()?), ty))
            }
            Tok::Keyword("proj") => {
                self.bump();
                let i = self.index()?;
                Ok(SurfaceTerm::Proj(i, boxed(self.atom()?)))
            }
            Tok::Ident(x) if self.ops.get(&x).is_some_and(|o| o.sig.arity > 0) => {
                let arity = self.ops.arity(&x).unwrap();
                self.bump();
                if arity == 1 {
                    return Ok(SurfaceTerm::Op(x, vec![self.atom()?]));
                }
                self.expect_sym("(")?;
                let mut args = vec![self.term()?];
                while self.is_sym(",") {
                    self.bump();
                    args.push(self.term()?);
                }
                self.expect_sym(")")?;
                if args.len() != arity {
                    return self.error(format!("operation `{x}` takes {arity} arguments, {} given", args.len()));
                }
                Ok(SurfaceTerm::Op(x, args))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<SurfaceTerm> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                match self.ops.arity(&x) {
                    Some(0) => Ok(SurfaceTerm::Op(x, vec![])),
                    Some(_) => {
                        let s = &self.toks[self.pos - 1];
                        Err(ParseError::syntax(
                            s.line,
                            s.col,
                            format!("operation `{x}` must be applied to arguments"),
                        ))
                    }
                    None => Ok(SurfaceTerm::Var(x)),
                }
            }
            Tok::Number(n) => {
                self.bump();
                Ok(SurfaceTerm::Const(n))
            }
            Tok::ZeroTan => {
                self.bump();
                Ok(SurfaceTerm::ZeroTan)
            }
            Tok::Keyword("basis") => {
                self.bump();
                Ok(SurfaceTerm::Basis(self.index()?))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.is_sym(")") {
                    self.bump();
                    return Ok(SurfaceTerm::Unit);
                }
                let a = self.term()?;
                if self.is_sym(",") {
                    self.bump();
                    let b = self.term()?;
                    self.expect_sym(")")?;
                    return Ok(SurfaceTerm::Pair(boxed(a), boxed(b)));
                }
                self.expect_sym(")")?;
                Ok(a)
            }
            Tok::Keyword(
                k @ ("fun" | "let" | "case" | "if" | "fix" | "iterate" | "inl" | "inr" | "sign" | "roll" | "unroll"
                | "proj"),
            ) => self.error(format!("`{k}` must be parenthesized here")),
            Tok::Keyword(k) => {
                let s = &self.toks[self.pos];
                Err(ParseError::reserved(s.line, s.col, k))
            }
            _ => self.unexpected("a term"),
        }
    }

    // ---- files ----

    pub fn file(&mut self) -> PResult<SourceFile> {
        let mut defs: Vec<Definition> = Vec::new();
        while !self.at_eof() {
            if self.is_kw("type") {
                self.bump();
                let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
                let name = self.binder()?;
                self.expect_sym("=")?;
                let ty = self.ty()?;
                self.expect_sym(";;")?;
                if !ty.free_vars().is_empty() {
                    return Err(ParseError::syntax(
                        line,
                        col,
                        format!("type `{name}` has free type variables"),
                    ));
                }
                self.aliases.insert(name, ty);
                continue;
            }
            self.expect_kw("def")?;
            let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
            let name = self.binder()?;
            if defs.iter().any(|d| d.name == name) {
                return Err(ParseError::syntax(line, col, format!("`{name}` is defined twice")));
            }
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym("=")?;
            let body = self.term()?;
            self.expect_sym(";;")?;
            defs.push(Definition {
                name,
                ty,
                term: desugar(&body),
                line,
            });
        }
        Ok(SourceFile { defs })
    }
}
