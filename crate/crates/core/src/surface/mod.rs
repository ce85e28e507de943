//! Concrete syntax: parsing, sugar elaboration and pretty-printing.
//!
//! A program file is a sequence of `def name : type = term ;;` items,
//! optionally interleaved with `type name = type ;;` aliases. Comments run
//! from `--` to the end of the line. The grammar is documented in the book
//! chapter on the language.

mod lexer;
mod parser;
mod pretty;
mod syntax;

use std::collections::BTreeSet;
use std::rc::Rc;

use thiserror::Error;

pub use lexer::KEYWORDS;
pub use parser::Parser;
pub use pretty::{pretty_term, pretty_term_multiline, pretty_type};
pub use syntax::{desugar, Cmp, SurfaceTerm};

use crate::ast::{Name, Term, Type};
use crate::ops::OpRegistry;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Reserved,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::Syntax,
            line,
            col,
            message: message.into(),
        }
    }

    pub(crate) fn reserved(line: usize, col: usize, word: &str) -> Self {
        ParseError {
            kind: ParseErrorKind::Reserved,
            line,
            col,
            message: format!("`{word}` is reserved and cannot be used as a name"),
        }
    }
}

/// A top-level definition.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub name: Name,
    pub ty: Type,
    pub term: Term,
    /// Line of the definition's name, for diagnostics.
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SourceFile {
    pub defs: Vec<Definition>,
}

impl SourceFile {
    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn main(&self) -> Option<&Definition> {
        self.get("main")
    }

    /// The definition `name` as a closed term: the earlier definitions it
    /// depends on (transitively) are bound around it with nested `let`s.
    pub fn closed_term(&self, name: &str) -> Option<Term> {
        let idx = self.defs.iter().position(|d| d.name == name)?;
        let mut needed: BTreeSet<Name> = self.defs[idx].term.free_vars();
        let mut keep = vec![false; idx];
        for j in (0..idx).rev() {
            if needed.contains(&self.defs[j].name) {
                keep[j] = true;
                needed.remove(&self.defs[j].name);
                needed.extend(self.defs[j].term.free_vars());
            }
        }
        let mut t = self.defs[idx].term.clone();
        for j in (0..idx).rev() {
            if keep[j] {
                t = Term::Let(
                    self.defs[j].name.clone(),
                    Rc::new(self.defs[j].term.clone()),
                    Rc::new(t),
                );
            }
        }
        Some(t)
    }

    /// Renders the file back to concrete syntax.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for d in &self.defs {
            out.push_str(&format!(
                "def {} : {} =\n  {}\n;;\n\n",
                d.name,
                pretty_type(&d.ty),
                pretty_term_multiline(&d.term, 2)
            ));
        }
        out
    }
}

/// Parses and desugars a program file.
pub fn parse(text: &str, ops: &OpRegistry) -> Result<SourceFile, ParseError> {
    Parser::new(text, ops)?.file()
}

/// Parses and desugars a single term.
pub fn parse_term(text: &str, ops: &OpRegistry) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, ops)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(desugar(&t))
}

/// Parses a term without removing sugar.
pub fn parse_surface(text: &str, ops: &OpRegistry) -> Result<SurfaceTerm, ParseError> {
    let mut p = Parser::new(text, ops)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_type(text: &str) -> Result<Type, ParseError> {
    let ops = OpRegistry::empty();
    let mut p = Parser::new(text, &ops)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}
