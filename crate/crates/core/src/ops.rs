//! Primitive real operations.
//!
//! Each operation is a partial function `R^n -> R` defined on an open set.
//! Its entry in the [`OpRegistry`] carries three things that must agree:
//! the numeric semantics used by the evaluator, analytic partial derivatives
//! (used as a test oracle), and source-language terms for the partial
//! derivatives, which the AD transformation splices into its output.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{self, Term};

/// Builds the source term for one partial derivative from the argument terms.
pub type DerivBuilder = Arc<dyn Fn(&[Term]) -> Term + Send + Sync>;

/// Where test harnesses draw in-domain sample points for one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleRange {
    /// Uniform on `[lo, hi]`.
    Interval(f64, f64),
    /// Uniform on `[-hi, -lo] ∪ [lo, hi]`.
    AwayFromZero(f64, f64),
}

#[derive(Clone)]
pub struct OpSignature {
    pub symbol: String,
    pub arity: usize,
    /// Human-readable description of the open domain.
    pub domain: String,
    /// The operation itself; `None` outside the domain.
    pub eval: fn(&[f64]) -> Option<f64>,
    /// Analytic partial derivatives, one per argument, valid on the domain.
    pub partials: Vec<fn(&[f64]) -> f64>,
    pub sampling: Vec<SampleRange>,
}

impl fmt::Debug for OpSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpSignature")
            .field("symbol", &self.symbol)
            .field("arity", &self.arity)
            .field("domain", &self.domain)
            .finish()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("operation `{0}` is already registered")]
    Duplicate(String),
    #[error("operation `{symbol}` has arity {arity} but {found} {what} were supplied")]
    ArityMismatch {
        symbol: String,
        arity: usize,
        found: usize,
        what: &'static str,
    },
}

#[derive(Clone)]
pub struct RegisteredOp {
    pub sig: OpSignature,
    pub derivs: Vec<DerivBuilder>,
}

impl RegisteredOp {
    /// The source term `∂_j op(args)` (zero-based `j`).
    pub fn partial_term(&self, j: usize, args: &[Term]) -> Term {
        (self.derivs[j])(args)
    }
}

/// The set of primitive operations known to the parser, typechecker,
/// evaluator and AD transformation. Built once, then shared read-only.
#[derive(Clone, Default)]
pub struct OpRegistry {
    ops: BTreeMap<String, RegisteredOp>,
}

impl fmt::Debug for OpRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.ops.keys()).finish()
    }
}

/// Symbols written infix in the concrete syntax.
pub const INFIX: [&str; 4] = ["+", "-", "*", "/"];

impl OpRegistry {
    pub fn empty() -> Self {
        OpRegistry::default()
    }

    pub fn register(&mut self, sig: OpSignature, derivs: Vec<DerivBuilder>) -> Result<(), RegistryError> {
        if self.ops.contains_key(&sig.symbol) {
            return Err(RegistryError::Duplicate(sig.symbol));
        }
        for (found, what) in [
            (derivs.len(), "derivative terms"),
            (sig.partials.len(), "partial evaluators"),
            (sig.sampling.len(), "sampling ranges"),
        ] {
            if found != sig.arity {
                return Err(RegistryError::ArityMismatch {
                    symbol: sig.symbol.clone(),
                    arity: sig.arity,
                    found,
                    what,
                });
            }
        }
        self.ops.insert(sig.symbol.clone(), RegisteredOp { sig, derivs });
        Ok(())
    }

    pub fn get(&self, symbol: &str) -> Option<&RegisteredOp> {
        self.ops.get(symbol)
    }

    pub fn arity(&self, symbol: &str) -> Option<usize> {
        self.ops.get(symbol).map(|o| o.sig.arity)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RegisteredOp> {
        self.ops.values()
    }

    /// The built-in operations: arithmetic, `neg`, `exp`, `log`, `sqrt`,
    /// `sin`, `cos`, `tanh`, `sigmoid`, and the constant `pi`.
    pub fn standard() -> Self {
        let mut r = OpRegistry::empty();
        for (sig, derivs) in standard_ops() {
            r.register(sig, derivs).expect("standard ops are consistent");
        }
        r
    }
}

fn builder(f: impl Fn(&[Term]) -> Term + Send + Sync + 'static) -> DerivBuilder {
    Arc::new(f)
}

fn c(x: f64) -> Term {
    Term::Const(x)
}

fn un(symbol: &str, a: &Term) -> Term {
    ast::op(symbol, vec![a.clone()])
}

fn bin(symbol: &str, a: Term, b: Term) -> Term {
    ast::op(symbol, vec![a, b])
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[allow(clippy::type_complexity)]
fn standard_ops() -> Vec<(OpSignature, Vec<DerivBuilder>)> {
    use SampleRange::*;
    let sig = |symbol: &str,
               domain: &str,
               eval: fn(&[f64]) -> Option<f64>,
               partials: Vec<fn(&[f64]) -> f64>,
               sampling: Vec<SampleRange>| OpSignature {
        symbol: symbol.to_string(),
        arity: partials.len(),
        domain: domain.to_string(),
        eval,
        partials,
        sampling,
    };
    let wide = Interval(-5.0, 5.0);
    vec![
        (
            sig(
                "+",
                "all of R^2",
                |a| finite(a[0] + a[1]),
                vec![|_| 1.0, |_| 1.0],
                vec![wide, wide],
            ),
            vec![builder(|_| c(1.0)), builder(|_| c(1.0))],
        ),
        (
            sig(
                "-",
                "all of R^2",
                |a| finite(a[0] - a[1]),
                vec![|_| 1.0, |_| -1.0],
                vec![wide, wide],
            ),
            vec![builder(|_| c(1.0)), builder(|_| c(-1.0))],
        ),
        (
            sig(
                "*",
                "all of R^2",
                |a| finite(a[0] * a[1]),
                vec![|a| a[1], |a| a[0]],
                vec![wide, wide],
            ),
            vec![builder(|a| a[1].clone()), builder(|a| a[0].clone())],
        ),
        (
            sig(
                "/",
                "second argument nonzero",
                |a| if a[1] == 0.0 { None } else { finite(a[0] / a[1]) },
                vec![|a| 1.0 / a[1], |a| -a[0] / (a[1] * a[1])],
                vec![wide, AwayFromZero(0.1, 5.0)],
            ),
            vec![
                builder(|a| bin("/", c(1.0), a[1].clone())),
                builder(|a| un("neg", &bin("/", a[0].clone(), bin("*", a[1].clone(), a[1].clone())))),
            ],
        ),
        (
            sig("neg", "all of R", |a| Some(-a[0]), vec![|_| -1.0], vec![wide]),
            vec![builder(|_| c(-1.0))],
        ),
        (
            sig(
                "exp",
                "all of R",
                |a| finite(a[0].exp()),
                vec![|a| a[0].exp()],
                vec![wide],
            ),
            vec![builder(|a| un("exp", &a[0]))],
        ),
        (
            sig(
                "log",
                "x > 0",
                |a| if a[0] > 0.0 { finite(a[0].ln()) } else { None },
                vec![|a| 1.0 / a[0]],
                vec![Interval(0.1, 100.0)],
            ),
            vec![builder(|a| bin("/", c(1.0), a[0].clone()))],
        ),
        (
            sig(
                "sqrt",
                "x > 0",
                |a| if a[0] > 0.0 { finite(a[0].sqrt()) } else { None },
                vec![|a| 0.5 / a[0].sqrt()],
                vec![Interval(0.1, 100.0)],
            ),
            vec![builder(|a| bin("/", c(0.5), un("sqrt", &a[0])))],
        ),
        (
            sig(
                "sin",
                "all of R",
                |a| finite(a[0].sin()),
                vec![|a| a[0].cos()],
                vec![wide],
            ),
            vec![builder(|a| un("cos", &a[0]))],
        ),
        (
            sig(
                "cos",
                "all of R",
                |a| finite(a[0].cos()),
                vec![|a| -a[0].sin()],
                vec![wide],
            ),
            vec![builder(|a| un("neg", &un("sin", &a[0])))],
        ),
        (
            sig(
                "tanh",
                "all of R",
                |a| finite(a[0].tanh()),
                vec![|a| 1.0 - a[0].tanh() * a[0].tanh()],
                vec![wide],
            ),
            vec![builder(|a| {
                bin("-", c(1.0), bin("*", un("tanh", &a[0]), un("tanh", &a[0])))
            })],
        ),
        (
            sig(
                "sigmoid",
                "all of R",
                |a| finite(sigmoid(a[0])),
                vec![|a| sigmoid(a[0]) * (1.0 - sigmoid(a[0]))],
                vec![wide],
            ),
            vec![builder(|a| {
                bin("*", un("sigmoid", &a[0]), bin("-", c(1.0), un("sigmoid", &a[0])))
            })],
        ),
        (sig("pi", "R^0", |_| Some(std::f64::consts::PI), vec![], vec![]), vec![]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn div_sig() -> OpSignature {
        OpRegistry::standard().get("/").unwrap().sig.clone()
    }

    #[test]
    fn duplicate_symbol_is_rejected() {
        let mut r = OpRegistry::standard();
        let d = r.get("/").unwrap().clone();
        assert_eq!(r.register(d.sig, d.derivs), Err(RegistryError::Duplicate("/".into())));
    }

    #[test]
    fn arity_must_match_derivatives() {
        let mut r = OpRegistry::empty();
        let err = r.register(div_sig(), vec![builder(|_| c(1.0))]).unwrap_err();
        assert!(matches!(err, RegistryError::ArityMismatch { found: 1, .. }));
    }

    #[test]
    fn registering_new_ops() {
        let mut r = OpRegistry::empty();
        let d = OpRegistry::standard().get("/").unwrap().clone();
        r.register(d.sig, d.derivs).unwrap();
        let s = OpRegistry::standard().get("sin").unwrap().clone();
        r.register(s.sig, s.derivs).unwrap();
        let g = OpRegistry::standard().get("sigmoid").unwrap().clone();
        r.register(g.sig, g.derivs).unwrap();
        assert_eq!(r.symbols().collect::<Vec<_>>(), vec!["/", "sigmoid", "sin"]);
        assert_eq!(r.arity("/"), Some(2));
    }

    #[test]
    fn numeric_partials_match_known_values() {
        let r = OpRegistry::standard();
        let sig = &r.get("sigmoid").unwrap().sig;
        assert_eq!((sig.partials[0])(&[0.0]), 0.25);
        let div = &r.get("/").unwrap().sig;
        assert_eq!((div.partials[1])(&[3.0, 2.0]), -0.75);
        assert_eq!((div.eval)(&[1.0, 0.0]), None);
    }
}
