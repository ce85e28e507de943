//! Call-by-value evaluation with explicit partiality.
//!
//! Evaluation ends in an [`Outcome`]: a value, a domain error (a primitive
//! or `sign` applied outside its open domain, or a non-finite result), or
//! exhaustion of the step budget. The last two both stand for the
//! undefined result ⊥ and differ only in diagnostics.

mod eval;
mod tangent;

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

pub use eval::{apply, eval, Machine, DEFAULT_FUEL};
pub use tangent::{tan_add, tan_basis, tan_proj, tan_scale, tan_zero, Backend, Tangent};

use crate::ast::{Name, Term};
use crate::ops::OpRegistry;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Tan(Tangent),
    Unit,
    Inl(Rc<Value>),
    Inr(Rc<Value>),
    Pair(Rc<Value>, Rc<Value>),
    Closure(Rc<Closure>),
    Roll(Rc<Value>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Closure {
    pub env: Env,
    pub param: Name,
    pub body: Rc<Term>,
}

impl Value {
    pub fn inl(v: Value) -> Value {
        Value::Inl(Rc::new(v))
    }

    pub fn inr(v: Value) -> Value {
        Value::Inr(Rc::new(v))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Rc::new(a), Rc::new(b))
    }

    pub fn roll(v: Value) -> Value {
        Value::Roll(Rc::new(v))
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    /// A list in the encoding `mu a. unit + (real * a)`.
    pub fn real_list(xs: &[f64]) -> Value {
        xs.iter().rev().fold(Value::roll(Value::inl(Value::Unit)), |tail, x| {
            Value::roll(Value::inr(Value::pair(Value::Real(*x), tail)))
        })
    }

    /// True iff no real or tangent coordinate reachable without entering a
    /// closure is NaN or infinite.
    pub fn all_finite(&self) -> bool {
        match self {
            Value::Real(x) => x.is_finite(),
            Value::Tan(t) => t.is_finite(),
            Value::Unit | Value::Closure(_) => true,
            Value::Inl(v) | Value::Inr(v) | Value::Roll(v) => v.all_finite(),
            Value::Pair(a, b) => a.all_finite() && b.all_finite(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(v: &Value) -> String {
            match v {
                Value::Inl(_) | Value::Inr(_) | Value::Roll(_) => format!("({v})"),
                Value::Real(x) if x.is_sign_negative() => format!("({v})"),
                _ => v.to_string(),
            }
        }
        match self {
            Value::Real(x) => write!(f, "{x:?}"),
            Value::Tan(t) => write!(f, "{t}"),
            Value::Unit => f.write_str("()"),
            Value::Inl(v) => write!(f, "inl {}", atom(v)),
            Value::Inr(v) => write!(f, "inr {}", atom(v)),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::Closure(c) => write!(f, "<fun {}>", c.param),
            Value::Roll(v) => write!(f, "roll {}", atom(v)),
        }
    }
}

/// A persistent environment: a linked list of bindings, innermost first.
#[derive(Clone, Default, PartialEq)]
pub struct Env(Option<Rc<EnvNode>>);

#[derive(PartialEq)]
struct EnvNode {
    name: Name,
    value: Value,
    next: Env,
}

impl Env {
    pub fn new() -> Self {
        Env(None)
    }

    pub fn bind(&self, name: &str, value: Value) -> Env {
        Env(Some(Rc::new(EnvNode {
            name: name.to_string(),
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.next.0;
        }
        None
    }

    /// Bindings from innermost to outermost, shadowed ones included.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        let mut cur = &self.0;
        std::iter::from_fn(move || {
            let node = cur.as_ref()?;
            cur = &node.next.0;
            Some((node.name.as_str(), &node.value))
        })
    }
}

impl fmt::Debug for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

/// The result of an evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Converged(Value),
    DomainError {
        op: String,
        args: Vec<f64>,
        /// The offending subterm, printed.
        position: String,
    },
    /// The step budget ran out after this many steps.
    FuelExhausted(u64),
}

impl Outcome {
    pub fn is_bottom(&self) -> bool {
        !matches!(self, Outcome::Converged(_))
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Outcome::Converged(v) => Some(v),
            _ => None,
        }
    }

    pub fn into_value(self) -> Option<Value> {
        match self {
            Outcome::Converged(v) => Some(v),
            _ => None,
        }
    }

    /// Equality of meaning: equal values, or both ⊥.
    pub fn same_meaning(&self, other: &Outcome) -> bool {
        match (self, other) {
            (Outcome::Converged(a), Outcome::Converged(b)) => a == b,
            (a, b) => a.is_bottom() && b.is_bottom(),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Converged(v) => write!(f, "{v}"),
            Outcome::DomainError { op, args, position } => {
                let args: Vec<String> = args.iter().map(|a| format!("{a:?}")).collect();
                write!(
                    f,
                    "domain error at `{position}`: {op}({}) is undefined",
                    args.join(", ")
                )
            }
            Outcome::FuelExhausted(n) => write!(f, "fuel exhausted after {n} steps"),
        }
    }
}

/// A primitive applied outside its domain.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("{op} is undefined at {args:?}")]
pub struct PrimError {
    pub op: String,
    pub args: Vec<f64>,
}

/// The program is not well typed, so evaluation went wrong.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("evaluation went wrong: {0}")]
pub struct RuntimeError(pub String);

/// Applies a registered primitive. Results that are not finite count as
/// leaving the domain.
///
/// # Panics
/// If `op` is not registered or the argument count is wrong.
pub fn apply_prim(ops: &OpRegistry, op: &str, args: &[f64]) -> Result<f64, PrimError> {
    let reg = ops.get(op).unwrap_or_else(|| panic!("unknown operation `{op}`"));
    assert_eq!(reg.sig.arity, args.len(), "arity of `{op}`");
    match (reg.sig.eval)(args) {
        Some(y) if y.is_finite() => Ok(y),
        _ => Err(PrimError {
            op: op.to_string(),
            args: args.to_vec(),
        }),
    }
}

/// `inl ()` for negative reals, `inr ()` for positive ones, undefined at 0.
pub fn sign_sem(x: f64) -> Result<Value, PrimError> {
    if x < 0.0 {
        Ok(Value::inl(Value::Unit))
    } else if x > 0.0 {
        Ok(Value::inr(Value::Unit))
    } else {
        Err(PrimError {
            op: "sign".into(),
            args: vec![x],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitives() {
        let ops = OpRegistry::standard();
        assert_eq!(apply_prim(&ops, "+", &[1.5, 2.0]), Ok(3.5));
        assert!(apply_prim(&ops, "/", &[1.0, 0.0]).is_err());
        assert_eq!(apply_prim(&ops, "log", &[1.0]), Ok(0.0));
        assert!(apply_prim(&ops, "log", &[0.0]).is_err());
        assert!(apply_prim(&ops, "sqrt", &[0.0]).is_err());
        assert!(apply_prim(&ops, "exp", &[1000.0]).is_err());
        assert!(apply_prim(&ops, "*", &[1e200, 1e200]).is_err());
    }

    #[test]
    fn sign() {
        assert_eq!(sign_sem(-3.0), Ok(Value::inl(Value::Unit)));
        assert_eq!(sign_sem(3.0), Ok(Value::inr(Value::Unit)));
        assert!(sign_sem(0.0).is_err());
        assert!(sign_sem(-0.0).is_err());
    }

    #[test]
    fn environments_shadow() {
        let e = Env::new().bind("x", Value::Real(1.0)).bind("x", Value::Unit);
        assert_eq!(e.lookup("x"), Some(&Value::Unit));
        assert_eq!(e.iter().count(), 2);
        assert_eq!(e.lookup("y"), None);
    }

    #[test]
    fn outcomes_compare_by_meaning() {
        let a = Outcome::DomainError {
            op: "sign".into(),
            args: vec![0.0],
            position: "sign x".into(),
        };
        assert!(a.same_meaning(&Outcome::FuelExhausted(10)));
        assert!(!a.same_meaning(&Outcome::Converged(Value::Unit)));
    }

    #[test]
    fn value_display() {
        assert_eq!(Value::real_list(&[1.5]).to_string(), "roll (inr (1.5, roll (inl ())))");
        assert_eq!(Value::pair(Value::Real(-1.0), Value::Unit).to_string(), "(-1.0, ())");
    }
}
