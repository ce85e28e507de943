//! Numerical checks of the AD transformation.
//!
//! Programs between positive types are evaluated on flattened points. Their
//! transformed versions are evaluated on dual points, and the tangents are
//! compared with central finite differences. Forward and reverse mode are
//! also compared with each other, and every primitive is checked on its own.

mod chain;
mod check;
mod flat;

use thiserror::Error;

pub use chain::{chain_rule_check, ChainRuleReport};
pub use check::{
    finite_diff_jacobian, forward_check, reverse_jacobian, verify_program, CheckConfig, FiniteDiff, JacobianReport,
    Mode, Program, ProgramSummary, TrialConfig, Verdict,
};
pub use flat::{dual_embed, flatten_dual, flatten_value, inhabited, random_value, unflatten_value, FlatValue, Shape};

use crate::ad::AdError;
use crate::runtime::{RuntimeError, Tangent};
use crate::typecheck::TypeError;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum VerifyError {
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("type `{0}` is not positive")]
    NotPositive(String),
    #[error("type `{0}` has no values")]
    Uninhabited(String),
    #[error("value `{value}` does not have type `{ty}`")]
    ValueMismatch { value: String, ty: String },
    #[error("`{0}` is not a function between positive types")]
    NotAFunction(String),
    #[error("no definition named `{0}`")]
    MissingDefinition(String),
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

/// Pairs each coordinate with its tangent.
pub fn interleave(x: &[f64], w: &[Tangent]) -> Result<Vec<(f64, Tangent)>, VerifyError> {
    if x.len() != w.len() {
        return Err(VerifyError::LengthMismatch {
            expected: x.len(),
            found: w.len(),
        });
    }
    Ok(x.iter().copied().zip(w.iter().cloned()).collect())
}

pub fn deinterleave(dual: &[(f64, Tangent)]) -> (Vec<f64>, Vec<Tangent>) {
    dual.iter().cloned().unzip()
}

/// `|a - b| / max(|a|, |b|, 1)`: relative for large magnitudes, absolute
/// near zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / a.abs().max(b.abs()).max(1.0)
}
