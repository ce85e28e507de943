//! The transform of a single primitive against its analytic derivative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{rel_err, VerifyError};
use crate::ad::ad_term;
use crate::ast::Term;
use crate::ops::{OpRegistry, SampleRange};
use crate::runtime::{apply_prim, tan_basis, Backend, Env, Machine, Outcome, Value};

#[derive(Clone, Debug, Serialize)]
pub struct ChainRuleReport {
    pub op: String,
    pub trials: usize,
    /// Largest gap between the transformed tangent and the analytic partials.
    pub max_rel_err_analytic: f64,
    /// Largest gap between the transformed tangent and finite differences.
    pub max_rel_err_fd: f64,
    /// Arguments at which the larger of the two gaps was largest.
    pub worst_point: Vec<f64>,
    /// Failures: wrong primal, undefined transform, or a gap above tolerance.
    pub failures: Vec<String>,
}

impl ChainRuleReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn sample<R: Rng>(range: SampleRange, rng: &mut R) -> f64 {
    match range {
        SampleRange::Interval(lo, hi) => rng.gen_range(lo..=hi),
        SampleRange::AwayFromZero(lo, hi) => {
            let x = rng.gen_range(lo..=hi);
            if rng.gen_bool(0.5) {
                -x
            } else {
                x
            }
        }
    }
}

/// Evaluates `D(op(x1..xn))` with `xj` bound to `(aj, e_j)` over `R^∞`, at
/// `trials` points drawn from the op's sampling ranges. The tangent must
/// hold the gradient: it is compared with the analytic partials and with
/// central differences of step `eps * max(1, |aj|)`.
pub fn chain_rule_check(
    op: &str,
    trials: usize,
    seed: u64,
    eps: f64,
    tol: f64,
    ops: &OpRegistry,
) -> Result<ChainRuleReport, VerifyError> {
    let reg = ops.get(op).ok_or_else(|| VerifyError::UnknownOp(op.to_string()))?;
    let n = reg.sig.arity;
    let names: Vec<String> = (1..=n).map(|j| format!("a{j}")).collect();
    let term = Term::Op(op.to_string(), names.iter().map(|x| Term::Var(x.clone())).collect());
    let dual = ad_term(&term, ops)?;
    let machine = Machine::new(ops, Backend::KInf);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ChainRuleReport {
        op: op.to_string(),
        trials,
        max_rel_err_analytic: 0.0,
        max_rel_err_fd: 0.0,
        worst_point: Vec::new(),
        failures: Vec::new(),
    };
    let mut worst = -1.0;
    for _ in 0..trials {
        let args: Vec<f64> = reg.sig.sampling.iter().map(|r| sample(*r, &mut rng)).collect();
        let env = names
            .iter()
            .zip(&args)
            .enumerate()
            .fold(Env::new(), |env, (j, (x, a))| {
                env.bind(
                    x,
                    Value::pair(Value::Real(*a), Value::Tan(tan_basis(j as u32 + 1, Backend::KInf))),
                )
            });
        let expected = match apply_prim(ops, op, &args) {
            Ok(y) => y,
            Err(e) => {
                report.failures.push(format!("sampled outside the domain: {e}"));
                continue;
            }
        };
        let (value, tangent) = match machine.eval(&env, &dual)? {
            Outcome::Converged(Value::Pair(v, t)) => match (&*v, &*t) {
                (Value::Real(v), Value::Tan(t)) => (*v, t.clone()),
                _ => unreachable!("typed as real * tangent"),
            },
            other => {
                report
                    .failures
                    .push(format!("transform undefined at {args:?}: {other}"));
                continue;
            }
        };
        if value.to_bits() != expected.to_bits() {
            report
                .failures
                .push(format!("primal {value:?} differs from {expected:?} at {args:?}"));
        }
        let mut point_worst: f64 = 0.0;
        for j in 0..n {
            let got = tangent.coord(j as u32 + 1);
            let analytic = (reg.sig.partials[j])(&args);
            let h = eps * args[j].abs().max(1.0);
            let mut plus = args.clone();
            let mut minus = args.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = match (apply_prim(ops, op, &plus), apply_prim(ops, op, &minus)) {
                (Ok(p), Ok(m)) => (p - m) / (plus[j] - minus[j]),
                (Err(e), _) | (_, Err(e)) => {
                    report
                        .failures
                        .push(format!("finite-difference probe left the domain: {e}"));
                    continue;
                }
            };
            let ea = rel_err(got, analytic);
            let ef = rel_err(got, fd);
            report.max_rel_err_analytic = report.max_rel_err_analytic.max(ea);
            report.max_rel_err_fd = report.max_rel_err_fd.max(ef);
            point_worst = point_worst.max(ea).max(ef);
            if ea > tol || ef > tol {
                report.failures.push(format!(
                    "partial {} at {args:?}: transform {got:?}, analytic {analytic:?}, finite differences {fd:?}",
                    j + 1
                ));
            }
        }
        if tangent.coord(n as u32 + 1) != 0.0 {
            report
                .failures
                .push(format!("tangent leaks into coordinate {} at {args:?}", n + 1));
        }
        if point_worst > worst {
            worst = point_worst;
            report.worst_point = args;
        }
    }
    Ok(report)
}
