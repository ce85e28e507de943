//! Forward and reverse checks of whole programs against finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::flat::{dual_embed, flatten_dual, flatten_value, random_value, unflatten_value, FlatValue};
use super::{rel_err, VerifyError};
use crate::ad::ad_term;
use crate::ast::{Term, Type};
use crate::ops::OpRegistry;
use crate::runtime::{tan_basis, tan_proj, Backend, Env, Machine, Outcome, Tangent, Value, DEFAULT_FUEL};
use crate::surface::SourceFile;
use crate::typecheck::{check_file, elaborate, is_positive_type, kind_check, Context, Lang};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fwd,
    Rev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// A finite-difference probe left the domain or changed the output
    /// shape; no quantitative comparison was made.
    Kink,
    /// Undefined at the point, consistently in both runs.
    Bottom,
    /// A run ran out of fuel, so definedness could not be decided.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckConfig {
    /// Finite-difference step, scaled by `max(1, |x_j|)`.
    pub eps: f64,
    /// Tolerance against finite differences.
    pub tol: f64,
    /// Tolerance between forward and reverse mode.
    pub cross_tol: f64,
    pub fuel: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            eps: 1e-6,
            tol: 1e-5,
            cross_tol: 1e-9,
            fuel: DEFAULT_FUEL,
        }
    }
}

/// A closed source function between positive types, with its transform.
#[derive(Clone, Debug)]
pub struct Program {
    pub name: String,
    pub term: Term,
    pub dual: Term,
    pub input: Type,
    pub output: Type,
}

impl Program {
    pub fn new(name: &str, term: &Term, ty: &Type, ops: &OpRegistry) -> Result<Program, VerifyError> {
        let (input, output) = match ty {
            Type::Arrow(a, b) if is_positive_type(a) && is_positive_type(b) => ((**a).clone(), (**b).clone()),
            _ => return Err(VerifyError::NotAFunction(format!("{name} : {ty}"))),
        };
        if !kind_check(&Default::default(), ty) {
            return Err(VerifyError::NotAFunction(format!("{name} : {ty}")));
        }
        let (term, _) = elaborate(&Context::new(), term, Some(ty), Lang::Source, ops)?;
        let dual = ad_term(&term, ops)?;
        Ok(Program {
            name: name.to_string(),
            term,
            dual,
            input,
            output,
        })
    }

    /// The definition `name` of `file`, closed over the definitions it uses.
    pub fn from_file(file: &SourceFile, name: &str, ops: &OpRegistry) -> Result<Program, VerifyError> {
        let idx = file
            .defs
            .iter()
            .position(|d| d.name == name)
            .ok_or_else(|| VerifyError::MissingDefinition(name.to_string()))?;
        let prefix = SourceFile {
            defs: file.defs[..=idx].to_vec(),
        };
        let checked = check_file(&prefix, Lang::Source, ops).map_err(|e| VerifyError::Type(e.error))?;
        let def = &checked.defs[idx];
        let term = checked.closed_term(name).expect("definition exists");
        Program::new(name, &term, &def.ty, ops)
    }

    fn call(&self, f: &Term, arg: Value, m: &Machine) -> Result<(Outcome, Vec<bool>), VerifyError> {
        let fv = match m.eval(&Env::new(), f)? {
            Outcome::Converged(v) => v,
            bottom => return Ok((bottom, Vec::new())),
        };
        Ok(m.apply_traced(&fv, arg)?)
    }

    /// Runs the program itself.
    pub fn primal(&self, point: &FlatValue, fuel: u64, ops: &OpRegistry) -> Result<Outcome, VerifyError> {
        self.primal_traced(point, fuel, ops).map(|(o, _)| o)
    }

    /// Runs the program, also returning its sequence of `sign` decisions.
    pub fn primal_traced(
        &self,
        point: &FlatValue,
        fuel: u64,
        ops: &OpRegistry,
    ) -> Result<(Outcome, Vec<bool>), VerifyError> {
        let m = Machine::new(ops, Backend::K1).with_fuel(fuel);
        self.call(&self.term, unflatten_value(point)?, &m)
    }

    /// Runs the transformed program on the point paired with `seeds`.
    pub fn dual(
        &self,
        point: &FlatValue,
        seeds: &[Tangent],
        backend: Backend,
        fuel: u64,
        ops: &OpRegistry,
    ) -> Result<Outcome, VerifyError> {
        let m = Machine::new(ops, backend).with_fuel(fuel);
        self.call(&self.dual, dual_embed(point, seeds)?, &m).map(|(o, _)| o)
    }
}

/// A check at one point.
#[derive(Clone, Debug, Serialize)]
pub struct JacobianReport {
    pub program: String,
    pub mode: Mode,
    /// Input slots.
    pub point: Vec<f64>,
    pub input_shape: String,
    pub output_shape: Option<String>,
    /// Forward mode only: the tangent seed.
    pub direction: Option<Vec<f64>>,
    /// `jacobian[i][j]` is the derivative of output slot `i` in input slot `j`.
    pub jacobian: Vec<Vec<f64>>,
    /// Central finite differences, when no probe hit a kink.
    pub oracle: Option<Vec<Vec<f64>>>,
    /// Reverse mode only: largest relative gap to forward mode.
    pub cross_mode_err: Option<f64>,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub kinks: Vec<String>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl JacobianReport {
    fn new(prog: &Program, mode: Mode, point: &FlatValue) -> Self {
        JacobianReport {
            program: prog.name.clone(),
            mode,
            point: point.slots.clone(),
            input_shape: point.shape.to_string(),
            output_shape: None,
            direction: None,
            jacobian: Vec::new(),
            oracle: None,
            cross_mode_err: None,
            max_abs_err: 0.0,
            max_rel_err: 0.0,
            kinks: Vec::new(),
            verdict: Verdict::Pass,
            notes: Vec::new(),
        }
    }

    fn fail(&mut self, note: impl Into<String>) {
        self.verdict = Verdict::Fail;
        self.notes.push(note.into());
    }

    /// Settles the verdict when either run is undefined. Returns true if so.
    fn settle_bottoms(&mut self, primal: &Outcome, dual: &Outcome) -> bool {
        if !primal.is_bottom() && !dual.is_bottom() {
            return false;
        }
        let fuel = |o: &Outcome| matches!(o, Outcome::FuelExhausted(_));
        if fuel(primal) || fuel(dual) {
            self.verdict = Verdict::Inconclusive;
        } else if primal.is_bottom() && dual.is_bottom() {
            self.verdict = Verdict::Bottom;
        } else {
            self.verdict = Verdict::Fail;
        }
        self.notes.push(format!("program: {primal}"));
        self.notes.push(format!("transformed: {dual}"));
        true
    }

    /// Compares the primal part of the dual run with the direct run.
    fn compare_primal(&mut self, direct: &FlatValue, dual: &FlatValue) {
        self.output_shape = Some(direct.shape.to_string());
        let bitwise = direct.shape == dual.shape
            && direct.slots.len() == dual.slots.len()
            && direct
                .slots
                .iter()
                .zip(&dual.slots)
                .all(|(a, b)| a.to_bits() == b.to_bits());
        if !bitwise {
            self.fail(format!(
                "primal part {:?} differs from direct evaluation {:?}",
                dual.slots, direct.slots
            ));
        }
    }

    fn compare_oracle(&mut self, fd: FiniteDiff, tol: f64, extra: &[(f64, f64)]) {
        match fd {
            FiniteDiff::Kink(k) => {
                self.kinks = k;
                if self.verdict == Verdict::Pass {
                    self.verdict = Verdict::Kink;
                }
            }
            FiniteDiff::Jacobian(fd) => {
                let pairs = self
                    .jacobian
                    .iter()
                    .flatten()
                    .zip(fd.iter().flatten())
                    .map(|(a, b)| (*a, *b))
                    .chain(extra.iter().copied());
                for (a, b) in pairs {
                    self.max_abs_err = self.max_abs_err.max((a - b).abs());
                    self.max_rel_err = self.max_rel_err.max(rel_err(a, b));
                }
                if self.max_rel_err > tol {
                    let e = self.max_rel_err;
                    self.fail(format!(
                        "derivative differs from finite differences by {e:e} (tolerance {tol:e})"
                    ));
                }
                self.oracle = Some(fd);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FiniteDiff {
    Jacobian(Vec<Vec<f64>>),
    /// Why the probes could not be used, one entry per offending slot.
    Kink(Vec<String>),
}

/// Central differences in each input slot, with step `eps * max(1, |x_j|)`.
///
/// A probe is unusable, and the point reported as a kink, if it is
/// undefined, if the output shape changes, or if any `sign` decides
/// differently than at the point: then the probe interval contains a point
/// where that `sign` is undefined.
pub fn finite_diff_jacobian(
    prog: &Program,
    point: &FlatValue,
    eps: f64,
    fuel: u64,
    ops: &OpRegistry,
) -> Result<FiniteDiff, VerifyError> {
    let (center, center_trace) = match prog.primal_traced(point, fuel, ops)? {
        (Outcome::Converged(v), trace) => (flatten_value(&v, &prog.output)?, trace),
        (other, _) => return Ok(FiniteDiff::Kink(vec![format!("undefined at the point: {other}")])),
    };
    let n = point.slots.len();
    let mut jac = vec![vec![0.0; n]; center.slots.len()];
    let mut kinks = Vec::new();
    for j in 0..n {
        let x = point.slots[j];
        let h = eps * x.abs().max(1.0);
        let (xp, xm) = (x + h, x - h);
        let probe = |xj: f64| -> Result<Result<FlatValue, String>, VerifyError> {
            let mut slots = point.slots.clone();
            slots[j] = xj;
            Ok(match prog.primal_traced(&point.with_slots(slots), fuel, ops)? {
                (Outcome::Converged(v), trace) => {
                    let f = flatten_value(&v, &prog.output)?;
                    if f.shape != center.shape {
                        Err(format!("slot {j}: output shape changes at {xj:?}"))
                    } else if trace != center_trace {
                        Err(format!(
                            "slot {j}: a sign changes between {:?} and {xj:?}",
                            point.slots[j]
                        ))
                    } else {
                        Ok(f)
                    }
                }
                (other, _) => Err(format!("slot {j}: probe at {xj:?} is undefined: {other}")),
            })
        };
        match (probe(xp)?, probe(xm)?) {
            (Ok(fp), Ok(fm)) => {
                for (i, row) in jac.iter_mut().enumerate() {
                    row[j] = (fp.slots[i] - fm.slots[i]) / (xp - xm);
                }
            }
            (Err(e), _) | (_, Err(e)) => kinks.push(e),
        }
    }
    Ok(if kinks.is_empty() {
        FiniteDiff::Jacobian(jac)
    } else {
        FiniteDiff::Kink(kinks)
    })
}

/// The Jacobian from `n` forward-mode runs, one per basis direction.
/// `Err` describes a run that was undefined.
fn forward_columns(
    prog: &Program,
    point: &FlatValue,
    fuel: u64,
    ops: &OpRegistry,
) -> Result<Result<Vec<Vec<f64>>, String>, VerifyError> {
    let n = point.slots.len();
    let mut jac: Vec<Vec<f64>> = Vec::new();
    for j in 0..n {
        let seeds: Vec<Tangent> = (0..n)
            .map(|k| Tangent::Scalar(if k == j { 1.0 } else { 0.0 }))
            .collect();
        let out = match prog.dual(point, &seeds, Backend::K1, fuel, ops)? {
            Outcome::Converged(v) => v,
            other => return Ok(Err(format!("forward run for slot {j}: {other}"))),
        };
        let (_, tans) = flatten_dual(&out, &prog.output)?;
        if jac.is_empty() {
            jac = vec![vec![0.0; n]; tans.len()];
        }
        for (i, t) in tans.iter().enumerate() {
            jac[i][j] = t.coord(1);
        }
    }
    if n == 0 {
        // No inputs: the Jacobian has no columns but still one row per output.
        if let Outcome::Converged(v) = prog.primal(point, fuel, ops)? {
            jac = vec![Vec::new(); flatten_value(&v, &prog.output)?.slots.len()];
        }
    }
    Ok(Ok(jac))
}

/// Forward mode (`R^1` tangents) at `point` along `direction`.
///
/// The primal part of the transformed run must equal the direct run
/// bitwise. The full Jacobian, assembled from one run per basis direction,
/// and the directional tangent must both match finite differences.
pub fn forward_check(
    prog: &Program,
    point: &FlatValue,
    direction: &[f64],
    cfg: &CheckConfig,
    ops: &OpRegistry,
) -> Result<JacobianReport, VerifyError> {
    let n = point.slots.len();
    if direction.len() != n {
        return Err(VerifyError::LengthMismatch {
            expected: n,
            found: direction.len(),
        });
    }
    let mut report = JacobianReport::new(prog, Mode::Fwd, point);
    report.direction = Some(direction.to_vec());
    let primal = prog.primal(point, cfg.fuel, ops)?;
    let seeds: Vec<Tangent> = direction.iter().map(|d| Tangent::Scalar(*d)).collect();
    let dual = prog.dual(point, &seeds, Backend::K1, cfg.fuel, ops)?;
    if report.settle_bottoms(&primal, &dual) {
        return Ok(report);
    }
    let direct = flatten_value(primal.value().expect("converged"), &prog.output)?;
    let (dual_primal, tans) = flatten_dual(dual.value().expect("converged"), &prog.output)?;
    report.compare_primal(&direct, &dual_primal);
    let directional: Vec<f64> = tans.iter().map(|t| t.coord(1)).collect();

    match forward_columns(prog, point, cfg.fuel, ops)? {
        Ok(jac) => report.jacobian = jac,
        Err(e) => {
            report.fail(e);
            return Ok(report);
        }
    }
    let fd = finite_diff_jacobian(prog, point, cfg.eps, cfg.fuel, ops)?;
    let extra: Vec<(f64, f64)> = match &fd {
        FiniteDiff::Jacobian(j) => directional
            .iter()
            .zip(j)
            .map(|(t, row)| (*t, row.iter().zip(direction).map(|(a, d)| a * d).sum()))
            .collect(),
        FiniteDiff::Kink(_) => Vec::new(),
    };
    report.compare_oracle(fd, cfg.tol, &extra);
    Ok(report)
}

/// Reverse mode (`R^∞` tangents) at `point`: the `j`-th input is seeded with
/// the `j`-th basis vector, and each output tangent, projected to `n`
/// coordinates, is one row of the Jacobian. The rows are compared with
/// forward mode and with finite differences.
pub fn reverse_jacobian(
    prog: &Program,
    point: &FlatValue,
    cfg: &CheckConfig,
    ops: &OpRegistry,
) -> Result<JacobianReport, VerifyError> {
    let n = point.slots.len();
    let mut report = JacobianReport::new(prog, Mode::Rev, point);
    let primal = prog.primal(point, cfg.fuel, ops)?;
    let seeds: Vec<Tangent> = (1..=n as u32).map(|j| tan_basis(j, Backend::KInf)).collect();
    let dual = prog.dual(point, &seeds, Backend::KInf, cfg.fuel, ops)?;
    if report.settle_bottoms(&primal, &dual) {
        return Ok(report);
    }
    let direct = flatten_value(primal.value().expect("converged"), &prog.output)?;
    let (dual_primal, tans) = flatten_dual(dual.value().expect("converged"), &prog.output)?;
    report.compare_primal(&direct, &dual_primal);
    report.jacobian = tans.iter().map(|t| tan_proj(n as u32, t)).collect();

    match forward_columns(prog, point, cfg.fuel, ops)? {
        Ok(fwd) => {
            let cross = report
                .jacobian
                .iter()
                .flatten()
                .zip(fwd.iter().flatten())
                .map(|(a, b)| rel_err(*a, *b))
                .fold(0.0, f64::max);
            report.cross_mode_err = Some(cross);
            if cross > cfg.cross_tol {
                report.fail(format!("reverse and forward mode differ by {cross:e}"));
            }
        }
        Err(e) => report.fail(e),
    }
    let fd = finite_diff_jacobian(prog, point, cfg.eps, cfg.fuel, ops)?;
    report.compare_oracle(fd, cfg.tol, &[]);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    /// Quantitative checks wanted: points that are neither kinks nor ⊥.
    pub trials: usize,
    pub check: CheckConfig,
    pub seed: u64,
    /// Reals in sampled points are uniform on this interval.
    pub range: (f64, f64),
    /// Bound on recursive-type unfoldings in sampled points.
    pub max_depth: usize,
    /// Bound on sampled points, counting kinks and ⊥.
    pub max_attempts: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            trials: 100,
            check: CheckConfig::default(),
            seed: 0,
            range: (-3.0, 3.0),
            max_depth: 6,
            max_attempts: 2000,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ProgramSummary {
    pub program: String,
    pub reports: Vec<JacobianReport>,
    pub passed: usize,
    pub failed: usize,
    pub kinks: usize,
    pub bottoms: usize,
    pub inconclusive: usize,
}

impl ProgramSummary {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }

    /// Points where a quantitative comparison was made.
    pub fn checked(&self) -> usize {
        self.passed + self.failed
    }

    pub fn max_rel_err(&self) -> f64 {
        self.reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max)
    }

    fn record(&mut self, r: JacobianReport) {
        match r.verdict {
            Verdict::Pass => self.passed += 1,
            Verdict::Fail => self.failed += 1,
            Verdict::Kink => self.kinks += 1,
            Verdict::Bottom => self.bottoms += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
        }
        self.reports.push(r);
    }
}

/// Checks `prog` at random points until `trials` quantitative checks were
/// made or `max_attempts` points were drawn. Forward mode uses random
/// directions in `[-1, 1]^n`.
pub fn verify_program(
    prog: &Program,
    mode: Mode,
    cfg: &TrialConfig,
    ops: &OpRegistry,
) -> Result<ProgramSummary, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut summary = ProgramSummary {
        program: prog.name.clone(),
        ..Default::default()
    };
    let mut attempts = 0;
    while summary.checked() < cfg.trials && attempts < cfg.max_attempts {
        attempts += 1;
        let v = random_value(&prog.input, &mut rng, cfg.max_depth, cfg.range)?;
        let point = flatten_value(&v, &prog.input)?;
        let report = match mode {
            Mode::Fwd => {
                let dir: Vec<f64> = (0..point.slots.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                forward_check(prog, &point, &dir, &cfg.check, ops)?
            }
            Mode::Rev => reverse_jacobian(prog, &point, &cfg.check, ops)?,
        };
        summary.record(report);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_term, parse_type};

    fn program(src: &str, ty: &str) -> Program {
        let ops = OpRegistry::standard();
        Program::new("p", &parse_term(src, &ops).unwrap(), &parse_type(ty).unwrap(), &ops).unwrap()
    }

    fn point(xs: &[f64], ty: &str) -> FlatValue {
        let ty = parse_type(ty).unwrap();
        let v = match xs {
            [x] => Value::Real(*x),
            [x, y] => Value::pair(Value::Real(*x), Value::Real(*y)),
            _ => unreachable!(),
        };
        flatten_value(&v, &ty).unwrap()
    }

    fn fd(prog: &Program, p: &FlatValue) -> FiniteDiff {
        finite_diff_jacobian(prog, p, 1e-6, DEFAULT_FUEL, &OpRegistry::standard()).unwrap()
    }

    const RELU: &str = "fun x -> if x then 0.0 else x";

    #[test]
    fn finite_differences() {
        let id = program("fun x -> x", "real -> real");
        match fd(&id, &point(&[5.0], "real")) {
            FiniteDiff::Jacobian(j) => assert!((j[0][0] - 1.0).abs() < 1e-9),
            k => panic!("{k:?}"),
        }
        let relu = program(RELU, "real -> real");
        assert!(matches!(fd(&relu, &point(&[1e-7], "real")), FiniteDiff::Kink(_)));
        let mul = program("fun p -> case p of (x, y) -> x * y", "real * real -> real");
        match fd(&mul, &point(&[3.0, 4.0], "real * real")) {
            FiniteDiff::Jacobian(j) => {
                assert!((j[0][0] - 4.0).abs() < 1e-7);
                assert!((j[0][1] - 3.0).abs() < 1e-7);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn forward_examples() {
        let ops = OpRegistry::standard();
        let cfg = CheckConfig::default();
        let relu = program(RELU, "real -> real");
        let r = forward_check(&relu, &point(&[2.0], "real"), &[1.0], &cfg, &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.jacobian, vec![vec![1.0]]);
        let sig = program("fun x -> sigmoid x", "real -> real");
        let r = forward_check(&sig, &point(&[0.0], "real"), &[1.0], &cfg, &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.jacobian[0][0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bottoms_are_consistent() {
        let ops = OpRegistry::standard();
        let cfg = CheckConfig::default();
        let relu = program(RELU, "real -> real");
        let r = forward_check(&relu, &point(&[0.0], "real"), &[1.0], &cfg, &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Bottom);
        let r = reverse_jacobian(&relu, &point(&[0.0], "real"), &cfg, &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Bottom);
        let loop_ = program("fun x -> (fix f = fun y -> f y) x", "real -> real");
        let small = CheckConfig { fuel: 500, ..cfg };
        let r = forward_check(&loop_, &point(&[1.0], "real"), &[1.0], &small, &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn reverse_examples() {
        let ops = OpRegistry::standard();
        let cfg = CheckConfig::default();
        let mul = program("fun p -> case p of (x, y) -> x * y", "real * real -> real");
        let r = reverse_jacobian(&mul, &point(&[3.0, 4.0], "real * real"), &cfg, &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.jacobian, vec![vec![4.0, 3.0]]);
        let sq = program("fun x -> (x, x * x)", "real -> real * real");
        let r = reverse_jacobian(&sq, &point(&[3.0], "real"), &cfg, &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.jacobian, vec![vec![1.0], vec![6.0]]);
        assert_eq!(r.cross_mode_err, Some(0.0));
    }

    #[test]
    fn a_wrong_derivative_is_caught() {
        // `exp` registered with the derivative of `sin`: the checks must fail.
        use crate::ops::{OpSignature, SampleRange};
        use std::sync::Arc;
        let mut ops = OpRegistry::standard();
        ops.register(
            OpSignature {
                symbol: "bad".into(),
                arity: 1,
                domain: "all of R".into(),
                eval: |a| Some(a[0].exp()),
                partials: vec![|a| a[0].exp()],
                sampling: vec![SampleRange::Interval(-1.0, 1.0)],
            },
            vec![Arc::new(|a: &[Term]| crate::ast::op("cos", vec![a[0].clone()]))],
        )
        .unwrap();
        let t = parse_term("fun x -> bad x", &ops).unwrap();
        let prog = Program::new("bad", &t, &parse_type("real -> real").unwrap(), &ops).unwrap();
        let r = forward_check(&prog, &point(&[0.5], "real"), &[1.0], &CheckConfig::default(), &ops).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let s = verify_program(
            &prog,
            Mode::Rev,
            &TrialConfig {
                trials: 5,
                ..Default::default()
            },
            &ops,
        )
        .unwrap();
        assert!(!s.ok());
    }

    #[test]
    fn trial_runs_are_deterministic() {
        let ops = OpRegistry::standard();
        let relu = program(RELU, "real -> real");
        let cfg = TrialConfig {
            trials: 20,
            ..Default::default()
        };
        let a = verify_program(&relu, Mode::Fwd, &cfg, &ops).unwrap();
        let b = verify_program(&relu, Mode::Fwd, &cfg, &ops).unwrap();
        assert!(a.ok());
        assert_eq!(a.checked(), 20);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
