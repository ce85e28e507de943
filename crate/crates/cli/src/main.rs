use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dualfpc::ad::{ad_term, ad_type};
use dualfpc::ast::Type;
use dualfpc::ops::OpRegistry;
use dualfpc::runtime::{tan_basis, tan_proj, Backend, Env, Machine, Outcome, Tangent, Value, DEFAULT_FUEL};
use dualfpc::surface::{parse, parse_term, pretty_type, Definition, SourceFile};
use dualfpc::typecheck::{check_file, elaborate, is_positive_type, Context, Lang};
use dualfpc::verify::{
    flatten_dual, flatten_value, unflatten_value, verify_program, CheckConfig, FlatValue, Mode, Program,
    ProgramSummary, TrialConfig, Verdict, VerifyError,
};

#[derive(Parser)]
#[command(name = "dualfpc", version, about = "Check, run and differentiate dualfpc programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Typechecks every definition and prints its type.
    Check {
        file: PathBuf,
        /// Check as a target-language program, which may use tangents.
        #[arg(long)]
        target: bool,
    },
    /// Evaluates a definition, applied to the given arguments.
    Run {
        file: PathBuf,
        /// Arguments, one source term each, e.g. `2.0` or `(1.0, inl ())`.
        args: Vec<String>,
        #[command(flatten)]
        entry: Entry,
        #[arg(long, default_value_t = DEFAULT_FUEL, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
    },
    /// Prints the transformed program as a target-language file.
    Ad {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Fwd)]
        mode: ModeArg,
    },
    /// Forward mode: the derivative of a definition at a point along a direction.
    Jvp {
        file: PathBuf,
        #[command(flatten)]
        entry: Entry,
        /// The point, as a source term.
        #[arg(long)]
        at: String,
        /// One real per input slot, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        dir: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_FUEL, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
        #[arg(long)]
        json: bool,
    },
    /// Reverse mode: the Jacobian of a definition at a point, one row per output slot.
    Grad {
        file: PathBuf,
        #[command(flatten)]
        entry: Entry,
        /// The point, as a source term.
        #[arg(long)]
        at: String,
        #[arg(long, default_value_t = DEFAULT_FUEL, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
        #[arg(long)]
        json: bool,
    },
    /// Compares derivatives with finite differences at random points.
    Verify {
        file: PathBuf,
        /// Only this definition; by default every function between positive types.
        #[arg(long)]
        entry: Option<String>,
        /// Only this mode; by default both.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 1e-6, value_parser = positive)]
        eps: f64,
        #[arg(long, default_value_t = 1e-5, value_parser = positive)]
        tol: f64,
        #[arg(long, env = "DUALFPC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FUEL, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct Entry {
    /// The definition to use; by default `main`, or else the last one.
    #[arg(long)]
    entry: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fwd,
    Rev,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Fwd => Mode::Fwd,
            ModeArg::Rev => Mode::Rev,
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// Exit codes.
const PARSE: u8 = 1;
const TYPE: u8 = 2;
const BOTTOM: u8 = 3;
const TOLERANCE: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

fn fail<T>(code: u8, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure {
        code,
        message: message.into(),
    })
}

fn verify_failure(e: VerifyError) -> Failure {
    let code = match e {
        VerifyError::LengthMismatch { .. } => PARSE,
        _ => TYPE,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn load(path: &Path, ops: &OpRegistry) -> Result<SourceFile, Failure> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(PARSE, format!("{}: {e}", path.display())),
    };
    parse(&text, ops).or_else(|e| fail(PARSE, format!("{}:{e}", path.display())))
}

fn checked(path: &Path, lang: Lang, ops: &OpRegistry) -> Result<SourceFile, Failure> {
    let file = load(path, ops)?;
    check_file(&file, lang, ops).or_else(|e| fail(TYPE, format!("{}: {e}", path.display())))
}

fn entry<'f>(file: &'f SourceFile, name: Option<&str>) -> Result<&'f Definition, Failure> {
    let def = match name {
        Some(n) => file.get(n),
        None => file.main().or(file.defs.last()),
    };
    match def {
        Some(d) => Ok(d),
        None => fail(TYPE, format!("no definition named `{}`", name.unwrap_or("main"))),
    }
}

/// Elaborates `text` against `ty` and evaluates it.
fn argument(text: &str, ty: &Type, ops: &OpRegistry) -> Result<Value, Failure> {
    let t = parse_term(text, ops).or_else(|e| fail(PARSE, format!("argument `{text}`: {e}")))?;
    let (t, _) = elaborate(&Context::new(), &t, Some(ty), Lang::Source, ops)
        .or_else(|e| fail(TYPE, format!("argument `{text}`: {e}")))?;
    match Machine::new(ops, Backend::K1).eval(&Env::new(), &t) {
        Ok(Outcome::Converged(v)) => Ok(v),
        Ok(o) => fail(BOTTOM, format!("argument `{text}`: {o}")),
        Err(e) => fail(TYPE, e.to_string()),
    }
}

fn point(prog: &Program, text: &str, ops: &OpRegistry) -> Result<FlatValue, Failure> {
    let v = argument(text, &prog.input, ops)?;
    flatten_value(&v, &prog.input).map_err(verify_failure)
}

fn converged(o: Outcome) -> Result<Value, Failure> {
    match o {
        Outcome::Converged(v) => Ok(v),
        o => fail(BOTTOM, o.to_string()),
    }
}

fn format_reals(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn cmd_check(path: &Path, target: bool, ops: &OpRegistry) -> Result<(), Failure> {
    let lang = if target { Lang::Target } else { Lang::Source };
    for d in checked(path, lang, ops)?.defs {
        println!("{} : {}", d.name, pretty_type(&d.ty));
    }
    Ok(())
}

fn cmd_run(path: &Path, args: &[String], name: Option<&str>, fuel: u64, ops: &OpRegistry) -> Result<(), Failure> {
    let file = checked(path, Lang::Source, ops)?;
    let def = entry(&file, name)?;
    let term = file.closed_term(&def.name).expect("definition exists");
    let m = Machine::new(ops, Backend::K1).with_fuel(fuel);
    let mut out = m.eval(&Env::new(), &term).or_else(|e| fail(TYPE, e.to_string()))?;
    let mut ty = def.ty.clone();
    for a in args {
        let (dom, cod) = match ty {
            Type::Arrow(a, b) => (*a, *b),
            _ => return fail(TYPE, format!("`{}` applied to too many arguments", def.name)),
        };
        let f = converged(out)?;
        let v = argument(a, &dom, ops)?;
        out = m.apply(&f, v).or_else(|e| fail(TYPE, e.to_string()))?;
        ty = cod;
    }
    println!("{out}");
    if out.is_bottom() {
        return fail(BOTTOM, "");
    }
    Ok(())
}

fn cmd_ad(path: &Path, mode: ModeArg, ops: &OpRegistry) -> Result<(), Failure> {
    let file = checked(path, Lang::Source, ops)?;
    let mut out = SourceFile::default();
    for d in &file.defs {
        let term = ad_term(&d.term, ops).or_else(|e| fail(TYPE, format!("`{}`: {e}", d.name)))?;
        let ty = ad_type(&d.ty).or_else(|e| fail(TYPE, format!("`{}`: {e}", d.name)))?;
        out.defs.push(Definition {
            name: d.name.clone(),
            ty,
            term,
            line: d.line,
        });
    }
    let tangent = match mode {
        ModeArg::Fwd => "R^1, forward mode",
        ModeArg::Rev => "R^k, reverse mode",
    };
    println!("-- tangent = {tangent}\n");
    print!("{}", out.pretty());
    Ok(())
}

fn program(path: &Path, name: Option<&str>, ops: &OpRegistry) -> Result<Program, Failure> {
    let file = checked(path, Lang::Source, ops)?;
    let def = entry(&file, name)?;
    Program::from_file(&file, &def.name, ops).map_err(verify_failure)
}

fn cmd_jvp(
    path: &Path,
    name: Option<&str>,
    at: &str,
    dir: &[f64],
    fuel: u64,
    json: bool,
    ops: &OpRegistry,
) -> Result<(), Failure> {
    let prog = program(path, name, ops)?;
    let pt = point(&prog, at, ops)?;
    if dir.len() != pt.slots.len() {
        return fail(
            PARSE,
            format!("--dir needs {} entries, found {}", pt.slots.len(), dir.len()),
        );
    }
    let seeds: Vec<Tangent> = dir.iter().map(|d| Tangent::Scalar(*d)).collect();
    let out = converged(prog.dual(&pt, &seeds, Backend::K1, fuel, ops).map_err(verify_failure)?)?;
    let (primal, tans) = flatten_dual(&out, &prog.output).map_err(verify_failure)?;
    let value = unflatten_value(&primal).map_err(verify_failure)?;
    let tangent: Vec<f64> = tans.iter().map(|t| t.coord(1)).collect();
    if json {
        let report = serde_json::json!({
            "program": prog.name,
            "point": pt.slots,
            "direction": dir,
            "value": value.to_string(),
            "tangent": tangent,
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        println!("value: {value}");
        println!("tangent: {}", format_reals(&tangent));
    }
    Ok(())
}

fn cmd_grad(path: &Path, name: Option<&str>, at: &str, fuel: u64, json: bool, ops: &OpRegistry) -> Result<(), Failure> {
    let prog = program(path, name, ops)?;
    let pt = point(&prog, at, ops)?;
    let n = pt.slots.len() as u32;
    let seeds: Vec<Tangent> = (1..=n).map(|j| tan_basis(j, Backend::KInf)).collect();
    let out = converged(
        prog.dual(&pt, &seeds, Backend::KInf, fuel, ops)
            .map_err(verify_failure)?,
    )?;
    let (primal, tans) = flatten_dual(&out, &prog.output).map_err(verify_failure)?;
    let value = unflatten_value(&primal).map_err(verify_failure)?;
    let rows: Vec<Vec<f64>> = tans.iter().map(|t| tan_proj(n, t)).collect();
    if json {
        let report = serde_json::json!({
            "program": prog.name,
            "point": pt.slots,
            "value": value.to_string(),
            "jacobian": rows,
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        println!("value: {value}");
        match rows.as_slice() {
            [row] => println!("gradient: {}", format_reals(row)),
            _ => {
                println!("jacobian:");
                for row in &rows {
                    println!("  {}", format_reals(row));
                }
            }
        }
    }
    Ok(())
}

fn is_program(d: &Definition) -> bool {
    matches!(&d.ty, Type::Arrow(a, b) if is_positive_type(a) && is_positive_type(b))
}

fn print_summary(s: &ProgramSummary, mode: Mode) {
    let mode = serde_json::to_value(mode).expect("serializable");
    let status = if s.ok() { "pass" } else { "FAIL" };
    println!(
        "{} {}: {status}, {} checked, {} kinks, {} undefined, {} inconclusive, max rel err {:.2e}",
        s.program,
        mode.as_str().unwrap_or("?"),
        s.checked(),
        s.kinks,
        s.bottoms,
        s.inconclusive,
        s.max_rel_err()
    );
    for r in &s.reports {
        match r.verdict {
            Verdict::Fail => println!("  fail at {}: {}", format_reals(&r.point), r.notes.join("; ")),
            Verdict::Kink => println!("  kink at {}", format_reals(&r.point)),
            _ => {}
        }
    }
}

struct VerifyArgs<'a> {
    entry: Option<&'a str>,
    mode: Option<ModeArg>,
    cfg: TrialConfig,
    json: bool,
}

fn cmd_verify(path: &Path, args: VerifyArgs, ops: &OpRegistry) -> Result<(), Failure> {
    let file = checked(path, Lang::Source, ops)?;
    let names: Vec<&str> = match args.entry {
        Some(n) => vec![entry(&file, Some(n))?.name.as_str()],
        None => file
            .defs
            .iter()
            .filter(|d| is_program(d))
            .map(|d| d.name.as_str())
            .collect(),
    };
    if names.is_empty() {
        return fail(TYPE, "no function between positive types to verify");
    }
    let modes = match args.mode {
        Some(m) => vec![Mode::from(m)],
        None => vec![Mode::Fwd, Mode::Rev],
    };
    let mut summaries = Vec::new();
    for name in names {
        let prog = Program::from_file(&file, name, ops).map_err(verify_failure)?;
        for mode in &modes {
            let s = verify_program(&prog, *mode, &args.cfg, ops).map_err(verify_failure)?;
            summaries.push((*mode, s));
        }
    }
    if args.json {
        let all: Vec<serde_json::Value> = summaries
            .iter()
            .map(|(m, s)| serde_json::json!({ "mode": m, "summary": s }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&all).expect("serializable"));
    } else {
        for (m, s) in &summaries {
            print_summary(s, *m);
        }
    }
    if summaries.iter().all(|(_, s)| s.ok()) {
        Ok(())
    } else {
        fail(TOLERANCE, "")
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ops = OpRegistry::standard();
    match cli.command {
        Command::Check { file, target } => cmd_check(&file, target, &ops),
        Command::Run {
            file,
            args,
            entry,
            fuel,
        } => cmd_run(&file, &args, entry.entry.as_deref(), fuel, &ops),
        Command::Ad { file, mode } => cmd_ad(&file, mode, &ops),
        Command::Jvp {
            file,
            entry,
            at,
            dir,
            fuel,
            json,
        } => cmd_jvp(&file, entry.entry.as_deref(), &at, &dir, fuel, json, &ops),
        Command::Grad {
            file,
            entry,
            at,
            fuel,
            json,
        } => cmd_grad(&file, entry.entry.as_deref(), &at, fuel, json, &ops),
        Command::Verify {
            file,
            entry,
            mode,
            trials,
            eps,
            tol,
            seed,
            fuel,
            json,
        } => {
            let cfg = TrialConfig {
                trials: trials as usize,
                check: CheckConfig {
                    eps,
                    tol,
                    fuel,
                    ..CheckConfig::default()
                },
                seed,
                ..TrialConfig::default()
            };
            let args = VerifyArgs {
                entry: entry.as_deref(),
                mode,
                cfg,
                json,
            };
            cmd_verify(&file, args, &ops)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
