//! Command-line front end: branch continuation, extremal verification, stability
//! certification, Hardy checks and exponent tables.
//!
//! Exit codes: 0 ok, 2 solver or verification failure, 3 configuration error,
//! 4 violated theorem hypothesis. Failures print `ERROR:<code>:<message>` on standard error.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use semistable::format::{fmt9, SIG_DIGITS};
use semistable::{
    analysis, annotate_branch, hardy_verify, parse_branch_csv, regularity_exponents,
    write_branch_csv, Branch, ContinuationOptions, EigenOptions, Error, NewtonOptions, RadialMesh,
    RadialProblem,
};

use config::{CaseArgs, RunConfig};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self { code: 3, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Geometry(_) | Error::Validity(_) => 3,
            Error::Hypothesis(_) => 4,
            Error::Overflow(_)
            | Error::NoConvergence(_)
            | Error::SingularJacobian { .. }
            | Error::ReportFailure(_)
            | Error::Invariant(_) => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "semistable",
    version,
    about = "Minimal branches and extremal solutions of −Δ_g u = λ f(u) on geodesic balls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continue the minimal branch from λ = 0 to the fold and write it as CSV.
    Branch(CaseArgs),
    /// Compare the fold on a mesh ladder with the closed-form extremal pair (JSON report).
    VerifyExtremal(CaseArgs),
    /// Recompute the principal eigenvalue at every row of a branch CSV.
    Stability {
        /// Branch CSV produced by `branch`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        case: CaseArgs,
    },
    /// Randomized check of the improved weighted Hardy inequality.
    Hardy(CaseArgs),
    /// Regularity exponents p0, p1 and, with --m, the dimension threshold N(m).
    Exponents(CaseArgs),
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError {
                code: 2,
                message: format!("cannot write output: {e}"),
            })
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// Rounds every float to the output precision so reports diff cleanly across runs.
fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = semistable::format::fmt_sig(x, SIG_DIGITS)
                .parse()
                .unwrap_or(x);
            serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("json text");
    s.push('\n');
    s
}

fn continuation_options(cfg: &RunConfig) -> ContinuationOptions {
    ContinuationOptions {
        newton: NewtonOptions {
            tol: cfg.newton_tol,
            ..NewtonOptions::default()
        },
        ..ContinuationOptions::default()
    }
}

fn problem(cfg: &RunConfig, cells: usize) -> Result<RadialProblem, CliError> {
    let model = cfg.model()?;
    let nl = cfg.nonlinearity(&model)?;
    Ok(RadialProblem::new(
        &model,
        &RadialMesh::new(cfg.radius, cells)?,
        nl,
    )?)
}

fn cmd_branch(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.require_hardy_radius(&cfg.model()?)?;
    let branch = problem(cfg, cfg.cells)?.continue_branch(&continuation_options(cfg))?;
    emit(cfg, &branch.to_csv())
}

fn cmd_verify_extremal(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.model()?;
    let nl = cfg.nonlinearity(&model)?;
    let run = || analysis::evaluate_extremal(&model, &nl, &cfg.ladder, &continuation_options(cfg));
    let verification = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::config(format!("cannot start {jobs} workers: {e}")))?
            .install(run)?,
        None => run()?,
    };
    emit(cfg, &to_json(&verification.report))?;
    verification.check()?;
    Ok(())
}

fn cmd_stability(cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", input.display())))?;
    let (mut rows, estimate) = parse_branch_csv(&text)?;
    let problem = problem(cfg, cfg.cells)?;
    let newton = NewtonOptions {
        tol: cfg.newton_tol,
        ..NewtonOptions::default()
    };
    let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.sup_u)).collect();
    let points = problem.retrace(&samples, &newton)?;
    let last = points.last().map_or(0.0, |p| p.lambda);
    let mut branch = Branch {
        points,
        lambda_star_estimate: estimate.unwrap_or(last),
        fold_bracket: (last, f64::INFINITY),
    };
    annotate_branch(
        &problem,
        &mut branch,
        &EigenOptions {
            tol: cfg.eig_tol,
            ..EigenOptions::default()
        },
    )?;
    for (row, point) in rows.iter_mut().zip(&branch.points) {
        row.lambda1 = point.lambda1;
    }
    emit(cfg, &write_branch_csv(&rows, estimate))
}

fn cmd_hardy(cfg: &RunConfig) -> Result<(), CliError> {
    let report = hardy_verify(&cfg.model()?, cfg.trials, cfg.seed)?;
    let line = format!(
        "H={} worst_margin={} poincare_margin={} sharpness_margin={} trials={}\n",
        fmt9(report.hardy_constant),
        fmt9(report.worst_margin),
        fmt9(report.poincare_margin),
        fmt9(report.sharpness_margin),
        report.trials
    );
    match &cfg.output {
        Some(path) => {
            write_file(path, &to_json(&report))?;
            print!("{line}");
        }
        None => print!("{line}"),
    }
    if report.worst_margin < -1e-8 {
        return Err(Error::ReportFailure(format!(
            "Hardy margin {} below -1e-8",
            fmt9(report.worst_margin)
        ))
        .into());
    }
    Ok(())
}

fn cmd_exponents(cfg: &RunConfig) -> Result<(), CliError> {
    let e = regularity_exponents(cfg.dim()?, cfg.m)?;
    let mut line = format!("p0={} p1={}", fmt9(e.p0), fmt9(e.p1));
    if let Some(nm) = e.n_m {
        line.push_str(&format!(" N(m)={}", fmt9(nm)));
    }
    line.push('\n');
    match &cfg.output {
        Some(path) => {
            write_file(path, &to_json(&e))?;
            print!("{line}");
        }
        None => print!("{line}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Branch(args) => cmd_branch(&args.resolve()?),
        Command::VerifyExtremal(args) => cmd_verify_extremal(&args.resolve()?),
        Command::Stability { input, case } => cmd_stability(&case.resolve()?, &input),
        Command::Hardy(args) => cmd_hardy(&args.resolve()?),
        Command::Exponents(args) => cmd_exponents(&args.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("ERROR:3:{}", e.to_string().trim_end());
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR:{}:{}", e.code, e.message);
            ExitCode::from(e.code)
        }
    }
}
