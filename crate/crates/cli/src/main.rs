//! `maslov`: compute Maslov indices, λ sweeps and branch traces from the
//! command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on numerical failures
//! (the classified error name is printed) and failed verification checks.

mod config;
mod output;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{debug, info, warn};
use maslov_core::tracker::{Evolution, TrackerConfig};
use maslov_core::{maslov_index, sweep, MaslovError};

use config::CommonArgs;

#[derive(Debug, Parser)]
#[command(
    name = "maslov",
    version,
    about = "Maslov index of unstable-subspace paths via Riccati singularities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one Maslov index and print the crossing table and diagnostics.
    Run(CommonArgs),
    /// Write the tracked branches (x, det X, μ, ν) as CSV.
    Trace(CommonArgs),
    /// Compute the index over a λ grid and write one CSV row per λ.
    Sweep(CommonArgs),
    /// Run the built-in verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// List the checks without running them.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug)]
pub struct UsageError(pub String);

enum Failure {
    Usage(String),
    Numerical(MaslovError),
    Verification(usize),
    Io(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<MaslovError> for Failure {
    fn from(e: MaslovError) -> Self {
        Failure::Numerical(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn init_logging() {
    let level = match std::env::var("MASLOV_LOG").as_deref() {
        Ok("debug") => log::LevelFilter::Debug,
        Ok("info") => log::LevelFilter::Info,
        Ok("quiet") => log::LevelFilter::Off,
        Ok(other) if !other.is_empty() => {
            eprintln!("warning: ignoring MASLOV_LOG={other:?}; expected debug, info or quiet");
            log::LevelFilter::Warn
        }
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::Usage(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_run(args: &CommonArgs) -> Result<(), Failure> {
    let args = args.merged()?;
    let problem = args.problem()?;
    let cfg = args.integrator()?;
    let lambda = args.single_lambda()?;
    info!("run {} at λ = {lambda} with {cfg:?}", problem.name());
    let r = maslov_index(&problem, lambda, &cfg)?;
    for w in &r.diagnostics.warnings {
        warn!("{w}");
    }
    let mut stdout = io::stdout().lock();
    output::report(&mut stdout, problem.name(), &r)?;
    if let Some(path) = &args.out {
        let mut f = open_out(Some(path))?;
        serde_json::to_writer_pretty(&mut f, &output::result_json(problem.name(), &r))
            .map_err(|e| Failure::Io(e.to_string()))?;
        writeln!(f)?;
        f.flush()?;
    }
    Ok(())
}

fn cmd_trace(args: &CommonArgs) -> Result<(), Failure> {
    let args = args.merged()?;
    let problem = args.problem()?;
    let cfg = args.integrator()?;
    let lambda = args.single_lambda()?;
    info!("trace {} at λ = {lambda}", problem.name());
    let ev = Evolution::run(&problem, lambda, &cfg, &TrackerConfig::default())?;
    for w in ev.warnings() {
        warn!("{w}");
    }
    debug!("{} accepted steps", ev.accepted_steps());
    let mut out = open_out(args.out.as_deref())?;
    output::write_trace(&mut out, problem.n(), ev.states())?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), Failure> {
    let args = args.merged()?;
    let problem = args.problem()?;
    let cfg = args.integrator()?;
    let lambdas = args.lambda_grid()?;
    info!("sweep {} over {} λ values", problem.name(), lambdas.len());
    let rows = sweep(&problem, &lambdas, &cfg);
    for (l, r) in &rows {
        match r {
            Ok(r) => debug!("λ = {l}: index {}", r.index),
            Err(e) => warn!("λ = {l}: {}: {e}", e.kind()),
        }
    }
    let mut out = open_out(args.out.as_deref())?;
    output::write_sweep(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    if args.list {
        for c in verify::CHECKS {
            println!("{:<24} {}", c.name, c.description);
        }
        return Ok(());
    }
    let common = args.common.merged()?;
    let cfg = common.integrator()?;
    let mut failed = 0;
    for c in verify::CHECKS {
        info!("running {}", c.name);
        match (c.run)(&cfg) {
            Ok(detail) => println!("PASS {:<24} {detail}", c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:<24} {detail}", c.name);
            }
        }
    }
    println!(
        "{} of {} checks passed",
        verify::CHECKS.len() - failed,
        verify::CHECKS.len()
    );
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::from(2)
        }
        Err(Failure::Verification(n)) => {
            eprintln!("error: {n} verification check(s) failed");
            ExitCode::from(2)
        }
    }
}
