//! `aplab`: run experiments on drift-harmonic functions and write CSV reports.
//!
//! Exit status: 0 when every enabled check passes, 1 when a check fails
//! (the failing checks are named on stderr), 2 on usage or configuration
//! errors.

mod commands;
mod config;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use report::{write_run, Report, RunInfo, Status};

#[derive(Parser, Debug)]
#[command(name = "aplab", version, about = "Drift-harmonic function laboratory on paraboloidal warped products")]
struct Cli {
    /// Configuration file (TOML); defaults apply to every missing entry.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` of the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides `seed` of the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the randomised batteries (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Treat fit-quality warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Decay certificate of the profile and flow-map bounds.
    Certify,
    /// Radial solutions and growth exponents for each eigenvalue.
    Radial,
    /// Frequency traces, residual convergence and Cauchy-Schwarz gaps.
    Freq,
    /// Three-circles batteries on random Dirichlet solutions.
    Threecircles,
    /// Liouville battery on constant-deflated random solutions.
    Liouville,
    /// Build an asymptotically orthogonal basis and check it.
    Basis,
    /// The complete verification suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Radial => "radial",
            Command::Freq => "freq",
            Command::Threecircles => "threecircles",
            Command::Liouville => "liouville",
            Command::Basis => "basis",
            Command::Verify => "verify",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    cfg.output_dir = out.display().to_string();
    let workers = match cli.workers {
        Some(0) => {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(2);
        }
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
        eprintln!("error: cannot start {workers} workers: {e}");
        return ExitCode::from(2);
    }

    let mut report = Report::default();
    let run = match cli.command {
        Command::Certify => commands::certify(&cfg, &mut report),
        Command::Radial => commands::radial(&cfg, &mut report),
        Command::Freq => commands::freq(&cfg, &mut report),
        Command::Threecircles => commands::threecircles(&cfg, &mut report),
        Command::Liouville => commands::liouville(&cfg, &mut report),
        Command::Basis => commands::basis(&cfg, &mut report),
        Command::Verify => verify::verify(&cfg, &mut report),
    };
    if let Err(e) = run {
        eprintln!("error: {} aborted: {e}", cli.command.name());
        return ExitCode::from(2);
    }
    let operator = cfg.operator().map(|op| op.describe()).unwrap_or_default();
    let info = RunInfo { command: cli.command.name(), config: &cfg, workers, strict: cli.strict, operator };
    let manifest = match write_run(&out, &report, &info) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot write results to {}: {e}", out.display());
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        let label = match c.status {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        };
        println!("{label} [{}] {}: {}", c.tag, c.name, c.measured);
    }
    println!("wrote {}", manifest.display());
    let failures = report.failures(cli.strict);
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for c in failures {
            eprintln!("check failed: [{}] {}: {}", c.tag, c.name, c.measured);
        }
        ExitCode::from(1)
    }
}
