//! Batch driver: every validation suite behind one binary with file-based
//! configuration, dotted-path overrides, and machine-readable JSON reports.
//!
//! Exit codes: 0 when every check passed, 1 when the suite ran but at least
//! one check failed, 2 when the configuration was rejected or the run could
//! not be carried out.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qhm::config::RunConfig;
use qhm::error::Result;
use qhm::suites::{
    run_axioms, run_derivations, run_equivalence, run_group, run_minimize, run_oracle, SuiteReport,
};

#[derive(Parser)]
#[command(name = "qhm", version, about = "Validation suites for the twisted algebra engine")]
struct Cli {
    /// Configuration file (JSON). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Dotted-path override on top of the configuration, repeatable,
    /// e.g. --set minimize.optim.max_iters=200
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Report destination. Stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Product axioms: units, associativity, involution, trace, convergence.
    Axioms,
    /// Derivations: Leibniz rule, commutator relations, trace vanishing.
    Derivations,
    /// Group action: action law, product automorphism, trace invariance.
    Group,
    /// Curvature-functional equivalence on seeded random connections.
    Equivalence,
    /// Gradient descent of the curvature action from a random start.
    Minimize,
    /// Representation oracle for the product.
    Oracle,
}

const EXIT_SUITE_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(report) => report,
        Err(e) => {
            eprintln!("qhm: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = emit(&cli, &report) {
        eprintln!("qhm: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SUITE_FAILED)
    }
}

fn run(cli: &Cli) -> Result<SuiteReport> {
    let base = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path)?),
        None => None,
    };
    let cfg = RunConfig::resolve(base.as_deref(), &cli.set)?;
    match cli.command {
        Command::Axioms => run_axioms(&cfg),
        Command::Derivations => run_derivations(&cfg),
        Command::Group => run_group(&cfg),
        Command::Equivalence => run_equivalence(&cfg),
        Command::Minimize => run_minimize(&cfg),
        Command::Oracle => run_oracle(&cfg),
    }
}

fn emit(cli: &Cli, report: &SuiteReport) -> Result<()> {
    let text = report.to_json()?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
