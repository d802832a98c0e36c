#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Parser, Subcommand};

/// `println!` that exits quietly when stdout is a closed pipe.
macro_rules! outln {
    ($($arg:tt)*) => {
        $crate::io::emit(format_args!($($arg)*))
    };
}

mod analyze;
mod error;
mod fit;
mod io;
mod seed;
mod simulate;
mod sweep;
mod verify;

/// Discover linear first integrals in noisy data with the surrogate iteration.
///
/// Exit codes: 0 success, 1 failed verification, 2 invalid input,
/// 3 integrator failure, 4 singular covariance, 5 degenerate iteration.
#[derive(Debug, Parser)]
#[command(name = "invariant-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a ring flow model and write trajectory and noisy dataset CSVs.
    Simulate(simulate::SimulateArgs),
    /// Run the empirical iteration on a dataset CSV.
    Fit(fit::FitArgs),
    /// Report the closed-form spectrum and convergence conditions.
    Analyze(analyze::AnalyzeArgs),
    /// Evaluate convergence over a parameter grid.
    Sweep(sweep::SweepArgs),
    /// Run the built-in acceptance checks.
    Verify(verify::VerifyArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                error::exit::VALIDATION
            } else {
                0
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Verify(a) => verify::run(a),
    };
    if let Err(f) = result {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}
