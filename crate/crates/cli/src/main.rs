//! `qprecision`: bound ladders, sweeps, simulations, tail probabilities and
//! Gaussian-model queries from the command line.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 a minimizer raised its
//! non-convergence flag (output is still written), 4 a mathematical
//! precondition failed.

mod args;
mod cli;
mod commands;

use std::process::ExitCode;

use clap::Parser;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Precondition(String),
    Io(String),
}

impl From<qprecision::Error> for CliError {
    fn from(e: qprecision::Error) -> Self {
        use qprecision::Error as E;
        match e {
            E::Precondition(_)
            | E::DegenerateSpectrum { .. }
            | E::NotClosed { .. }
            | E::RankDeficient
            | E::Singular(_)
            | E::SingularState { .. } => CliError::Precondition(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = cli::Cli::parse();
    let result = match &cli.command {
        cli::Command::Bounds(a) => commands::bounds(a),
        cli::Command::Sweep(a) => commands::sweep(a),
        cli::Command::Simulate(a) => commands::simulate(a),
        cli::Command::Tail(a) => commands::tail(a),
        cli::Command::Gaussian(a) => commands::gaussian(a),
    };
    match result {
        Ok(outcome) if outcome.converged => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("warning: minimizer did not converge (see diagnostics)");
            ExitCode::from(3)
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Precondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
