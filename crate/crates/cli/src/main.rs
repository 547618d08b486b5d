//! `impactreg`: batch front-end for mean-impact analysis and simulation.

mod analyze;
mod error;
mod figure;
mod oracle_check;
mod output;
mod parse;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "impactreg", version, about = "Linear and partial linear mean impact analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate impacts of one covariate on a response from a CSV file.
    Analyze(analyze::AnalyzeArgs),
    /// Run the Monte Carlo study of the hierarchical adjustment test.
    Simulate(simulate::SimulateArgs),
    /// Plot data for a quadratic mean and its population linear approximation.
    Figure(figure::FigureArgs),
    /// Exact population quantities of a finite joint distribution.
    OracleCheck(oracle_check::OracleArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Figure(a) => figure::run(a),
        Command::OracleCheck(a) => oracle_check::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("impactreg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
