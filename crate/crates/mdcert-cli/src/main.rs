//! `mdcert`: certification sweeps, simulations and figure data as CSV.

mod args;
mod certify;
mod error;
mod figures;
mod output;
mod simulate;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify(a) => certify::cmd_certify(a),
        Command::Sweep(a) => certify::cmd_sweep(a),
        Command::Simulate(a) => simulate::cmd_simulate(a),
        Command::Figure(a) => figures::cmd_figure(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdcert: {e}");
            e.exit_code()
        }
    }
}
