use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("divergence: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Diverged(_) => 4,
        })
    }
}

impl From<mdcert::Error> for CliError {
    fn from(e: mdcert::Error) -> Self {
        match e {
            mdcert::Error::SolverFailed(_) | mdcert::Error::WitnessRejected { .. } => CliError::Solver(e.to_string()),
            mdcert::Error::Diverged { .. } => CliError::Diverged(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("csv: {e}"))
    }
}
