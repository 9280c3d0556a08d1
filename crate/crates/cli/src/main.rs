mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] normsol::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use normsol::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Json(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::Precondition(_)
                | E::Parse(_)
                | E::MissingQuadraticCoefficients
                | E::DegenerateDenominator
                | E::FormulaDomain(_)
                | E::SpectrumUnavailable => 1,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NumericalFailure,
    Inadmissible,
    NoSynchronizedState,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::NumericalFailure => 2,
            Status::Inadmissible => 3,
            Status::NoSynchronizedState => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Ground(a) => commands::ground(a),
        Command::AlphaSweep(a) => commands::alpha_sweep(a),
        Command::SyncCheck(a) => commands::sync_check(a),
        Command::Predict(a) => commands::predict(a),
        Command::ReproduceFigure(a) => commands::reproduce_figure(a),
    };
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
