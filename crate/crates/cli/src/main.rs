mod args;
mod artifacts;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes, mapped to exit codes in `main`.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or unwritable files, oversized instances.
    Usage(anyhow::Error),
    /// The numerical pipeline broke down.
    Numerical(anyhow::Error),
    /// A check ran and did not pass.
    Failed(anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Failed(_) => 1,
        }
    }

    fn inner(&self) -> &anyhow::Error {
        match self {
            CliError::Usage(e) | CliError::Numerical(e) | CliError::Failed(e) => e,
        }
    }
}

pub fn core_err(e: polystap_core::Error) -> CliError {
    if e.is_numerical() {
        CliError::Numerical(e.into())
    } else {
        CliError::Usage(e.into())
    }
}

pub struct Globals {
    pub threads: Option<usize>,
    pub deterministic: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage(anyhow::anyhow!(
                "--threads must be positive"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.into()))?;
    }
    let g = Globals {
        threads: cli.threads,
        deterministic: cli.deterministic,
    };
    match &cli.command {
        Command::Design(a) => commands::design_cmd(a, &g),
        Command::Sweep(a) => commands::sweep_cmd(a, &g),
        Command::Validate(a) => commands::validate_cmd(a, &g),
        Command::Oracle(a) => commands::oracle_cmd(a, &g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.inner());
            ExitCode::from(e.exit_code())
        }
    }
}
