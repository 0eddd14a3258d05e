//! `srot`: solvers, bounds, oracles and experiments from the command line.
//!
//! Exit codes: 0 success, 2 configuration / parity / non-simplex input,
//! 3 numerical failure, 4 bound violation in an experiment.

mod args;
mod commands;
mod config;
mod json;

use std::process::ExitCode;

use clap::Parser;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] srot_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0} bound violation(s)")]
    Violations(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) | CliError::Config(_) => 2,
            CliError::Violations(_) => 4,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SROT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Config(format!(
            "SROT_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    if n == 0 {
        return Err(CliError::Config("SROT_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    let result = init_threads().and_then(|()| commands::run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::CliError;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Violations(1).exit_code(), 4);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Core(srot_core::Error::Numeric("nan".into())).exit_code(),
            3
        );
        assert_eq!(
            CliError::Core(srot_core::Error::Parity {
                k: 3,
                required: "even"
            })
            .exit_code(),
            2
        );
    }
}
