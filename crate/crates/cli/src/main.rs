//! `clockstab` command-line frontend.
//!
//! Exit codes: 0 success, 2 input error, 3 numeric or domain error,
//! 4 loop instability.

mod analyze;
mod args;
mod feasibility;
mod manifest;
mod plot;
mod pll;
mod profile_input;
mod synth;

use std::process::ExitCode;

use clap::Parser;
use clockstab::Error;

use args::{Cli, Command};

const THREADS_ENV: &str = "CLOCKSTAB_THREADS";

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Range { .. } | Error::Parse(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::Numeric(_) | Error::Domain(_) => 3,
        Error::Unstable(_) => 4,
    }
}

fn configure_threads() -> clockstab::Result<usize> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Argument(format!("{THREADS_ENV}=`{v}` is not a positive integer")))?,
        Err(_) => return Ok(rayon::current_num_threads()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    Ok(n)
}

fn dispatch(cli: Cli) -> clockstab::Result<()> {
    let threads = configure_threads()?;
    match cli.command {
        Command::Analyze(a) => analyze::run(&a, threads),
        Command::Synth(a) => synth::run(&a, threads),
        Command::Pll(a) => pll::run(&a, threads),
        Command::Feasibility(a) => feasibility::run(&a, threads),
        Command::Plot(a) => plot::run(&a, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clockstab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_families() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Argument("x".into())), 2);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 2);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
        assert_eq!(exit_code(&Error::Domain("x".into())), 3);
        assert_eq!(exit_code(&Error::Unstable("x".into())), 4);
    }
}
