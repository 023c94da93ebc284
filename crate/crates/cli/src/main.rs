mod args;
mod commands;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use topoeeg_core::{CoreError, ErrorClass};

use crate::args::{Cli, Command};

const THREADS_VAR: &str = "TOPOEEG_THREADS";

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CoreError::InvalidConfig(format!("{THREADS_VAR}={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Featurize(a) => commands::featurize(a),
        Command::Cv(a) => commands::cv(a),
        Command::InterpCompare(a) => commands::interp_compare(a),
        Command::StrideCompare(a) => commands::stride_compare(a),
        Command::Report(a) => commands::report(a),
    }
}

/// 1 usage, 2 data, 3 numerical; anything unclassified counts as data.
fn exit_status(err: &anyhow::Error) -> u8 {
    let class = err
        .chain()
        .find_map(|cause| cause.downcast_ref::<CoreError>())
        .map(CoreError::class);
    match class {
        Some(ErrorClass::Usage) => 1,
        Some(ErrorClass::Numerical) => 3,
        Some(ErrorClass::Data) | None => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_status(&err))
        }
    }
}
