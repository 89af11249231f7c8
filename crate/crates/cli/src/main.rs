mod args;
mod commands;
mod manifest;
mod reproduce;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use bandit_minimax::{Error, Result};

fn dispatch(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let q = cli.quiet;
    match &cli.command {
        Command::SolvePde(a) => commands::solve_pde(a, q),
        Command::BatchDp(a) => commands::batch_dp(a, q),
        Command::WorstPrior(a) => commands::worst_prior(a, q),
        Command::Losses(a) => commands::losses(a, q),
        Command::BernoulliDp(a) => commands::bernoulli_dp(a, q),
        Command::Simulate(a) => commands::simulate_cmd(a, q),
        Command::Reproduce(a) => reproduce::reproduce(a, q),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_integrity() { 3 } else { 2 })
        }
    }
}
