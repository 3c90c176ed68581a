//! Command-line front end for the prey-predator simulations.
//!
//! Exit status: 0 success, 1 invalid input, 2 numerical or runtime failure,
//! 3 I/O failure.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};

use crate::config::{ConfigArgs, Settings};
use crate::error::CliError;

/// Environment variable holding the number of worker threads for ensembles.
const WORKERS_ENV: &str = "PREYPRED_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "preypred", version, about = "Jump, diffusion and ODE experiments for a slow-fast prey-predator model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// One trajectory as CSV `t,x,y,xi` with a JSON footer.
    Simulate,
    /// Extinction probability and time statistics per omega.
    Table1,
    /// Safety-funnel width and local noise per omega.
    Table2,
    /// Bisection for the canard mortality, as JSON lines.
    Canard,
    /// Jump process against the diffusion at checkpoints.
    Compare,
    /// ODE and diffusion under seasonal mortality, per omega.
    Seasonal,
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("cannot start {n} workers: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_workers()?;
    let settings = Settings::from_args(&cli.config)?;
    let text = match cli.command {
        Command::Simulate => commands::simulate(&settings)?,
        Command::Table1 => commands::table1(&settings)?,
        Command::Table2 => commands::table2(&settings)?,
        Command::Canard => commands::canard(&settings)?,
        Command::Compare => commands::compare(&settings)?,
        Command::Seasonal => commands::seasonal(&settings)?,
    };
    commands::write_output(cli.config.output.as_deref(), &text)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
