use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stokes_cq_cli::{cmd_converge, cmd_run, load_config, verify, CliError};

#[derive(Parser)]
#[command(name = "stokes-cq", version, about = "Transient exterior Stokes flow by BEM and convolution quadrature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write observations (and snapshots).
    Run { config: PathBuf },
    /// Run a refinement ladder against the manufactured solution.
    Converge { config: PathBuf },
    /// Check operator properties and convolution quadrature against oracles.
    Verify,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("STOKES_CQ_THREADS") else {
        return Ok(());
    };
    let threads: usize =
        value.trim().parse().map_err(|_| CliError::Config(format!("STOKES_CQ_THREADS: cannot parse '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("STOKES_CQ_THREADS: {e}")))
}

fn execute(command: Command) -> Result<(), CliError> {
    configure_threads()?;
    match command {
        Command::Run { config } => print!("{}", cmd_run(&load_config(&config)?)?),
        Command::Converge { config } => print!("{}", cmd_converge(&load_config(&config)?)?),
        Command::Verify => {
            let report = verify()?;
            print!("{}", report.render());
            let failures = report.failures();
            if failures > 0 {
                return Err(CliError::Verify(failures));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
