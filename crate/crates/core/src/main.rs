use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semiwave::driver;

/// Blow-up experiments for the radial semilinear wave equation.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario. Exit code 0 = all checks pass, 1 = a check failed, 2 = bad config.
    Run {
        config: PathBuf,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cartesian product of the [sweep] lists; workers from SEMIWAVE_WORKERS.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate the checks of a finished run from its CSV files.
    Check { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let code = match Cli::parse().cmd {
        Cmd::Run { config, out } => driver::cli_run(&config, out.as_deref()),
        Cmd::Sweep { config, out } => driver::cli_sweep(&config, out.as_deref()),
        Cmd::Check { run_dir } => driver::cli_check(&run_dir),
    };
    ExitCode::from(code as u8)
}
