use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thresh2d_cli::{cmd_classify, cmd_probe, cmd_scan, cmd_verify, cmd_waveop, default_out, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "thresh2d",
    version,
    about = "Zero-energy threshold analysis for 2D Schrödinger operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for reports, CSV files and dumps.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat conditioning warnings as failures (exit 2).
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the threshold behaviour of one potential.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scan the coupling for kernel crossings.
    Scan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Apply the wave operator to a band-limited packet.
    Waveop {
        #[arg(long)]
        config: PathBuf,
    },
    /// Lp ratios of the wave operator over a dilation family.
    Probe {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a self-test suite: specfun | inversion | expansion | waveop | all.
    Verify { suite: String },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let out = cli.out.unwrap_or_else(default_out);
    match cli.command {
        Command::Classify { config } => cmd_classify(&RunConfig::load(&config)?, &out, cli.strict),
        Command::Scan { config } => cmd_scan(&RunConfig::load(&config)?, &out, cli.strict),
        Command::Waveop { config } => cmd_waveop(&RunConfig::load(&config)?, &out),
        Command::Probe { config } => cmd_probe(&RunConfig::load(&config)?, &out),
        Command::Verify { suite } => cmd_verify(&suite, Some(&out)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
