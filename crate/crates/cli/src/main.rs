use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fs_ddrom_cli::commands::{self, RunContext};
use fs_ddrom_cli::CliError;

#[derive(Parser)]
#[command(name = "fs-ddrom", version, about = "DG, ROM and DD-ROM experiments for Friedrichs' systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for snapshot solves.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for random sampling (overrides `seed` in the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Snapshot file read by the evaluation commands (default `<out>/snapshots.bin`).
    #[arg(long, global = true)]
    snapshots: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// h-convergence study against the configured exact solution.
    Converge,
    /// Full-order solves for every sample, written as a snapshot file.
    Snapshots,
    /// Monodomain ROM errors and estimators.
    RomEval,
    /// Domain-decomposed ROM errors and estimators.
    DdromEval,
    /// Variance and Grassmannian indicators and reconstruction scans.
    Indicators,
    /// Symmetry, positivity and boundary admissibility checks.
    CheckAxioms,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let config = cli.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let ctx: RunContext = commands::resolve(&config, cli.out, cli.seed, cli.snapshots)?;
    match cli.command {
        Command::Converge => commands::cmd_converge(&ctx),
        Command::Snapshots => commands::cmd_snapshots(&ctx),
        Command::RomEval => commands::cmd_rom_eval(&ctx),
        Command::DdromEval => commands::cmd_ddrom_eval(&ctx),
        Command::Indicators => commands::cmd_indicators(&ctx),
        Command::CheckAxioms => commands::cmd_check_axioms(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DDROM_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
