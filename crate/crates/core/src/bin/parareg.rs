use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use parareg::config::ExperimentConfig;
use parareg::run::{run, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Solve,
    Garding,
    Caccioppoli,
    RhU,
    Gehring,
    Holder,
    All,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Solve => Subcommand::Solve,
            Command::Garding => Subcommand::Garding,
            Command::Caccioppoli => Subcommand::Caccioppoli,
            Command::RhU => Subcommand::RhU,
            Command::Gehring => Subcommand::Gehring,
            Command::Holder => Subcommand::Holder,
            Command::All => Subcommand::All,
        }
    }
}

/// Numerical checks for parabolic systems with rough coefficients.
#[derive(Debug, Parser)]
#[command(name = "parareg", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory (defaults to `output.dir` in the config, then `out`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overrides the resolution with `nt = nx = 2^k`.
    #[arg(long = "grid-level")]
    grid_level: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("parareg: {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let out = cli
        .out
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match run(cli.command.into(), &cfg, &out, cli.grid_level) {
        Ok(m) => {
            for a in &m.artifacts {
                println!("{}  {}", a.sha256, out.join(&a.path).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("parareg {}: {e}", Subcommand::from(cli.command).name());
            ExitCode::FAILURE
        }
    }
}
