use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use shubin_lab::{run, Command, RunArgs};

#[derive(Parser)]
#[command(version, about = "Numerical experiments on anisotropic Shubin operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV, JSON and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Eigendata cache directory (default `<out>/cache`).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let args = RunArgs { command: cli.command, config, out: cli.out, threads: cli.threads, seed: cli.seed, cache: cli.cache };
    match run(&args) {
        Ok(m) => {
            let cached = if m.cached { " (cached eigendata)" } else { "" };
            println!("{}: wrote {} files to {}{cached}", args.command.name(), m.files.len() + 1, args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
