//! `resflow <command> --config <path> [--output <dir>] [--seed <u64>]`
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 on runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use resflow::io::commands::{run_command, CommandError};
use resflow::io::config::{parse_config, Command};
use resflow::io::IoError;

#[derive(Debug, Parser)]
#[command(name = "resflow", version, about = "Residual-network flow laboratory")]
struct Cli {
    /// One of: catalog, forward, flow, rademacher, example33, bounds, gap-vs-s, depth, activation-compare, convergence.
    command: String,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<PathBuf, CommandError> {
    let command = Command::from_name(&cli.command).ok_or_else(|| {
        let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
        CommandError::Invalid(IoError::Validation {
            key: "command".into(),
            message: format!("unknown command `{}`; expected one of {}", cli.command, names.join(", ")),
        })
    })?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|source| CommandError::Invalid(IoError::Path { path: cli.config.clone(), source }))?;
    let mut cfg = parse_config(&text).map_err(CommandError::Invalid)?;
    if cfg.command() != command {
        return Err(CommandError::Invalid(IoError::Validation {
            key: "command".into(),
            message: format!("config is for `{}`, not `{}`", cfg.command().name(), command.name()),
        }));
    }
    if let Some(out) = cli.output {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    run_command(&cfg)?;
    Ok(cfg.output_dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(dir) => {
            println!("results written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
