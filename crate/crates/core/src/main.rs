use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use contracta::config::{load_config, Command, OutputFormat, RunConfig};
use contracta::report::emit_report;
use contracta::run::run;
use contracta::ContractaError;

/// Fixed points and contraction classes of self-maps on b-metric spaces.
#[derive(Debug, Parser)]
#[command(name = "contracta", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration (optional for `corpus`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn seed_from_env() -> Result<Option<u64>, ContractaError> {
    match std::env::var("CONTRACTA_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ContractaError::Argument(format!("CONTRACTA_SEED must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<i32, ContractaError> {
    let seed = seed_from_env()?;
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ContractaError::Argument(format!("cannot read {}: {e}", path.display())))?;
            load_config(&text, seed)?
        }
        None if cli.command == Command::Corpus => RunConfig::default(),
        None => return Err(ContractaError::Argument(format!("{} needs --config", cli.command.as_str()))),
    };
    let outcome = run(&config, cli.command)?;
    let format = cli.format.unwrap_or(config.output.format);
    let path = cli.out.clone().or_else(|| config.output.path.as_ref().map(PathBuf::from));
    emit_report(&outcome, format, path.as_deref())?;
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("contracta: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
