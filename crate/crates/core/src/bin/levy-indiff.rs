use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use levy_indifference::commands::{cmd_check, cmd_price, cmd_sweep, cmd_table, CommandOutput};
use levy_indifference::config::RunConfig;
use levy_indifference::error::Error;

/// Environment variable that fixes the number of worker threads.
const THREADS_ENV: &str = "LEVY_INDIFF_THREADS";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Writer and/or buyer indifference prices.
    Price,
    /// One of the reference tables selected by `[table] which`.
    Table,
    /// Prices along the `[sweep]` axis.
    Sweep,
    /// Lattice diagnostics without pricing.
    Check,
}

/// Indifference prices of European calls under transaction costs.
#[derive(Debug, Parser)]
#[command(name = "levy-indiff", version)]
struct Cli {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to `[output] csv`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 4 when a diagnostic check fails.
    #[arg(long)]
    strict: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::GridInfeasible { .. } => 3,
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::Io(_) => 2,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<CommandOutput, Error> {
    let cfg = RunConfig::from_path(&cli.config)?;
    let output = match cli.command {
        Command::Price => cmd_price(&cfg)?,
        Command::Table => cmd_table(&cfg)?,
        Command::Sweep => cmd_sweep(&cfg)?,
        Command::Check => cmd_check(&cfg)?,
    };
    let csv = output.table.to_csv();
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.csv.as_ref()).map(PathBuf::from));
    match out {
        Some(path) => {
            std::fs::write(&path, csv)?;
            print!("{}", output.summary);
            println!("wrote {}", path.display());
        }
        None => {
            eprint!("{}", output.summary);
            print!("{csv}");
        }
    }
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match run(&cli) {
        Ok(output) if cli.strict && !output.passed => ExitCode::from(4),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
