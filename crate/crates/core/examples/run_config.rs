//! Runs a configuration file through the library, the same way the
//! `levy-indiff` binary does, and prints the CSV.
//!
//!     cargo run --release --example run_config -- price examples/configs/merton.toml
//!     cargo run --release --example run_config -- table examples/configs/costs_vg.toml

use levy_indifference::commands::{cmd_check, cmd_price, cmd_sweep, cmd_table};
use levy_indifference::config::RunConfig;

fn main() -> levy_indifference::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let (Some(command), Some(path)) = (args.next(), args.next()) else {
        eprintln!("usage: run_config <price|table|sweep|check> <config.toml>");
        std::process::exit(2);
    };
    let cfg = RunConfig::from_path(&path)?;
    let out = match command.as_str() {
        "price" => cmd_price(&cfg)?,
        "table" => cmd_table(&cfg)?,
        "sweep" => cmd_sweep(&cfg)?,
        "check" => cmd_check(&cfg)?,
        other => {
            eprintln!("unknown command {other}");
            std::process::exit(2);
        }
    };
    eprint!("{}", out.summary);
    print!("{}", out.table.to_csv());
    Ok(())
}
