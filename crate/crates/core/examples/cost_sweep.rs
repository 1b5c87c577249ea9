//! Writer and buyer prices as functions of the proportional cost and of the
//! risk aversion, for the Merton model.
//!
//!     cargo run --release --example cost_sweep

use levy_indifference::commands::run_sweep;
use levy_indifference::config::{FamilyName, RunConfig, SweepAxis, SweepConfig, WidthConfig};

fn main() -> levy_indifference::error::Result<()> {
    let mut cfg = RunConfig::preset(FamilyName::Merton);
    cfg.grid.steps = 50;
    cfg.grid.lbar = WidthConfig::Fixed(51);
    for (axis, values) in [
        (SweepAxis::Cost, vec![0.0, 0.01, 0.02, 0.03, 0.04]),
        (SweepAxis::Gamma, vec![0.001, 0.01, 0.04, 0.1, 0.2, 0.3]),
    ] {
        cfg.sweep = Some(SweepConfig { axis, values });
        let sweep = run_sweep(&cfg)?;
        print!("{}", sweep.to_table().to_text());
        println!(
            "writer {}, buyer {}\n",
            sweep.writer_trend().name(),
            sweep.buyer_trend().name()
        );
    }
    Ok(())
}
