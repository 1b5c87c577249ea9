//! Risk-neutral reference prices: Black-Scholes, the Merton series and the
//! PIDE solver at a few resolutions.
//!
//!     cargo run --release --example reference_prices

use levy_indifference::benchmarks::{bs_price, merton_series_price, pide_price, PideGrid};
use levy_indifference::levy::ModelSpec;
use levy_indifference::market::MarketSpec;

fn main() -> levy_indifference::error::Result<()> {
    let market = MarketSpec::atm_reference(0.04);
    let diffusion = ModelSpec::diffusion(0.1, 0.25);
    let merton = ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8);
    let vg = ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1);

    println!("Black-Scholes  {:.7}", bs_price(15.0, 15.0, 1.0, 0.1, 0.25));
    let series = merton_series_price(15.0, 15.0, 1.0, 0.1, &merton, 60);
    println!("Merton series  {:.7} (tail <= {:.1e})", series.price, series.tail_bound);

    println!("\n{:>10} {:>7} {:>9} {:>12} {:>8}", "model", "cells", "dx", "pide", "secs");
    for (name, model) in [("diffusion", diffusion), ("merton", merton), ("vg", vg)] {
        for cells in [250, 500, 1000] {
            let grid = PideGrid::new(&model, &market, cells, cells)?;
            let t = std::time::Instant::now();
            let p = pide_price(&model, &market, &grid)?;
            println!(
                "{name:>10} {cells:>7} {:>9.5} {p:>12.7} {:>8.2}",
                grid.dx,
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
