//! Writer and buyer indifference prices of an at-the-money call for the
//! three model families, with and without transaction costs.
//!
//!     cargo run --release --example indifference_prices

use levy_indifference::chain::{build_grid, GridSizing};
use levy_indifference::dp::{price_positions, PriceKind};
use levy_indifference::levy::ModelSpec;
use levy_indifference::market::MarketSpec;

fn main() -> levy_indifference::error::Result<()> {
    let cases = [
        ("diffusion", ModelSpec::diffusion(0.1, 0.25), 0.001, 400, 3),
        ("merton", ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8), 0.04, 60, 51),
        ("vg", ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1), 0.05, 60, 43),
    ];
    println!("{:>10} {:>6} {:>12} {:>12} {:>8}", "model", "cost", "writer", "buyer", "secs");
    for (name, model, gamma, steps, lbar) in cases {
        for cost in [0.0, 0.01, 0.02] {
            let market = MarketSpec::atm_reference(gamma).with_costs(cost);
            let grid = build_grid(&model, &market, steps, &GridSizing::with_lbar(lbar))?;
            let pair = price_positions(&[PriceKind::Writer, PriceKind::Buyer], &model, &market, &grid)?;
            let (w, b) = (pair.writer.unwrap(), pair.buyer.unwrap());
            println!(
                "{name:>10} {cost:>6} {:>12.6} {:>12.6} {:>8.2}",
                w.price,
                b.price,
                (w.diagnostics.runtime + b.diagnostics.runtime).as_secs_f64()
            );
        }
    }
    Ok(())
}
