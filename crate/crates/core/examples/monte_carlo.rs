//! Exact-law Monte Carlo: martingale check and call prices for the three
//! families, compared with the closed forms where they exist.
//!
//!     cargo run --release --example monte_carlo [paths]

use levy_indifference::commands::closed_form_price;
use levy_indifference::levy::ModelSpec;
use levy_indifference::market::MarketSpec;
use levy_indifference::mc::{martingale_check, mc_call_price, SimConfig};

fn main() -> levy_indifference::error::Result<()> {
    let paths = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2_000_000);
    let sim = SimConfig::new(paths, 20240601);
    let market = MarketSpec::atm_reference(0.04);
    let models = [
        ("diffusion", ModelSpec::diffusion(0.1, 0.25)),
        ("merton", ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8)),
        ("vg", ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1)),
        ("vg theta>0", ModelSpec::variance_gamma(0.1, 0.1, 0.2, 0.1)),
    ];
    println!("{paths} paths per estimate");
    println!("{:>11} {:>10} {:>8} {:>10} {:>8} {:>10}", "model", "e^-rT S_T", "se", "call", "se", "closed");
    for (name, model) in models {
        let m = martingale_check(&model, &market, &sim)?;
        let c = mc_call_price(&model, &market, &sim)?;
        let closed = closed_form_price(&model, &market)
            .map(|p| format!("{p:.5}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{name:>11} {:>10.5} {:>8.5} {:>10.5} {:>8.5} {closed:>10}",
            m.mean, m.std_error, c.mean, c.std_error
        );
    }
    Ok(())
}
