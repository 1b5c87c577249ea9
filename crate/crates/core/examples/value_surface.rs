//! Solves the writer problem on a small diffusion lattice, keeps every
//! slice and prints the no-trade band of share holdings at the root and at
//! mid-life. The full surface is written to `writer_surface.csv`.
//!
//!     cargo run --release --example value_surface

use levy_indifference::chain::{build_grid, transition_kernel, GridSizing};
use levy_indifference::dp::{
    control_step, surface_csv, solve_with_kernel, time_step, OptionPosition, SolveOptions,
};
use levy_indifference::levy::ModelSpec;
use levy_indifference::market::MarketSpec;

fn main() -> levy_indifference::error::Result<()> {
    let model = ModelSpec::diffusion(0.1, 0.25);
    let market = MarketSpec::atm_reference(0.1).with_costs(0.01);
    let grid = build_grid(&model, &market, 40, &GridSizing::with_lbar(3))?;
    let kernel = transition_kernel(&model, &grid)?;
    let options = SolveOptions {
        keep_surfaces: true,
        ..Default::default()
    };
    let sol = solve_with_kernel(OptionPosition::Writer, &kernel, &grid, &market, &options);

    // a share level is in the no-trade band when trading does not lower W
    for n in [grid.steps / 2, 1] {
        let (expect, _) = time_step(&sol.surfaces[n + 1], &kernel);
        let controlled = control_step(&expect, &grid, &market);
        let mid = controlled.nodes / 2;
        let band: Vec<f64> = (0..controlled.shares)
            .filter(|&i| controlled.get(mid, i) >= expect.get(mid, i))
            .map(|i| grid.shares(i))
            .collect();
        println!(
            "n={n:>3} S={:.3}: hold between {:.3} and {:.3} shares",
            grid.log_price(n, mid).exp(),
            band.first().copied().unwrap_or(f64::NAN),
            band.last().copied().unwrap_or(f64::NAN)
        );
    }
    std::fs::write("writer_surface.csv", surface_csv(&sol.surfaces, &grid))?;
    println!("{} slices written to writer_surface.csv", sol.surfaces.len());
    Ok(())
}
