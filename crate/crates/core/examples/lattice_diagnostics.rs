//! Builds the multinomial lattice for each model family and prints the
//! one-step transition law, its local-consistency errors and the
//! stability margins. Writes the Merton kernel to `merton_kernel.csv`.
//!
//!     cargo run --release --example lattice_diagnostics

use levy_indifference::chain::{
    build_grid, consistency_report, kernel_csv, measure_coverage, stability_margins,
    transition_kernel, GridSizing, Width,
};
use levy_indifference::levy::ModelSpec;
use levy_indifference::market::MarketSpec;

fn main() -> levy_indifference::error::Result<()> {
    let cases = [
        ("diffusion", ModelSpec::diffusion(0.1, 0.25), 100, Width::Fixed(3)),
        ("merton", ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8), 100, Width::Auto),
        ("vg", ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1), 150, Width::Fixed(43)),
    ];
    let market = MarketSpec::atm_reference(0.04);
    for (name, model, steps, lbar) in cases {
        let sizing = GridSizing {
            lbar,
            ..Default::default()
        };
        let grid = build_grid(&model, &market, steps, &sizing)?;
        let kernel = transition_kernel(&model, &grid)?;
        let c = consistency_report(&kernel, &model, &grid);
        let m = stability_margins(&model, &grid);
        println!("== {name}: N={steps} Lbar={} Mbar={} h_x={:.5}", grid.lbar(), grid.mbar(), grid.h_x);
        println!(
            "   p_diff = ({:.5}, {:.5}, {:.5})  lambda_hat = {:.5}",
            kernel.p_diff.down, kernel.p_diff.stay, kernel.p_diff.up, kernel.lambda_hat
        );
        if let Some(cov) = measure_coverage(&model, &grid) {
            println!("   jump measure coverage = {cov:.5}");
        }
        println!("   sum p - 1 = {:.2e}", kernel.normalization_residual());
        println!(
            "   mean error {:.3e}, variance error {:.3e}, constant/dt^2 = {:.4}",
            c.mean_error, c.var_error, c.constant
        );
        println!(
            "   margins: jumps {:.4}, cfl {:.4}, positivity {:.3e}, extent {:.1}",
            m.jump_activity, m.diffusion_cfl, m.positivity, m.tree_extent
        );
        if name == "merton" {
            std::fs::write("merton_kernel.csv", kernel_csv(&kernel, &grid))?;
            println!("   kernel written to merton_kernel.csv");
        }
    }
    Ok(())
}
