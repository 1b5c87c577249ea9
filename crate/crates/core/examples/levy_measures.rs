//! Jump measures of the Merton and Variance Gamma models and the
//! small-jump approximation of VG on lattices of increasing resolution.
//!
//!     cargo run --release --example levy_measures

use levy_indifference::levy::{
    levy_density, merton_compensator, moment_check, process_std, small_jump_params, ModelSpec,
};

fn main() -> levy_indifference::error::Result<()> {
    let merton = ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8);
    let vg = ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1);

    println!("Merton: m = {:.7}, sigma_X = {:.6}", merton_compensator(&merton)?, process_std(&merton));
    println!("VG:     omega = {:.7}, sigma_X = {:.6}", vg.exp_compensator().unwrap(), process_std(&vg));
    let (left, right) = vg.vg_tail_rates();
    println!("VG tail rates: left {left:.4}, right {right:.4}");
    println!("finite E[S^2]: merton {}, vg {}", moment_check(&merton).finite_second_moment, moment_check(&vg).finite_second_moment);

    println!("\n{:>8} {:>14} {:>14}", "z", "merton nu(z)", "vg nu(z)");
    for z in [-1.0, -0.5, -0.1, -0.01, 0.01, 0.1, 0.5, 1.0] {
        println!("{z:>8} {:>14.6e} {:>14.6e}", levy_density(&merton, z)?, levy_density(&vg, z)?);
    }

    // epsilon = 1.5 h_x with h_x = sigma_X sqrt(1/N)
    println!("\n{:>6} {:>10} {:>10} {:>10} {:>10}", "N", "epsilon", "lambda_eps", "sigma_eps", "omega_eps");
    for n in [50usize, 100, 150, 200, 350, 1000] {
        let eps = 1.5 * process_std(&vg) / (n as f64).sqrt();
        let p = small_jump_params(&vg, eps)?;
        println!(
            "{n:>6} {:>10.5} {:>10.4} {:>10.5} {:>10.6}",
            p.epsilon, p.lambda_eps, p.sigma_eps, p.omega_eps
        );
    }
    Ok(())
}
