//! Local consistency: the one-step moments of the chain match those of the
//! continuous model up to O(dt^2), so halving dt divides the error by ~4.

use levy_indifference::chain::{build_grid, consistency_report, transition_kernel, GridSizing, Width};
use levy_indifference::levy::{process_std, ModelSpec};
use levy_indifference::market::MarketSpec;

fn error(model: &ModelSpec, steps: usize, sizing: &GridSizing) -> f64 {
    let market = MarketSpec::atm_reference(0.04);
    let grid = build_grid(model, &market, steps, sizing).unwrap();
    let kernel = transition_kernel(model, &grid).unwrap();
    let c = consistency_report(&kernel, model, &grid);
    c.mean_error.max(c.var_error)
}

fn assert_second_order(model: &ModelSpec, steps: &[usize], sizing: impl Fn(usize) -> GridSizing) {
    let errs: Vec<f64> = steps.iter().map(|&n| error(model, n, &sizing(n))).collect();
    println!("{:?} errors {errs:?}", model.family);
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..=4.5).contains(&r), "{:?}: ratio {r}", model.family);
    }
}

fn fixed(lbar: usize) -> GridSizing {
    GridSizing {
        lbar: Width::Fixed(lbar),
        ..Default::default()
    }
}

#[test]
fn diffusion_is_second_order() {
    assert_second_order(&ModelSpec::diffusion(0.1, 0.25), &[50, 100, 200, 400], |_| fixed(3));
}

#[test]
fn merton_is_second_order() {
    let model = ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8);
    assert_second_order(&model, &[25, 50, 100, 200], |_| GridSizing::default());
}

// The truncation point is held fixed and the width grows like sqrt(N), so
// the chain approximates the same truncated process at every refinement.
#[test]
fn variance_gamma_is_second_order() {
    let model = ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1);
    let std = process_std(&model);
    let eps = 1.5 * std / 50f64.sqrt();
    assert_second_order(&model, &[100, 200, 400, 800], |n| {
        let scale = (n as f64 / 50.0).sqrt();
        let half = (21.0 * scale).round() as usize;
        GridSizing {
            epsilon: Some(eps),
            ..fixed(2 * half + 1)
        }
    });
}
