//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Reference values and tolerances are fixed constants. A failing
//! line is reported but does not fail the test unless `ACCEPTANCE_STRICT=1`.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use levy_indifference::benchmarks::{bs_price, merton_series_price, pide_price, PideGrid};
use levy_indifference::chain::{
    build_grid, consistency_report, jump_weights, transition_kernel, GridSizing,
};
use levy_indifference::dp::{price_positions, PriceKind};
use levy_indifference::levy::{process_std, ModelSpec};
use levy_indifference::market::MarketSpec;
use levy_indifference::mc::{martingale_check, mc_call_price, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MC_PATHS: usize = 10_000_000;
const MC_SEED: u64 = 2024;

fn diffusion() -> ModelSpec {
    ModelSpec::diffusion(0.1, 0.25)
}

fn merton() -> ModelSpec {
    ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8)
}

fn vg() -> ModelSpec {
    ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1)
}

#[derive(Default)]
struct Gate {
    passed: usize,
    failed: Vec<String>,
    /// Every (writer, buyer) pair priced by the gate.
    pairs: Vec<(String, f64, f64)>,
}

impl Gate {
    fn check(&mut self, id: &str, ok: bool, detail: impl AsRef<str>) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {id}: {}", detail.as_ref());
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }

    fn near(&mut self, id: &str, what: &str, got: f64, target: f64, tol: f64) {
        let ok = (got - target).abs() <= tol;
        let detail = format!("{what} = {got:.10} target {target} +- {tol:e} (diff {:+.2e})", got - target);
        self.check(id, ok, detail);
    }

    fn info(&self, id: &str, detail: impl AsRef<str>) {
        println!("INFO {id}: {}", detail.as_ref());
    }

    fn budget(&mut self, id: &str, elapsed: Duration, limit: Duration) {
        let ok = elapsed <= limit;
        self.check(id, ok, format!("runtime {:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()));
    }

    /// Writer and buyer prices on the default lattice shape.
    fn dp(&mut self, label: String, model: &ModelSpec, market: &MarketSpec, steps: usize, sizing: &GridSizing) -> f64 {
        let grid = build_grid(model, market, steps, sizing).expect("feasible lattice");
        let pair = price_positions(&[PriceKind::Writer, PriceKind::Buyer], model, market, &grid).unwrap();
        let (w, b) = (pair.writer.unwrap().price, pair.buyer.unwrap().price);
        self.pairs.push((label, w, b));
        w
    }
}

fn fixed(lbar: usize) -> GridSizing {
    GridSizing::with_lbar(lbar)
}

fn closed_form_anchors(g: &mut Gate) {
    let start = Instant::now();
    let bs = bs_price(15.0, 15.0, 1.0, 0.1, 0.25);
    g.near("C1 black-scholes", "bs_price", bs, 2.2463, 5e-5);
    let series = merton_series_price(15.0, 15.0, 1.0, 0.1, &merton(), 100);
    g.near("C1 merton-series", "merton_series_price", series.price, 3.4776, 5e-4);
    g.info("C1", format!("series tail bound {:.1e} after {} terms", series.tail_bound, series.n_terms));
    g.budget("C1 runtime", start.elapsed(), Duration::from_secs(1));
}

fn pide_anchors(g: &mut Gate) {
    let market = MarketSpec::atm_reference(0.04);
    let cases = [
        ("diffusion", diffusion(), 2.2463, 1e-3),
        ("merton", merton(), 3.4749, 3e-3),
        ("vg", vg(), 1.9823, 8e-3),
    ];
    for (name, model, target, tol) in cases {
        let start = Instant::now();
        let grid = PideGrid::new(&model, &market, 1000, 1000).unwrap();
        let p = pide_price(&model, &market, &grid).unwrap();
        g.near(&format!("C2 pide-{name}"), "pide_price", p, target, tol);
        g.budget(&format!("C2 pide-{name} runtime"), start.elapsed(), Duration::from_secs(120));
    }
}

const DIFFUSION_ROWS: [(usize, [f64; 3]); 4] = [
    (50, [2.2412146517, 2.2417649462, 2.2473119666]),
    (100, [2.2491427418, 2.2495065494, 2.2531593006]),
    (200, [2.2454227575, 2.2456761615, 2.2482167262]),
    (400, [2.2467842126, 2.2469596683, 2.2487172682]),
];
const DIFFUSION_GAMMAS: [f64; 3] = [1e-4, 1e-3, 1e-2];

fn diffusion_convergence(g: &mut Gate) {
    let mut slowest = Duration::ZERO;
    for (steps, targets) in DIFFUSION_ROWS {
        for (gamma, target) in DIFFUSION_GAMMAS.iter().zip(targets) {
            let start = Instant::now();
            let market = MarketSpec::atm_reference(*gamma);
            let w = g.dp(format!("diffusion N={steps} gamma={gamma}"), &diffusion(), &market, steps, &fixed(3));
            slowest = slowest.max(start.elapsed());
            g.near(&format!("C3 N={steps} gamma={gamma:e}"), "writer", w, target, 5e-3);
        }
    }
    g.budget("C3 runtime (slowest row)", slowest, Duration::from_secs(300));
}

fn merton_convergence(g: &mut Gate) {
    let start = Instant::now();
    let market = MarketSpec::atm_reference(0.04);
    for (steps, lbar, target) in [(50, 61, 3.4816000776), (75, 75, 3.4799801710), (100, 91, 3.4791415876)] {
        let w = g.dp(format!("merton N={steps} Lbar={lbar}"), &merton(), &market, steps, &fixed(lbar));
        g.near(&format!("C4 N={steps} Lbar={lbar}"), "writer", w, target, 5e-3);
    }
    let prices: Vec<f64> = [51, 71, 91, 111]
        .iter()
        .map(|&l| g.dp(format!("merton N=100 Lbar={l}"), &merton(), &market, 100, &fixed(l)))
        .collect();
    let gaps: Vec<f64> = prices[..3].iter().map(|p| (p - prices[3]).abs()).collect();
    let shrinking = gaps[0] > gaps[1] && gaps[1] > gaps[2];
    g.check(
        "C4 truncation decay",
        shrinking,
        format!(
            "N=100 prices {:.10?} for Lbar 51/71/91/111, gaps to Lbar=111 [{}]",
            prices,
            gaps.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    );
    g.budget("C4 runtime", start.elapsed(), Duration::from_secs(600));
}

fn vg_convergence(g: &mut Gate) {
    let start = Instant::now();
    let market = MarketSpec::atm_reference(0.05);
    for (steps, lambda, target) in [(50, 4.73, 1.9109347161), (100, 7.82, 1.9578065378), (150, 10.01, 1.9820789189)] {
        let grid = build_grid(&vg(), &market, steps, &fixed(43)).unwrap();
        let lambda_eps = grid.small_jumps.unwrap().lambda_eps;
        g.near(&format!("C5 lambda_eps N={steps}"), "lambda_eps", lambda_eps, lambda, 0.05);
        let w = g.dp(format!("vg N={steps} Lbar=43"), &vg(), &market, steps, &fixed(43));
        g.near(&format!("C5 N={steps} Lbar=43"), "writer", w, target, 1e-2);
    }
    g.budget("C5 runtime", start.elapsed(), Duration::from_secs(600));
}

fn strictly(values: &[f64], up: bool) -> bool {
    values.windows(2).all(|w| if up { w[1] > w[0] } else { w[1] < w[0] })
}

fn cost_monotonicity(g: &mut Gate) {
    let costs = [0.0, 0.01, 0.02, 0.03, 0.04];
    let cases = [
        ("merton", merton(), 0.04, 100, 81, [3.4771, 3.6400, 3.8212, 4.0054, 4.1864]),
        ("vg", vg(), 0.05, 150, 43, [1.9821, 2.0921, 2.1870, 2.2568, 2.3131]),
    ];
    for (name, model, gamma, steps, lbar, targets) in cases {
        let mut writers = Vec::new();
        let mut buyers = Vec::new();
        for (cost, target) in costs.iter().zip(targets) {
            let market = MarketSpec::atm_reference(gamma).with_costs(*cost);
            let w = g.dp(format!("{name} cost={cost}"), &model, &market, steps, &fixed(lbar));
            writers.push(w);
            buyers.push(g.pairs.last().unwrap().2);
            g.near(&format!("C6 {name} cost={cost}"), "writer", w, target, 1e-2);
        }
        g.check(
            &format!("C6 {name} writer increasing"),
            strictly(&writers, true),
            format!("{writers:.4?}"),
        );
        g.check(
            &format!("C6 {name} buyer decreasing"),
            strictly(&buyers, false),
            format!("{buyers:.4?}"),
        );
        let increments: Vec<f64> = writers.windows(2).map(|w| w[1] - w[0]).collect();
        let reference: Vec<f64> = targets.windows(2).map(|w| w[1] - w[0]).collect();
        g.info(
            "C6",
            format!("{name} writer increments {increments:.4?}, reference {reference:.4?}"),
        );
    }
}

fn kernel_rows(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let market = MarketSpec::atm_reference(0.01);
    let (mut count, mut worst, mut negative) = (0, 0.0f64, 0);
    while count < 100 {
        let mu = rng.random_range(0.0..0.2);
        let model = match rng.random_range(0..3) {
            0 => ModelSpec::diffusion(mu, rng.random_range(0.1..0.5)),
            1 => ModelSpec::merton(
                mu,
                rng.random_range(0.1..0.4),
                rng.random_range(-0.3..0.3),
                rng.random_range(0.05..0.6),
                rng.random_range(0.1..2.0),
            ),
            _ => ModelSpec::variance_gamma(
                mu,
                rng.random_range(-0.3..0.3),
                rng.random_range(0.1..0.4),
                rng.random_range(0.05..0.4),
            ),
        };
        let steps = rng.random_range(10..300);
        let sizing = if rng.random_bool(0.5) {
            GridSizing::default()
        } else {
            fixed(2 * rng.random_range(1..60) + 1)
        };
        let Ok(grid) = build_grid(&model, &market, steps, &sizing) else {
            continue;
        };
        let kernel = transition_kernel(&model, &grid).unwrap();
        worst = worst.max(kernel.normalization_residual());
        negative += kernel.p_total.iter().filter(|&&p| p < 0.0).count();
        count += 1;
    }
    g.check(
        "C7 kernel rows",
        worst < 1e-12 && negative == 0,
        format!("100 feasible configs, worst |sum p - 1| = {worst:.1e}, negative entries {negative}"),
    );
}

fn consistency_ratios(model: &ModelSpec, steps: &[usize], sizing: impl Fn(usize) -> GridSizing) -> Vec<f64> {
    let market = MarketSpec::atm_reference(0.04);
    let errs: Vec<f64> = steps
        .iter()
        .map(|&n| {
            let grid = build_grid(model, &market, n, &sizing(n)).unwrap();
            let kernel = transition_kernel(model, &grid).unwrap();
            let c = consistency_report(&kernel, model, &grid);
            c.mean_error.max(c.var_error)
        })
        .collect();
    errs.windows(2).map(|w| w[0] / w[1]).collect()
}

fn local_consistency(g: &mut Gate) {
    let eps = 1.5 * process_std(&vg()) / 50f64.sqrt();
    let families = [
        ("diffusion", consistency_ratios(&diffusion(), &[50, 100, 200, 400], |_| fixed(3))),
        ("merton", consistency_ratios(&merton(), &[25, 50, 100, 200], |_| GridSizing::default())),
        (
            "vg",
            consistency_ratios(&vg(), &[100, 200, 400, 800], |n| {
                let half = (21.0 * (n as f64 / 50.0).sqrt()).round() as usize;
                GridSizing {
                    epsilon: Some(eps),
                    ..fixed(2 * half + 1)
                }
            }),
        ),
    ];
    for (name, ratios) in families {
        let ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
        g.check(&format!("C7 consistency {name}"), ok, format!("error ratios under dt halving {ratios:.3?}"));
    }
    let market = MarketSpec::atm_reference(0.05);
    let tied: Vec<f64> = [50, 100, 200, 400]
        .iter()
        .map(|&n| {
            let grid = build_grid(&vg(), &market, n, &fixed(43)).unwrap();
            let kernel = transition_kernel(&vg(), &grid).unwrap();
            let c = consistency_report(&kernel, &vg(), &grid);
            c.mean_error.max(c.var_error)
        })
        .collect();
    let ratios: Vec<f64> = tied.windows(2).map(|w| w[0] / w[1]).collect();
    g.info(
        "C7",
        format!("vg with eps = 1.5 h_x and Lbar = 43 (process changes with N): ratios {ratios:.3?}"),
    );
}

fn enumeration(g: &mut Gate) {
    let r = common::compare_with_enumeration(50, 11);
    g.check(
        "C7 brute force",
        r.cases == 50 && r.worst_root < 1e-12,
        format!("{} cases, worst relative root error {:.1e}, worst price error {:.1e}", r.cases, r.worst_root, r.worst_price),
    );
}

fn mu_insensitivity(g: &mut Gate) {
    let market = MarketSpec::atm_reference(0.04);
    let prices: Vec<f64> = (0..=6)
        .map(|i| {
            let mu = 0.05 * i as f64;
            let model = ModelSpec::merton(mu, 0.25, 0.0, 0.5, 0.8);
            g.dp(format!("merton mu={mu:.2}"), &model, &market, 100, &fixed(81))
        })
        .collect();
    let (lo, hi) = prices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    let spread = (hi - lo) / lo;
    g.check(
        "C7 mu-insensitivity",
        spread < 0.01,
        format!("Merton N=100 writer over mu = 0..0.3: {prices:.4?}, relative spread {spread:.2e}"),
    );
}

fn gamma_monotonicity(g: &mut Gate) {
    let gammas = [1e-3, 0.01, 0.04, 0.1, 0.2, 0.3];
    let prices: Vec<f64> = gammas
        .iter()
        .map(|&gamma| {
            let market = MarketSpec::atm_reference(gamma).with_costs(0.01);
            g.dp(format!("merton gamma={gamma}"), &merton(), &market, 100, &fixed(81))
        })
        .collect();
    let ok = prices.windows(2).all(|w| w[1] >= w[0]);
    g.check("C7 gamma-monotonicity", ok, format!("Merton writer, cost 0.01, gamma {gammas:?}: {prices:.4?}"));
}

fn writer_above_buyer(g: &mut Gate) {
    let bad: Vec<&(String, f64, f64)> = g.pairs.iter().filter(|(_, w, b)| w < b).collect();
    let detail = match bad.first() {
        None => format!("{} priced configurations", g.pairs.len()),
        Some((label, w, b)) => format!("{} violations, first {label}: writer {w} < buyer {b}", bad.len()),
    };
    let ok = bad.is_empty();
    g.check("C7 writer >= buyer", ok, detail);
}

fn monte_carlo(g: &mut Gate) {
    let market = MarketSpec::atm_reference(0.04);
    let sim = SimConfig::new(MC_PATHS, MC_SEED);
    for (name, model, target) in [("diffusion", diffusion(), 2.2463), ("merton", merton(), 3.4776), ("vg", vg(), 1.9870)] {
        let est = mc_call_price(&model, &market, &sim).unwrap();
        let z = est.z_score(target);
        g.check(
            &format!("C7 mc-{name}"),
            z.abs() <= 3.0,
            format!("{:.5} +- {:.5} vs {target}: z = {z:+.2}", est.mean, est.std_error),
        );
        let mart = martingale_check(&model, &market, &sim).unwrap();
        let z = mart.z_score(market.spot);
        g.check(
            &format!("C7 martingale-{name}"),
            z.abs() <= 3.0,
            format!("e^(-rT) E[S_T] = {:.5} +- {:.5}: z = {z:+.2}", mart.mean, mart.std_error),
        );
    }
    let flipped = ModelSpec::variance_gamma(0.1, 0.1, 0.2, 0.1);
    let est = mc_call_price(&flipped, &market, &sim).unwrap();
    g.info(
        "C7",
        format!(
            "vg with theta = +0.1: {:.5} +- {:.5}, z = {:+.2} against 1.9870",
            est.mean,
            est.std_error,
            est.z_score(1.9870)
        ),
    );
}

fn share_grid_sensitivity(g: &Gate) {
    let market = MarketSpec::atm_reference(1e-3);
    let grid_price = |fraction: f64| {
        let sizing = GridSizing {
            short_fraction: fraction,
            ..fixed(3)
        };
        let grid = build_grid(&diffusion(), &market, 100, &sizing).unwrap();
        let pair = price_positions(&[PriceKind::Writer], &diffusion(), &market, &grid).unwrap();
        pair.writer.unwrap().price
    };
    let rows: Vec<String> = [0.0, 0.2, 1.0 / 3.0, 0.5]
        .iter()
        .map(|&f| format!("{f:.3}: {:.10}", grid_price(f)))
        .collect();
    g.info("C3", format!("diffusion N=100 gamma=1e-3 writer by short fraction {}", rows.join(", ")));
}

fn cli_csv(config: &str, threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_levy-indiff"))
        .args(["price", "--config", config])
        .env("LEVY_INDIFF_THREADS", threads)
        .output()
        .unwrap();
    assert!(out.status.success());
    out.stdout
}

fn determinism(g: &mut Gate) {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/vg.toml");
    let same_cli = cli_csv(config, "1") == cli_csv(config, "4");
    let sim = SimConfig::new(1 << 20, 77);
    let mc = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| mc_call_price(&merton(), &MarketSpec::atm_reference(0.04), &sim).unwrap().mean.to_bits())
    };
    let same_mc = mc(1) == mc(4);
    g.check(
        "C8 determinism",
        same_cli && same_mc,
        format!("price CSV identical at 1 and 4 threads: {same_cli}; MC bits identical: {same_mc}"),
    );
}

fn main() {
    let start = Instant::now();
    let mut g = Gate::default();
    closed_form_anchors(&mut g);
    pide_anchors(&mut g);
    diffusion_convergence(&mut g);
    share_grid_sensitivity(&g);
    merton_convergence(&mut g);
    vg_convergence(&mut g);
    cost_monotonicity(&mut g);
    kernel_rows(&mut g);
    local_consistency(&mut g);
    enumeration(&mut g);
    mu_insensitivity(&mut g);
    gamma_monotonicity(&mut g);
    writer_above_buyer(&mut g);
    monte_carlo(&mut g);
    determinism(&mut g);
    let merton_grid = build_grid(&merton(), &MarketSpec::atm_reference(0.04), 100, &fixed(81)).unwrap();
    g.info(
        "summary",
        format!(
            "lambda_hat at Merton N=100 Lbar=81: {:.4}; total {:.0}s",
            jump_weights(&merton(), &merton_grid).lambda_hat,
            start.elapsed().as_secs_f64()
        ),
    );
    println!("{} passed, {} failed: {:?}", g.passed, g.failed.len(), g.failed);
    if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") && !g.failed.is_empty() {
        std::process::exit(1);
    }
}
