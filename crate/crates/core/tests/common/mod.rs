//! Plain enumeration of every price path and every trade, carried out on
//! `Q = exp(W)` directly.

use levy_indifference::chain::{build_grid, transition_kernel, GridSizing, GridSpec, TransitionKernel, Width};
use levy_indifference::dp::{indifference_price, solve, OptionPosition, PriceKind};
use levy_indifference::levy::ModelSpec;
use levy_indifference::market::MarketSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Liquidation wealth at maturity, option settled.
fn terminal_wealth(position: OptionPosition, y: f64, s: f64, m: &MarketSpec) -> f64 {
    let liquidate = |y: f64| {
        if y > 0.0 {
            y * s * (1.0 - m.cost_sell)
        } else {
            y * s * (1.0 + m.cost_buy)
        }
    };
    let exercised = (1.0 - m.cost_sell) * s > m.strike;
    match position {
        OptionPosition::Writer if exercised => liquidate(y - 1.0) + m.strike,
        OptionPosition::Buyer if exercised => liquidate(y + 1.0) - m.strike,
        _ => liquidate(y),
    }
}

pub struct Oracle<'a> {
    pub grid: &'a GridSpec,
    pub kernel: &'a TransitionKernel,
    pub market: &'a MarketSpec,
    pub position: OptionPosition,
}

impl Oracle<'_> {
    /// `Q` at step `n`, log-price `x`, holding level `i`, before trading.
    pub fn q(&self, n: usize, x: f64, i: usize) -> f64 {
        let g = self.grid;
        let s = x.exp();
        if n == g.steps {
            return (-self.market.gamma * terminal_wealth(self.position, g.shares(i), s, self.market)).exp();
        }
        let growth = self.market.gamma / (-self.market.rate * (self.market.maturity - g.time(n))).exp();
        let mut best = f64::INFINITY;
        for target in 0..g.mbar() {
            let dy = g.shares(target) - g.shares(i);
            let cash = if dy > 0.0 {
                -dy * s * (1.0 + self.market.cost_buy)
            } else {
                -dy * s * (1.0 - self.market.cost_sell)
            };
            let mut expect = 0.0;
            for (idx, p) in self.kernel.p_total.iter().enumerate() {
                let k = self.kernel.offset(idx) as f64;
                expect += p * self.q(n + 1, x + k * g.h_x, target);
            }
            best = best.min((-growth * cash).exp() * expect);
        }
        best
    }
}

pub fn random_case(rng: &mut ChaCha8Rng) -> (ModelSpec, MarketSpec, usize, GridSizing) {
    let mu = rng.random_range(0.0..0.2);
    let model = match rng.random_range(0..3) {
        0 => ModelSpec::diffusion(mu, rng.random_range(0.1..0.5)),
        1 => ModelSpec::merton(
            mu,
            rng.random_range(0.1..0.4),
            rng.random_range(-0.2..0.2),
            rng.random_range(0.05..0.3),
            rng.random_range(0.1..1.0),
        ),
        _ => ModelSpec::variance_gamma(
            mu,
            rng.random_range(-0.2..0.2),
            rng.random_range(0.15..0.4),
            rng.random_range(0.05..0.3),
        ),
    };
    let market = MarketSpec {
        spot: rng.random_range(10.0..20.0),
        strike: rng.random_range(10.0..20.0),
        maturity: rng.random_range(0.25..1.0),
        rate: rng.random_range(0.0..0.1),
        cost_buy: rng.random_range(0.0..0.05),
        cost_sell: rng.random_range(0.0..0.05),
        gamma: rng.random_range(0.01..0.5),
        initial_shares: 0.0,
    };
    let mbar = rng.random_range(2..=5);
    let sizing = GridSizing {
        lbar: Width::Fixed(3),
        mbar: Width::Fixed(mbar),
        short_levels: Some(rng.random_range(0..mbar)),
        share_step: Some(rng.random_range(0.2..1.0)),
        ..GridSizing::default()
    };
    (model, market, rng.random_range(1..=3), sizing)
}

/// Worst errors of the dynamic program against the enumeration.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumerationReport {
    pub cases: usize,
    /// Relative error of the root value.
    pub worst_root: f64,
    /// Absolute error of writer and buyer prices.
    pub worst_price: f64,
}

/// Compares the dynamic program with the enumeration on `cases` random
/// feasible instances.
pub fn compare_with_enumeration(cases: usize, seed: u64) -> EnumerationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EnumerationReport::default();
    while report.cases < cases {
        let (model, market, steps, sizing) = random_case(&mut rng);
        let Ok(grid) = build_grid(&model, &market, steps, &sizing) else {
            continue;
        };
        let kernel = transition_kernel(&model, &grid).unwrap();
        let mut roots = Vec::new();
        let mut expected = Vec::new();
        for position in [OptionPosition::None, OptionPosition::Writer, OptionPosition::Buyer] {
            let oracle = Oracle {
                grid: &grid,
                kernel: &kernel,
                market: &market,
                position,
            };
            let expect = oracle.q(0, grid.log_spot, grid.y0_index).ln();
            let sol = solve(position, &model, &market, &grid).unwrap();
            let got = sol.root.get(0, grid.y0_index);
            report.worst_root = report.worst_root.max((got - expect).abs() / expect.abs().max(1.0));
            roots.push(sol.root);
            expected.push(expect);
        }
        let scale = market.discount(0.0) / market.gamma;
        let writer = indifference_price(PriceKind::Writer, &roots[0], &roots[1], &market, &grid).unwrap();
        let buyer = indifference_price(PriceKind::Buyer, &roots[0], &roots[2], &market, &grid).unwrap();
        report.worst_price = report
            .worst_price
            .max((writer.price - scale * (expected[1] - expected[0])).abs())
            .max((buyer.price - scale * (expected[0] - expected[2])).abs());
        report.cases += 1;
    }
    report
}
