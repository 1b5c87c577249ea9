//! Risk-neutral reference prices for European calls: Black-Scholes, the
//! Merton series and a finite-difference solver for the pricing PIDE.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::chain::cell_weights;
use crate::error::{Error, Result};
use crate::levy::{process_std, small_jump_params, LevyFamily, ModelSpec};
use crate::market::MarketSpec;

fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Black-Scholes price of a European call.
pub fn bs_price(s0: f64, k: f64, t: f64, r: f64, sigma: f64) -> f64 {
    let vol = sigma * t.max(0.0).sqrt();
    let disc_k = k * (-r * t.max(0.0)).exp();
    if vol <= 0.0 {
        return (s0 - disc_k).max(0.0);
    }
    let d1 = ((s0 / k).ln() + (r + 0.5 * sigma * sigma) * t) / vol;
    let d2 = d1 - vol;
    s0 * std_normal_cdf(d1) - disc_k * std_normal_cdf(d2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPrice {
    pub price: f64,
    /// Upper bound on the omitted terms: `S0 * P(N_T >= n_terms)`.
    pub tail_bound: f64,
    pub n_terms: usize,
}

/// Merton's series: Poisson mixture of Black-Scholes prices under the
/// risk-neutral measure, truncated after `n_terms` terms.
///
/// Only the Merton parameters of `model` are read; the drift is ignored.
pub fn merton_series_price(
    s0: f64,
    k: f64,
    t: f64,
    r: f64,
    model: &ModelSpec,
    n_terms: usize,
) -> SeriesPrice {
    let (alpha, xi, lambda) = (model.merton_alpha, model.merton_xi, model.merton_lambda);
    let m_bar = (alpha + 0.5 * xi * xi).exp() - 1.0;
    let intensity = lambda * (1.0 + m_bar) * t;
    let n_terms = n_terms.max(1);
    let mut weight = (-intensity).exp();
    let mut mass = 0.0;
    let mut price = 0.0;
    for n in 0..n_terms {
        if n > 0 {
            weight *= intensity / n as f64;
        }
        let nf = n as f64;
        let sigma_n = (model.sigma * model.sigma + nf * xi * xi / t).sqrt();
        let r_n = r - lambda * m_bar + nf * (1.0 + m_bar).ln() / t;
        price += weight * bs_price(s0, k, t, r_n, sigma_n);
        mass += weight;
    }
    SeriesPrice {
        price,
        tail_bound: s0 * (1.0 - mass).max(0.0),
        n_terms,
    }
}

/// Uniform space-time grid for the PIDE solver. `ln K` is a grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PideGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub dx: f64,
    pub dt_p: f64,
}

/// Half-width of the log-price domain in standard deviations of `X_T`.
const DOMAIN_STDS: f64 = 6.0;

impl PideGrid {
    /// Grid with `n_space` cells covering `ln K +- (6 sigma_X sqrt(T) + |ln(S0/K)|)`.
    pub fn new(model: &ModelSpec, market: &MarketSpec, n_space: usize, n_time: usize) -> Result<Self> {
        let half = DOMAIN_STDS * process_std(model) * market.maturity.sqrt()
            + (market.spot / market.strike).ln().abs();
        let n_space = n_space + n_space % 2;
        Self::centered(market, 2.0 * half / n_space as f64, n_space, n_time)
    }

    /// Grid with spacing `dx`, wide enough for the same domain as [`PideGrid::new`].
    pub fn with_spacing(model: &ModelSpec, market: &MarketSpec, dx: f64, n_time: usize) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::invalid("dx", "must be > 0"));
        }
        let half = DOMAIN_STDS * process_std(model) * market.maturity.sqrt()
            + (market.spot / market.strike).ln().abs();
        let cells = (half / dx).ceil() as usize;
        Self::centered(market, dx, 2 * cells, n_time)
    }

    fn centered(market: &MarketSpec, dx: f64, n_space: usize, n_time: usize) -> Result<Self> {
        if n_space < 4 || !dx.is_finite() || dx <= 0.0 {
            return Err(Error::invalid("n_space", "need at least 4 cells of positive width"));
        }
        if n_time == 0 {
            return Err(Error::invalid("n_time", "must be >= 1"));
        }
        let center = market.strike.ln();
        let half = dx * (n_space / 2) as f64;
        Ok(PideGrid {
            x_min: center - half,
            x_max: center + half,
            n_space,
            n_time,
            dx,
            dt_p: market.maturity / n_time as f64,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }
}

/// Tail mass neglected by the jump window, relative to the jump intensity.
const JUMP_TAIL: f64 = 1e-12;

/// Cell offsets `(k_down, k_up)` covering the jump measure up to [`JUMP_TAIL`].
fn jump_window(model: &ModelSpec, dx: f64) -> (usize, usize) {
    let (lo, hi) = match model.family {
        LevyFamily::Diffusion => return (0, 0),
        LevyFamily::Merton => {
            // Gaussian quantile for JUMP_TAIL
            let span = 7.1 * model.merton_xi;
            (model.merton_alpha - span, model.merton_alpha + span)
        }
        LevyFamily::VarianceGamma => {
            let (left, right) = model.vg_tail_rates();
            let decades = -JUMP_TAIL.ln();
            (-decades / left, decades / right)
        }
    };
    let cells = |b: f64| (b.max(0.0) / dx).ceil() as usize + 1;
    (cells(-lo), cells(hi))
}

/// Price of a European call from the pricing PIDE, solved backward in time
/// with an implicit step for drift, diffusion and discounting and an
/// explicit step for the jump integral.
///
/// The drift of `model` is replaced by `market.rate`. Variance Gamma jumps
/// below `1.5 dx` are replaced by a Brownian motion of the same variance.
pub fn pide_price(model: &ModelSpec, market: &MarketSpec, grid: &PideGrid) -> Result<f64> {
    model.validate()?;
    market.validate()?;
    let model = model.risk_neutral(market.rate);
    let r = market.rate;
    let dx = grid.dx;
    let dt = grid.dt_p;

    let (variance, compensator, epsilon) = match model.family {
        LevyFamily::Diffusion => (model.sigma * model.sigma, 0.0, None),
        LevyFamily::Merton => (
            model.sigma * model.sigma,
            model.exp_compensator().unwrap_or(f64::NAN),
            None,
        ),
        LevyFamily::VarianceGamma => {
            let sj = small_jump_params(&model, 1.5 * dx)?;
            (sj.sigma_eps * sj.sigma_eps, sj.omega_eps, Some(sj.epsilon))
        }
    };
    let drift = r - 0.5 * variance - compensator;
    let (k_down, k_up) = jump_window(&model, dx);
    let weights = cell_weights(&model, dx, k_down, k_up, epsilon);
    if weights.lambda_hat * dt > 1.0 {
        return Err(Error::infeasible(
            "jump_activity",
            format!("lambda_hat*dt = {:.4} > 1", weights.lambda_hat * dt),
        ));
    }

    let n = grid.n_space;
    let strike = market.strike;
    let xs: Vec<f64> = (0..=n).map(|i| grid.x(i)).collect();
    let right_value = |x: f64, tau: f64| x.exp() - strike * (-r * tau).exp();

    // central differences; the implicit step stays stable for any cell
    // Peclet number, and upwinding would add O(dx) diffusion that swamps
    // the small-jump variance of VG
    let diff = 0.5 * variance / (dx * dx);
    let lower = diff - 0.5 * drift / dx;
    let upper = diff + 0.5 * drift / dx;
    let a = -dt * lower;
    let c = -dt * upper;
    let b = 1.0 + dt * (lower + upper + r);

    let mut value: Vec<f64> = xs.iter().map(|x| (x.exp() - strike).max(0.0)).collect();
    let mut rhs = vec![0.0; n + 1];
    let mut c_prime = vec![0.0; n + 1];
    let kd = k_down as i64;
    for step in 0..grid.n_time {
        let tau = step as f64 * dt;
        let tau_next = tau + dt;
        let outside = |idx: i64| -> f64 {
            if idx < 0 {
                0.0
            } else {
                right_value(grid.x_min + idx as f64 * dx, tau)
            }
        };
        for i in 1..n {
            let mut jump = 0.0;
            if weights.lambda_hat > 0.0 {
                for (idx, &w) in weights.nu.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let target = i as i64 + idx as i64 - kd;
                    let v = if (0..=n as i64).contains(&target) {
                        value[target as usize]
                    } else {
                        outside(target)
                    };
                    jump += w * v;
                }
                jump -= weights.lambda_hat * value[i];
            }
            rhs[i] = value[i] + dt * jump;
        }
        let left = 0.0;
        let right = right_value(xs[n], tau_next);
        rhs[1] -= a * left;
        rhs[n - 1] -= c * right;
        // Thomas algorithm on interior nodes 1..n-1
        c_prime[1] = c / b;
        rhs[1] /= b;
        for i in 2..n {
            let m = b - a * c_prime[i - 1];
            c_prime[i] = c / m;
            rhs[i] = (rhs[i] - a * rhs[i - 1]) / m;
        }
        value[n - 1] = rhs[n - 1];
        for i in (1..n - 1).rev() {
            value[i] = rhs[i] - c_prime[i] * value[i + 1];
        }
        value[0] = left;
        value[n] = right;
    }

    let pos = (market.spot.ln() - grid.x_min) / dx;
    let i = (pos.floor() as usize).min(n - 1);
    let frac = pos - i as f64;
    Ok(value[i] * (1.0 - frac) + value[i + 1] * frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table3() -> ModelSpec {
        ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.8)
    }

    #[test]
    fn black_scholes_limits() {
        assert!((bs_price(15.0, 15.0, 1.0, 0.1, 0.25) - 2.246368616746695).abs() < 1e-9);
        assert_eq!(bs_price(16.0, 15.0, 0.0, 0.1, 0.25), 1.0);
        assert_eq!(bs_price(14.0, 15.0, 1.0, 0.0, 0.0), 0.0);
        assert!((bs_price(16.0, 15.0, 1.0, 0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn series_reduces_to_black_scholes() {
        let m = ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 0.0);
        let s = merton_series_price(15.0, 15.0, 1.0, 0.1, &m, 5);
        assert_eq!(s.price, bs_price(15.0, 15.0, 1.0, 0.1, 0.25));
        assert_eq!(s.tail_bound, 0.0);
    }

    #[test]
    fn series_tail() {
        let a = merton_series_price(15.0, 15.0, 1.0, 0.1, &table3(), 30);
        let b = merton_series_price(15.0, 15.0, 1.0, 0.1, &table3(), 60);
        assert!((a.price - b.price).abs() < 1e-10);
        assert!(a.tail_bound < 1e-10);
        assert!((b.price - 3.4776).abs() < 5e-4);
    }

    #[test]
    fn pide_diffusion_is_second_order_in_space() {
        let model = ModelSpec::diffusion(0.1, 0.25);
        let market = MarketSpec::atm_reference(0.001);
        let exact = bs_price(15.0, 15.0, 1.0, 0.1, 0.25);
        // fine time grid so the spatial error dominates
        let err = |n| {
            let g = PideGrid::new(&model, &market, n, 20_000).unwrap();
            (pide_price(&model, &market, &g).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "{e1} {e2}");
    }

    #[test]
    fn pide_price_bounds() {
        let market = MarketSpec::atm_reference(0.001);
        let lower = 15.0 - 15.0 * (-0.1f64).exp();
        for model in [
            ModelSpec::diffusion(0.1, 0.25),
            table3(),
            ModelSpec::variance_gamma(0.1, -0.1, 0.2, 0.1),
        ] {
            let g = PideGrid::new(&model, &market, 400, 400).unwrap();
            let p = pide_price(&model, &market, &g).unwrap();
            assert!(p > lower && p < 15.0, "{p}");
        }
    }

    #[test]
    fn explicit_jump_limit() {
        let model = ModelSpec::merton(0.1, 0.25, 0.0, 0.5, 3.0);
        let market = MarketSpec::atm_reference(0.001);
        let g = PideGrid::new(&model, &market, 200, 1).unwrap();
        assert!(matches!(
            pide_price(&model, &market, &g),
            Err(Error::GridInfeasible { .. })
        ));
    }

    #[test]
    fn grid_snaps_strike() {
        let model = table3();
        let market = MarketSpec {
            spot: 16.0,
            ..MarketSpec::atm_reference(0.04)
        };
        let g = PideGrid::new(&model, &market, 301, 10).unwrap();
        assert_eq!(g.n_space % 2, 0);
        let mid = g.x(g.n_space / 2);
        assert!((mid - 15f64.ln()).abs() < 1e-12);
        assert!(g.x_max - 16f64.ln() >= 5.0 * process_std(&model));
    }
}
