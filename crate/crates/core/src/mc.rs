//! Monte Carlo sampling of exponential Levy prices from the exact law of
//! `X_T`, used as an independent check of the lattice and PIDE prices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy::{LevyFamily, ModelSpec};
use crate::market::MarketSpec;

/// Paths per random stream. Chunks are the unit of parallel work, so the
/// output does not depend on the thread count.
pub const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Time steps per path; terminal sampling is exact so 1 is enough.
    pub n_steps: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        SimConfig {
            n_paths,
            n_steps: 1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be >= 1"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be >= 1"));
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl McEstimate {
    /// Distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// Exact sampler of the log-return over one step of length `dt`.
#[derive(Debug, Clone, Copy)]
enum Increment {
    Diffusion {
        drift: f64,
        vol: f64,
    },
    Merton {
        drift: f64,
        vol: f64,
        jumps: Option<Poisson<f64>>,
        alpha: f64,
        xi: f64,
    },
    VarianceGamma {
        drift: f64,
        clock: Gamma<f64>,
        theta: f64,
        sigma: f64,
    },
}

impl Increment {
    fn new(model: &ModelSpec, dt: f64) -> Result<Self> {
        // looser than ModelSpec::validate: degenerate jump-free models are fine here
        let ok = match model.family {
            LevyFamily::Diffusion => model.sigma >= 0.0,
            LevyFamily::Merton => model.sigma >= 0.0 && model.merton_xi >= 0.0 && model.merton_lambda >= 0.0,
            LevyFamily::VarianceGamma => model.vg_kappa > 0.0 && model.vg_sigma_bar >= 0.0,
        };
        if !ok || !model.mu.is_finite() {
            return Err(Error::invalid("model", "not a valid Levy triplet for sampling"));
        }
        let compensator = model
            .exp_compensator()
            .ok_or_else(|| Error::invalid("model", "E[exp(X)] is infinite"))?;
        let drift = (model.mu - 0.5 * model.sigma * model.sigma - compensator) * dt;
        let vol = model.sigma * dt.sqrt();
        Ok(match model.family {
            LevyFamily::Diffusion => Increment::Diffusion { drift, vol },
            LevyFamily::Merton => {
                let mean = model.merton_lambda * dt;
                let jumps = if mean > 0.0 {
                    Some(Poisson::new(mean).map_err(|e| Error::invalid("merton_lambda", e.to_string()))?)
                } else {
                    None
                };
                Increment::Merton {
                    drift,
                    vol,
                    jumps,
                    alpha: model.merton_alpha,
                    xi: model.merton_xi,
                }
            }
            LevyFamily::VarianceGamma => Increment::VarianceGamma {
                drift,
                clock: Gamma::new(dt / model.vg_kappa, model.vg_kappa)
                    .map_err(|e| Error::invalid("vg_kappa", e.to_string()))?,
                theta: model.vg_theta,
                sigma: model.vg_sigma_bar,
            },
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Increment::Diffusion { drift, vol } => {
                let z: f64 = StandardNormal.sample(rng);
                drift + vol * z
            }
            Increment::Merton {
                drift,
                vol,
                jumps,
                alpha,
                xi,
            } => {
                let z: f64 = StandardNormal.sample(rng);
                let mut x = drift + vol * z;
                if let Some(p) = jumps {
                    let n = p.sample(rng);
                    if n > 0.0 {
                        let zj: f64 = StandardNormal.sample(rng);
                        x += n * alpha + xi * n.sqrt() * zj;
                    }
                }
                x
            }
            Increment::VarianceGamma {
                drift,
                clock,
                theta,
                sigma,
            } => {
                let g = clock.sample(rng);
                let z: f64 = StandardNormal.sample(rng);
                drift + theta * g + sigma * g.sqrt() * z
            }
        }
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `f` on every terminal price of chunk `c`.
fn for_each_terminal<F: FnMut(f64)>(
    inc: &Increment,
    market: &MarketSpec,
    sim: &SimConfig,
    c: usize,
    mut f: F,
) {
    let mut rng = chunk_rng(sim.seed, c);
    let start = c * CHUNK;
    let len = CHUNK.min(sim.n_paths - start);
    for _ in 0..len {
        let mut x = 0.0;
        for _ in 0..sim.n_steps {
            x += inc.sample(&mut rng);
        }
        f(market.spot * x.exp());
    }
}

fn n_chunks(sim: &SimConfig) -> usize {
    sim.n_paths.div_ceil(CHUNK)
}

/// Draws `S_T` under the drift of `model` (not risk-neutralized here).
pub fn simulate_terminal(model: &ModelSpec, market: &MarketSpec, sim: &SimConfig) -> Result<Vec<f64>> {
    sim.validate()?;
    let inc = Increment::new(model, market.maturity / sim.n_steps as f64)?;
    let chunks: Vec<Vec<f64>> = (0..n_chunks(sim))
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::with_capacity(CHUNK);
            for_each_terminal(&inc, market, sim, c, |s| out.push(s));
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// Mean of `g(S_T)` with per-chunk sums reduced in chunk order.
fn estimate<G: Fn(f64) -> f64 + Sync>(
    model: &ModelSpec,
    market: &MarketSpec,
    sim: &SimConfig,
    g: G,
) -> Result<McEstimate> {
    sim.validate()?;
    let inc = Increment::new(model, market.maturity / sim.n_steps as f64)?;
    let sums: Vec<(f64, f64)> = (0..n_chunks(sim))
        .into_par_iter()
        .map(|c| {
            let (mut s1, mut s2) = (0.0, 0.0);
            for_each_terminal(&inc, market, sim, c, |s| {
                let v = g(s);
                s1 += v;
                s2 += v * v;
            });
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = sim.n_paths as f64;
    let mean = s1 / n;
    let var = if sim.n_paths > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_paths: sim.n_paths,
    })
}

/// Risk-neutral call price `e^{-rT} E[(S_T - K)^+]`; the drift of `model`
/// is replaced by the market rate.
pub fn mc_call_price(model: &ModelSpec, market: &MarketSpec, sim: &SimConfig) -> Result<McEstimate> {
    let rn = model.risk_neutral(market.rate);
    let disc = (-market.rate * market.maturity).exp();
    let k = market.strike;
    estimate(&rn, market, sim, |s| disc * (s - k).max(0.0))
}

/// `e^{-rT} E[S_T]` under the risk-neutral model; should equal `S0`.
pub fn martingale_check(model: &ModelSpec, market: &MarketSpec, sim: &SimConfig) -> Result<McEstimate> {
    let rn = model.risk_neutral(market.rate);
    let disc = (-market.rate * market.maturity).exp();
    estimate(&rn, market, sim, |s| disc * s)
}
