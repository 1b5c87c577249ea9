//! Backward dynamic programming for the exponential-utility portfolio
//! problem with proportional costs, and the indifference prices it yields.
//!
//! Values are stored in the log domain, `W = ln Q`. One backward step is a
//! time step (expectation over the one-step law, a log-sum-exp) followed by
//! a control step (best single trade from the expectation of the next slice).

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::chain::{transition_kernel, GridSpec, LatticeKey, TransitionKernel};
use crate::error::{Error, Result};
use crate::levy::ModelSpec;
use crate::market::MarketSpec;
use crate::report::fmt_sig;

/// Option position held to maturity on top of the trading account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionPosition {
    None,
    Writer,
    Buyer,
}

/// Which side of the trade is priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriceKind {
    Writer,
    Buyer,
}

impl PriceKind {
    pub fn position(self) -> OptionPosition {
        match self {
            PriceKind::Writer => OptionPosition::Writer,
            PriceKind::Buyer => OptionPosition::Buyer,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PriceKind::Writer => "writer",
            PriceKind::Buyer => "buyer",
        }
    }
}

/// Log-domain value `W(node, share)` on one time slice.
///
/// Storage is share-major: `w[i * nodes + node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub n: usize,
    pub nodes: usize,
    pub shares: usize,
    pub w: Vec<f64>,
    key: LatticeKey,
}

impl ValueSurface {
    fn filled(n: usize, grid: &GridSpec, value: f64) -> Self {
        let nodes = grid.nodes_at(n);
        ValueSurface {
            n,
            nodes,
            shares: grid.mbar(),
            w: vec![value; nodes * grid.mbar()],
            key: grid.key(),
        }
    }

    pub fn get(&self, node: usize, share: usize) -> f64 {
        self.w[share * self.nodes + node]
    }

    pub fn column(&self, share: usize) -> &[f64] {
        &self.w[share * self.nodes..(share + 1) * self.nodes]
    }

    pub fn key(&self) -> LatticeKey {
        self.key
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: f64) -> Self {
        ValueSurface {
            w: self.w.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }
}

/// Terminal slice: `W = -gamma * (liquidation wealth)` including the
/// settlement of the option.
pub fn terminal_surface(
    position: OptionPosition,
    grid: &GridSpec,
    market: &MarketSpec,
) -> ValueSurface {
    let n = grid.steps;
    let mut surface = ValueSurface::filled(n, grid, 0.0);
    let nodes = surface.nodes;
    for i in 0..grid.mbar() {
        let y = grid.shares(i);
        for j in 0..nodes {
            let s = grid.log_price(n, j).exp();
            let wealth = match position {
                OptionPosition::Writer if market.exercised(s) => {
                    market.cash_value(y - 1.0, s) + market.strike
                }
                OptionPosition::Buyer if market.exercised(s) => {
                    market.cash_value(y + 1.0, s) - market.strike
                }
                _ => market.cash_value(y, s),
            };
            surface.w[i * nodes + j] = -market.gamma * wealth;
        }
    }
    surface
}

/// Most target nodes sharing one exponential shift.
const BLOCK: usize = 64;

/// Largest spread of window maxima inside one block; keeps every node's
/// dominant term far above underflow after the shared shift.
const BLOCK_SPREAD: f64 = 300.0;

/// Blocks shorter than this use the per-node log-sum-exp.
const MIN_BLOCK: usize = 6;

/// A shifted sum below this has underflowed too far and the node is
/// recomputed with the per-node log-sum-exp.
const TINY_SUM: f64 = 1e-200;

/// Expectation step: `E(j, i) = ln sum_k p_k exp(W_next(j + k, i))`.
///
/// Returns the slice at `next.n - 1` and the number of nodes evaluated with
/// the per-node log-sum-exp instead of a shared shift.
pub fn time_step(next: &ValueSurface, kernel: &TransitionKernel) -> (ValueSurface, usize) {
    assert!(next.n >= 1, "no time step before the root");
    let lbar = kernel.len();
    let out_nodes = next.nodes - (lbar - 1);
    let mut out = ValueSurface {
        n: next.n - 1,
        nodes: out_nodes,
        shares: next.shares,
        w: vec![0.0; out_nodes * next.shares],
        key: next.key,
    };
    let log_p: Vec<f64> = kernel.p_total.iter().map(|p| p.ln()).collect();
    let fallbacks: usize = out
        .w
        .par_chunks_mut(out_nodes)
        .enumerate()
        .map_init(Scratch::default, |scratch, (i, dst)| {
            convolve_log(next.column(i), &kernel.p_total, &log_p, dst, scratch)
        })
        .sum();
    (out, fallbacks)
}

#[derive(Default)]
struct Scratch {
    q: Vec<f64>,
    acc: Vec<f64>,
    window_max: Vec<f64>,
    deque: std::collections::VecDeque<usize>,
}

/// `out[j] = max(src[j..j + width])`.
fn sliding_max(src: &[f64], width: usize, out: &mut Vec<f64>, deque: &mut std::collections::VecDeque<usize>) {
    out.clear();
    deque.clear();
    for (idx, &v) in src.iter().enumerate() {
        while deque.back().is_some_and(|&b| src[b] <= v) {
            deque.pop_back();
        }
        deque.push_back(idx);
        if deque[0] + width <= idx {
            deque.pop_front();
        }
        if idx + 1 >= width {
            out.push(src[deque[0]]);
        }
    }
}

fn convolve_log(src: &[f64], p: &[f64], log_p: &[f64], dst: &mut [f64], s: &mut Scratch) -> usize {
    let lbar = p.len();
    sliding_max(src, lbar, &mut s.window_max, &mut s.deque);
    let maxima = &s.window_max;
    let mut fallbacks = 0;
    let mut j0 = 0;
    while j0 < dst.len() {
        let (mut lo, mut hi) = (maxima[j0], maxima[j0]);
        let mut j1 = j0 + 1;
        while j1 < dst.len() && j1 - j0 < BLOCK {
            let (l, h) = (lo.min(maxima[j1]), hi.max(maxima[j1]));
            if h - l > BLOCK_SPREAD {
                break;
            }
            lo = l;
            hi = h;
            j1 += 1;
        }
        if j1 - j0 < MIN_BLOCK {
            for j in j0..j1 {
                dst[j] = exact_lse(&src[j..j + lbar], log_p);
            }
            fallbacks += j1 - j0;
            j0 = j1;
            continue;
        }
        let m = hi;
        let width = j1 - j0;
        s.q.clear();
        s.q.extend(src[j0..j1 + lbar - 1].iter().map(|w| (w - m).exp()));
        s.acc.clear();
        s.acc.resize(width, 0.0);
        for (k, pk) in p.iter().enumerate() {
            for (a, q) in s.acc.iter_mut().zip(&s.q[k..k + width]) {
                *a += pk * q;
            }
        }
        for (t, &acc) in s.acc.iter().enumerate() {
            let j = j0 + t;
            dst[j] = if acc > TINY_SUM {
                m + acc.ln()
            } else {
                fallbacks += 1;
                exact_lse(&src[j..j + lbar], log_p)
            };
        }
        j0 = j1;
    }
    fallbacks
}

/// Exact log-sum-exp of `src + log_p`. Terms more than `PRUNE` below the
/// largest one change the sum by less than `e^-PRUNE` relative and are skipped.
fn exact_lse(src: &[f64], log_p: &[f64]) -> f64 {
    const PRUNE: f64 = 50.0;
    let m = src
        .iter()
        .zip(log_p)
        .map(|(w, lp)| w + lp)
        .fold(f64::NEG_INFINITY, f64::max);
    let acc: f64 = src
        .iter()
        .zip(log_p)
        .map(|(w, lp)| w + lp - m)
        .filter(|d| *d > -PRUNE)
        .map(f64::exp)
        .sum();
    m + acc.ln()
}

/// Per-unit trade costs `(buy, sell)` in utility units at node `j` of step `n`,
/// for one share step.
fn trade_costs(grid: &GridSpec, market: &MarketSpec, n: usize, j: usize) -> (f64, f64) {
    let s = grid.log_price(n, j).exp();
    let scale = market.gamma / market.discount(grid.time(n)) * s * grid.h_y;
    (
        scale * (1.0 + market.cost_buy),
        scale * (1.0 - market.cost_sell),
    )
}

/// Control step: `W(j, i) = min(E(j, i), min_d [d c_b + E(j, i + d)],
/// min_d [-d c_s + E(j, i - d)])` over trades keeping the share index on
/// the grid. Runs in `O(Mbar)` per node through the running minima
/// `B(i) = c_b + min(E(i+1), B(i+1))` and `S(i) = -c_s + min(E(i-1), S(i-1))`.
pub fn control_step(expect: &ValueSurface, grid: &GridSpec, market: &MarketSpec) -> ValueSurface {
    let nodes = expect.nodes;
    let mbar = expect.shares;
    let mut out = expect.clone();
    let (buy, sell): (Vec<f64>, Vec<f64>) = (0..nodes)
        .map(|j| trade_costs(grid, market, expect.n, j))
        .unzip();
    let e = &expect.w;
    let mut carry = vec![f64::INFINITY; nodes];
    for i in (0..mbar.saturating_sub(1)).rev() {
        let above = &e[(i + 1) * nodes..(i + 2) * nodes];
        let dst = &mut out.w[i * nodes..(i + 1) * nodes];
        for j in 0..nodes {
            carry[j] = buy[j] + above[j].min(carry[j]);
            dst[j] = dst[j].min(carry[j]);
        }
    }
    carry.fill(f64::INFINITY);
    for i in 1..mbar {
        let below = &e[(i - 1) * nodes..i * nodes];
        let dst = &mut out.w[i * nodes..(i + 1) * nodes];
        for j in 0..nodes {
            carry[j] = -sell[j] + below[j].min(carry[j]);
            dst[j] = dst[j].min(carry[j]);
        }
    }
    out
}

/// Reference control step scanning every feasible trade size explicitly.
pub fn control_step_exhaustive(
    expect: &ValueSurface,
    grid: &GridSpec,
    market: &MarketSpec,
) -> ValueSurface {
    let nodes = expect.nodes;
    let mbar = expect.shares;
    let mut out = expect.clone();
    for j in 0..nodes {
        let (buy, sell) = trade_costs(grid, market, expect.n, j);
        for i in 0..mbar {
            let mut best = expect.get(j, i);
            for target in 0..mbar {
                let v = if target > i {
                    (target - i) as f64 * buy + expect.get(j, target)
                } else if target < i {
                    -((i - target) as f64) * sell + expect.get(j, target)
                } else {
                    continue;
                };
                if v < best {
                    best = v;
                }
            }
            out.w[i * nodes + j] = best;
        }
    }
    out
}

/// How the control step is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlSearch {
    /// Running-minimum recursion, `O(Mbar)` per node.
    #[default]
    Recursive,
    /// Explicit scan over all trade sizes, `O(Mbar^2)` per node.
    Exhaustive,
}

/// One backward step: time step then control step.
pub fn backward_step(
    next: &ValueSurface,
    kernel: &TransitionKernel,
    grid: &GridSpec,
    market: &MarketSpec,
) -> ValueSurface {
    let (expect, _) = time_step(next, kernel);
    control_step(&expect, grid, market)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub n: usize,
    pub nodes: usize,
    /// Nodes whose expectation used the exact log-sum-exp fallback.
    pub fallbacks: usize,
    /// States where trading strictly beats the no-trade value.
    pub traded: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub control: ControlSearch,
    /// Keep every slice (memory grows as `N^2 Lbar Mbar`).
    pub keep_surfaces: bool,
    /// Constant added to the terminal slice.
    pub terminal_shift: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub position: OptionPosition,
    pub root: ValueSurface,
    pub steps: Vec<StepDiagnostics>,
    pub runtime: Duration,
    /// All slices from `n = 0` to `n = N` when requested.
    pub surfaces: Vec<ValueSurface>,
}

/// Solves the problem for one position from maturity back to the root.
pub fn solve(
    position: OptionPosition,
    model: &ModelSpec,
    market: &MarketSpec,
    grid: &GridSpec,
) -> Result<Solution> {
    let kernel = transition_kernel(model, grid)?;
    Ok(solve_with_kernel(position, &kernel, grid, market, &SolveOptions::default()))
}

pub fn solve_with_kernel(
    position: OptionPosition,
    kernel: &TransitionKernel,
    grid: &GridSpec,
    market: &MarketSpec,
    options: &SolveOptions,
) -> Solution {
    let start = Instant::now();
    let mut current = terminal_surface(position, grid, market);
    if options.terminal_shift != 0.0 {
        current = current.shifted(options.terminal_shift);
    }
    let mut surfaces = Vec::new();
    let mut steps = Vec::with_capacity(grid.steps);
    for _ in 0..grid.steps {
        let (expect, fallbacks) = time_step(&current, kernel);
        let next = match options.control {
            ControlSearch::Recursive => control_step(&expect, grid, market),
            ControlSearch::Exhaustive => control_step_exhaustive(&expect, grid, market),
        };
        let traded = next.w.iter().zip(&expect.w).filter(|(w, e)| w < e).count();
        steps.push(StepDiagnostics {
            n: next.n,
            nodes: next.nodes,
            fallbacks,
            traded,
        });
        let prev = std::mem::replace(&mut current, next);
        if options.keep_surfaces {
            surfaces.push(prev);
        }
    }
    if options.keep_surfaces {
        surfaces.push(current.clone());
        surfaces.reverse();
    }
    Solution {
        position,
        root: current,
        steps,
        runtime: start.elapsed(),
        surfaces,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceDiagnostics {
    pub steps: usize,
    pub lbar: usize,
    pub mbar: usize,
    pub runtime: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceResult {
    pub kind: PriceKind,
    pub price: f64,
    /// `W` of the no-option problem at the root and initial holding.
    pub w_none: f64,
    /// `W` of the problem with the option at the root and initial holding.
    pub w_option: f64,
    pub diagnostics: PriceDiagnostics,
}

impl PriceResult {
    /// Flat `key=value` record.
    pub fn to_record(&self) -> String {
        format!(
            "kind={} price={} w_none={} w_option={} N={} Lbar={} Mbar={} runtime_s={:.3}",
            self.kind.name(),
            fmt_sig(self.price),
            fmt_sig(self.w_none),
            fmt_sig(self.w_option),
            self.diagnostics.steps,
            self.diagnostics.lbar,
            self.diagnostics.mbar,
            self.diagnostics.runtime.as_secs_f64()
        )
    }
}

/// Indifference price from the root slices of the no-option problem and the
/// problem with the option.
pub fn indifference_price(
    kind: PriceKind,
    none: &ValueSurface,
    with_option: &ValueSurface,
    market: &MarketSpec,
    grid: &GridSpec,
) -> Result<PriceResult> {
    if none.key() != grid.key() || with_option.key() != grid.key() {
        return Err(Error::GridMismatch);
    }
    if none.n != 0 || with_option.n != 0 {
        return Err(Error::invalid("surface", "indifference prices need root slices"));
    }
    let w_none = none.get(0, grid.y0_index);
    let w_option = with_option.get(0, grid.y0_index);
    let scale = market.discount(0.0) / market.gamma;
    let price = match kind {
        PriceKind::Writer => scale * (w_option - w_none),
        PriceKind::Buyer => scale * (w_none - w_option),
    };
    Ok(PriceResult {
        kind,
        price,
        w_none,
        w_option,
        diagnostics: PriceDiagnostics {
            steps: grid.steps,
            lbar: grid.lbar(),
            mbar: grid.mbar(),
            runtime: Duration::ZERO,
        },
    })
}

/// Writer and buyer prices sharing one no-option solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePair {
    pub writer: Option<PriceResult>,
    pub buyer: Option<PriceResult>,
}

pub fn price_positions(
    kinds: &[PriceKind],
    model: &ModelSpec,
    market: &MarketSpec,
    grid: &GridSpec,
) -> Result<PricePair> {
    let kernel = transition_kernel(model, grid)?;
    let options = SolveOptions::default();
    let none = solve_with_kernel(OptionPosition::None, &kernel, grid, market, &options);
    let mut pair = PricePair {
        writer: None,
        buyer: None,
    };
    for &kind in kinds {
        let sol = solve_with_kernel(kind.position(), &kernel, grid, market, &options);
        let mut result = indifference_price(kind, &none.root, &sol.root, market, grid)?;
        result.diagnostics.runtime = none.runtime + sol.runtime;
        match kind {
            PriceKind::Writer => pair.writer = Some(result),
            PriceKind::Buyer => pair.buyer = Some(result),
        }
    }
    Ok(pair)
}

/// Writer price alone.
pub fn writer_price(model: &ModelSpec, market: &MarketSpec, grid: &GridSpec) -> Result<f64> {
    let pair = price_positions(&[PriceKind::Writer], model, market, grid)?;
    Ok(pair.writer.expect("writer requested").price)
}

/// Slices as CSV (`n, node, x, y, W`).
pub fn surface_csv(surfaces: &[ValueSurface], grid: &GridSpec) -> String {
    let mut out = String::from("n,node,x,y,W\n");
    for s in surfaces {
        for j in 0..s.nodes {
            for i in 0..s.shares {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.n,
                    j,
                    fmt_sig(grid.log_price(s.n, j)),
                    fmt_sig(grid.shares(i)),
                    fmt_sig(s.get(j, i))
                );
            }
        }
    }
    out
}
