//! Recombining multinomial lattice for the log-price and its locally
//! consistent one-step transition law.
//!
//! The law is obtained from an explicit finite-difference discretization
//! of the generator: a trinomial diffusion part on offsets `{-1, 0, 1}`
//! mixed with jump weights `nu_k` integrated over lattice cells,
//!
//! ```text
//! p(k) = (1 - lambda_hat dt) p_diff(k) + dt nu_k,   lambda_hat = sum_k nu_k
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::levy::{moment_check, process_std, small_jump_params, LevyFamily, ModelSpec, SmallJumpParams};
use crate::market::MarketSpec;
use crate::quadrature::composite_simpson;

/// Samples per lattice cell when integrating the jump density.
const CELL_POINTS: usize = 33;

/// Largest `|ln S|` the lattice may reach; keeps `e^x` and the utility
/// exponents finite in double precision.
const MAX_LOG_EXTENT: f64 = 600.0;

/// Branch-count rule for Merton lattices: the jump window spans `6 xi`.
const MERTON_WINDOW_XI: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Width {
    #[default]
    Auto,
    Fixed(usize),
}

/// How the lattice is sized from the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSizing {
    /// Number of log-price branches per node.
    pub lbar: Width,
    /// Number of share levels; `Auto` uses one per time step.
    pub mbar: Width,
    /// Fraction of the share steps placed below zero. The long side is
    /// widened if needed so that one full share (the writer's delivery)
    /// stays on the grid.
    pub short_fraction: f64,
    /// Explicit number of share levels below zero, overriding
    /// `short_fraction`.
    pub short_levels: Option<usize>,
    /// Share step; defaults to the log-price step.
    pub share_step: Option<f64>,
    /// Explicit `(down, up)` branch counts, overriding `lbar`.
    pub branches: Option<(usize, usize)>,
    /// Small-jump truncation for VG; defaults to `1.5 h_x`.
    pub epsilon: Option<f64>,
}

impl Default for GridSizing {
    fn default() -> Self {
        GridSizing {
            lbar: Width::Auto,
            mbar: Width::Auto,
            short_fraction: 1.0 / 3.0,
            short_levels: None,
            share_step: None,
            branches: None,
            epsilon: None,
        }
    }
}

impl GridSizing {
    pub fn with_lbar(lbar: usize) -> Self {
        GridSizing {
            lbar: Width::Fixed(lbar),
            ..Default::default()
        }
    }
}

/// Full discretization of time, log-price and share holdings.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub steps: usize,
    pub horizon: f64,
    pub dt: f64,
    pub h_x: f64,
    /// Branches below the current node (K1).
    pub k_down: usize,
    /// Branches above the current node (K2).
    pub k_up: usize,
    pub h_y: f64,
    /// Share levels below zero (K3).
    pub k_short: usize,
    /// Share levels above zero (K4).
    pub k_long: usize,
    /// Jump truncation, present for infinite-activity models.
    pub epsilon: Option<f64>,
    pub small_jumps: Option<SmallJumpParams>,
    /// Integration domain of the jump term is `[-b_lower, b_upper]`.
    pub b_lower: f64,
    pub b_upper: f64,
    pub log_spot: f64,
    /// Share index of the initial holding.
    pub y0_index: usize,
}

/// Identifies a lattice; surfaces built on grids with different keys
/// cannot be compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeKey {
    steps: usize,
    dt: f64,
    h_x: f64,
    k_down: usize,
    k_up: usize,
    h_y: f64,
    k_short: usize,
    k_long: usize,
    log_spot: f64,
}

impl GridSpec {
    pub fn lbar(&self) -> usize {
        self.k_down + self.k_up + 1
    }

    pub fn mbar(&self) -> usize {
        self.k_short + self.k_long + 1
    }

    /// Nodes of the recombining tree at step `n`.
    pub fn nodes_at(&self, n: usize) -> usize {
        n * (self.lbar() - 1) + 1
    }

    pub fn log_price(&self, n: usize, node: usize) -> f64 {
        self.log_spot + (node as f64 - (n * self.k_down) as f64) * self.h_x
    }

    pub fn shares(&self, index: usize) -> f64 {
        (index as f64 - self.k_short as f64) * self.h_y
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn key(&self) -> LatticeKey {
        LatticeKey {
            steps: self.steps,
            dt: self.dt,
            h_x: self.h_x,
            k_down: self.k_down,
            k_up: self.k_up,
            h_y: self.h_y,
            k_short: self.k_short,
            k_long: self.k_long,
            log_spot: self.log_spot,
        }
    }

    /// Variance rate of the trinomial (Brownian) part.
    pub fn diffusion_variance(&self, model: &ModelSpec) -> f64 {
        let eps_var = self.small_jumps.map_or(0.0, |p| p.sigma_eps * p.sigma_eps);
        model.sigma * model.sigma + eps_var
    }

    /// Log-drift carried by the trinomial part: the price drift minus the
    /// Ito correction and the jump compensator.
    pub fn diffusion_drift(&self, model: &ModelSpec) -> f64 {
        let var = self.diffusion_variance(model);
        let compensator = match model.family {
            LevyFamily::Diffusion => 0.0,
            LevyFamily::Merton => model.exp_compensator().unwrap_or(0.0),
            LevyFamily::VarianceGamma => self.small_jumps.map_or(0.0, |p| p.omega_eps),
        };
        model.mu - 0.5 * var - compensator
    }
}

/// Builds the lattice for `steps` time steps and checks that its transition
/// law is a valid, stable probability law.
pub fn build_grid(
    model: &ModelSpec,
    market: &MarketSpec,
    steps: usize,
    sizing: &GridSizing,
) -> Result<GridSpec> {
    let grid = layout_grid(model, market, steps, sizing)?;
    check_feasible(model, &grid)?;
    Ok(grid)
}

/// Sizes the lattice without the stability checks; use
/// [`stability_margins`] to inspect them.
pub fn layout_grid(
    model: &ModelSpec,
    market: &MarketSpec,
    steps: usize,
    sizing: &GridSizing,
) -> Result<GridSpec> {
    model.validate()?;
    market.validate()?;
    if steps < 2 {
        return Err(Error::invalid("steps", "need at least 2 time steps"));
    }
    let moments = moment_check(model);
    if !moments.finite_second_moment {
        return Err(Error::infeasible("finite_second_moment", moments.details));
    }
    if !(sizing.short_fraction >= 0.0 && sizing.short_fraction <= 1.0) {
        return Err(Error::invalid("short_fraction", "must lie in [0, 1]"));
    }

    let horizon = market.maturity;
    let dt = horizon / steps as f64;
    let sigma_x = process_std(model);
    let h_x = sigma_x * dt.sqrt();

    let (epsilon, small_jumps) = match model.family {
        LevyFamily::VarianceGamma => {
            let eps = sizing.epsilon.unwrap_or(1.5 * h_x);
            (Some(eps), Some(small_jump_params(model, eps)?))
        }
        _ => (None, None),
    };

    let (k_down, k_up) = match sizing.branches {
        Some(b) => b,
        None => {
            let lbar = match sizing.lbar {
                Width::Fixed(l) => {
                    if l < 3 || l % 2 == 0 {
                        return Err(Error::invalid("lbar", format!("{l} must be odd and >= 3")));
                    }
                    l
                }
                Width::Auto => auto_lbar(model, steps, h_x, small_jumps.as_ref()),
            };
            ((lbar - 1) / 2, (lbar - 1) / 2)
        }
    };
    if k_down == 0 || k_up == 0 {
        return Err(Error::invalid("branches", "need at least one branch each way"));
    }
    if let Some(eps) = epsilon {
        let reach = (k_down.min(k_up) as f64 + 0.5) * h_x;
        if reach <= eps * (1.0 + 1e-12) {
            return Err(Error::infeasible(
                "jump_window",
                format!("lattice reach {reach:.4} does not extend past epsilon = {eps:.4}"),
            ));
        }
    }

    let mbar = match sizing.mbar {
        Width::Fixed(m) if m >= 1 => m,
        Width::Fixed(_) => return Err(Error::invalid("mbar", "must be >= 1")),
        Width::Auto => steps,
    };
    let h_y = sizing.share_step.unwrap_or(h_x);
    if !(h_y > 0.0) {
        return Err(Error::invalid("share_step", "must be > 0"));
    }
    let k_short = match sizing.short_levels {
        Some(k) if k < mbar => k,
        Some(k) => {
            return Err(Error::invalid("short_levels", format!("{k} >= Mbar = {mbar}")));
        }
        None => {
            let by_fraction = ((mbar - 1) as f64 * sizing.short_fraction).round() as usize;
            let cover = ((1.0 / h_y) * (1.0 - 1e-12)).ceil() as usize;
            by_fraction.min((mbar - 1).saturating_sub(cover))
        }
    };
    let k_long = mbar - 1 - k_short;
    let y0_offset = market.initial_shares / h_y;
    let y0_rounded = y0_offset.round();
    if (y0_offset - y0_rounded).abs() > 1e-9 {
        return Err(Error::invalid(
            "initial_shares",
            format!("{} is not on the share grid (step {h_y})", market.initial_shares),
        ));
    }
    let y0_index = k_short as i64 + y0_rounded as i64;
    if y0_index < 0 || y0_index as usize >= mbar {
        return Err(Error::invalid("initial_shares", "outside the share grid"));
    }

    let grid = GridSpec {
        steps,
        horizon,
        dt,
        h_x,
        k_down,
        k_up,
        h_y,
        k_short,
        k_long,
        epsilon,
        small_jumps,
        b_lower: (k_down as f64 + 0.5) * h_x,
        b_upper: (k_up as f64 + 0.5) * h_x,
        log_spot: market.spot.ln(),
        y0_index: y0_index as usize,
    };
    Ok(grid)
}

fn auto_lbar(model: &ModelSpec, steps: usize, h_x: f64, small: Option<&SmallJumpParams>) -> usize {
    let smallest_odd = |min: f64| {
        let mut l = min.ceil().max(3.0) as usize;
        if l.is_multiple_of(2) {
            l += 1;
        }
        l
    };
    match model.family {
        LevyFamily::Diffusion => 3,
        LevyFamily::Merton => smallest_odd(MERTON_WINDOW_XI * model.merton_xi / h_x - 1e-9),
        LevyFamily::VarianceGamma => {
            let sigma_j = small.map_or(0.0, |p| p.sigma_j);
            let min = sigma_j / process_std(model) * (steps as f64).sqrt();
            smallest_odd(min - 1e-9).max(5)
        }
    }
}

/// Stability margins of a lattice; every entry must be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMargins {
    /// `1 - lambda_hat dt`.
    pub jump_activity: f64,
    /// `1 - sigma_d^2 dt / h_x^2`, the weight of the middle branch.
    pub diffusion_cfl: f64,
    /// `sigma_d^2 - h_x |drift|`.
    pub positivity: f64,
    /// `MAX_LOG_EXTENT - (|ln S0| + N max(K1, K2) h_x)`.
    pub tree_extent: f64,
}

impl StabilityMargins {
    pub fn all_ok(&self) -> bool {
        self.jump_activity >= 0.0
            && self.diffusion_cfl >= 0.0
            && self.positivity >= 0.0
            && self.tree_extent >= 0.0
    }
}

/// Relative slack admitted on the equality cases (e.g. `h_x = sigma sqrt(dt)`).
const MARGIN_SLACK: f64 = 1e-12;

pub fn stability_margins(model: &ModelSpec, grid: &GridSpec) -> StabilityMargins {
    let weights = jump_weights(model, grid);
    let var = grid.diffusion_variance(model);
    let drift = grid.diffusion_drift(model);
    let snap = |v: f64, scale: f64| if v.abs() <= MARGIN_SLACK * scale { 0.0 } else { v };
    StabilityMargins {
        jump_activity: 1.0 - weights.lambda_hat * grid.dt,
        diffusion_cfl: snap(1.0 - var * grid.dt / (grid.h_x * grid.h_x), 1.0),
        positivity: snap(var - grid.h_x * drift.abs(), var.max(1e-300)),
        tree_extent: MAX_LOG_EXTENT
            - (grid.log_spot.abs() + (grid.steps * grid.k_down.max(grid.k_up)) as f64 * grid.h_x),
    }
}

fn check_feasible(model: &ModelSpec, grid: &GridSpec) -> Result<()> {
    let m = stability_margins(model, grid);
    if m.jump_activity < 0.0 {
        return Err(Error::infeasible(
            "jump_activity",
            format!("lambda_hat dt = {:.6} > 1", 1.0 - m.jump_activity),
        ));
    }
    if m.diffusion_cfl < 0.0 {
        return Err(Error::infeasible(
            "diffusion_cfl",
            format!("sigma_d^2 dt / h_x^2 = {:.6} > 1", 1.0 - m.diffusion_cfl),
        ));
    }
    if m.positivity < 0.0 {
        return Err(Error::infeasible(
            "positivity",
            format!("sigma_d^2 - h_x |drift| = {:.3e} < 0", m.positivity),
        ));
    }
    if m.tree_extent < 0.0 {
        return Err(Error::infeasible(
            "tree_extent",
            format!("lattice reaches |ln S| = {:.1} > {MAX_LOG_EXTENT}", MAX_LOG_EXTENT - m.tree_extent),
        ));
    }
    Ok(())
}

/// Jump mass of each lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpWeights {
    pub k_down: usize,
    pub k_up: usize,
    /// `nu[k + k_down]` is the mass of cell `[(k - 1/2) h, (k + 1/2) h]`.
    pub nu: Vec<f64>,
    pub lambda_hat: f64,
}

impl JumpWeights {
    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.nu.len()).map(move |i| i as i64 - self.k_down as i64)
    }
}

/// Cell masses on offsets `-k_down..=k_up` for step `h`. With `epsilon`
/// the part of each cell inside `(-epsilon, epsilon)` is left out.
pub(crate) fn cell_weights(
    model: &ModelSpec,
    h: f64,
    k_down: usize,
    k_up: usize,
    epsilon: Option<f64>,
) -> JumpWeights {
    let len = k_down + k_up + 1;
    let mut nu = vec![0.0; len];
    if model.has_jumps() {
        let density = |z: f64| model.density_unchecked(z);
        let mass = |lo: f64, hi: f64| composite_simpson(&density, lo, hi, CELL_POINTS);
        for (idx, slot) in nu.iter_mut().enumerate() {
            let k = idx as i64 - k_down as i64;
            let lo = (k as f64 - 0.5) * h;
            let hi = (k as f64 + 0.5) * h;
            *slot = match epsilon {
                None => mass(lo, hi),
                Some(eps) if lo >= eps || hi <= -eps => mass(lo, hi),
                Some(eps) => {
                    let left = if lo < -eps { mass(lo, hi.min(-eps)) } else { 0.0 };
                    let right = if hi > eps { mass(lo.max(eps), hi) } else { 0.0 };
                    left + right
                }
            };
        }
    }
    let lambda_hat = nu.iter().sum();
    JumpWeights {
        k_down,
        k_up,
        nu,
        lambda_hat,
    }
}

/// Jump weights of the lattice; empty (all zero) for the diffusion family.
pub fn jump_weights(model: &ModelSpec, grid: &GridSpec) -> JumpWeights {
    cell_weights(
        model,
        grid.h_x,
        grid.k_down,
        grid.k_up,
        grid.epsilon,
    )
}

/// Share of the (truncated) jump activity captured by the lattice window,
/// `lambda_hat / lambda` for Merton and `lambda_hat / lambda_eps` for VG.
/// `None` without jumps.
pub fn measure_coverage(model: &ModelSpec, grid: &GridSpec) -> Option<f64> {
    let total = match model.family {
        LevyFamily::Diffusion => return None,
        LevyFamily::Merton => model.merton_lambda,
        LevyFamily::VarianceGamma => grid.small_jumps?.lambda_eps,
    };
    Some(jump_weights(model, grid).lambda_hat / total)
}

/// Trinomial probabilities of the diffusion part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionProbs {
    pub down: f64,
    pub stay: f64,
    pub up: f64,
}

pub fn diffusion_probs(model: &ModelSpec, grid: &GridSpec) -> Result<DiffusionProbs> {
    let var = grid.diffusion_variance(model);
    let drift = grid.diffusion_drift(model);
    let h = grid.h_x;
    let dt = grid.dt;
    let spread = 0.5 * var * dt / (h * h);
    let tilt = 0.5 * drift * dt / h;
    let mut stay = 1.0 - var * dt / (h * h);
    if stay < 0.0 && stay > -MARGIN_SLACK {
        stay = 0.0;
    }
    let mut down = spread - tilt;
    if down < 0.0 && down > -MARGIN_SLACK * spread.max(1e-300) {
        down = 0.0;
    }
    let up = spread + tilt;
    if stay < 0.0 {
        return Err(Error::infeasible(
            "diffusion_cfl",
            format!("middle branch probability {stay:.3e} < 0"),
        ));
    }
    if down < 0.0 || up < 0.0 {
        return Err(Error::infeasible(
            "positivity",
            format!("outer branch probabilities ({down:.3e}, {up:.3e})"),
        ));
    }
    Ok(DiffusionProbs { down, stay, up })
}

/// One-step law of the log-price on offsets `-k_down..=k_up`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    pub k_down: usize,
    pub k_up: usize,
    pub p_diff: DiffusionProbs,
    pub nu: Vec<f64>,
    pub lambda_hat: f64,
    /// `p_total[k + k_down]`, summing to one.
    pub p_total: Vec<f64>,
    /// `sum p - 1` before the final renormalization.
    pub renormalization: f64,
}

impl TransitionKernel {
    pub fn len(&self) -> usize {
        self.p_total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_total.is_empty()
    }

    pub fn offset(&self, idx: usize) -> i64 {
        idx as i64 - self.k_down as i64
    }

    /// `|sum p - 1|` after renormalization.
    pub fn normalization_residual(&self) -> f64 {
        (self.p_total.iter().sum::<f64>() - 1.0).abs()
    }

    /// Raw moments `(E[dX], E[dX^2])` of one step for log-step `h`.
    pub fn moments(&self, h: f64) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (idx, p) in self.p_total.iter().enumerate() {
            let z = self.offset(idx) as f64 * h;
            m1 += p * z;
            m2 += p * z * z;
        }
        (m1, m2)
    }
}

pub fn transition_kernel(model: &ModelSpec, grid: &GridSpec) -> Result<TransitionKernel> {
    let p_diff = diffusion_probs(model, grid)?;
    let weights = jump_weights(model, grid);
    let no_jump = 1.0 - weights.lambda_hat * grid.dt;
    if no_jump < 0.0 {
        return Err(Error::infeasible(
            "jump_activity",
            format!("lambda_hat dt = {:.6} > 1", weights.lambda_hat * grid.dt),
        ));
    }
    let mut p_total: Vec<f64> = weights.nu.iter().map(|nu| grid.dt * nu).collect();
    let c = grid.k_down;
    p_total[c - 1] += no_jump * p_diff.down;
    p_total[c] += no_jump * p_diff.stay;
    p_total[c + 1] += no_jump * p_diff.up;
    let sum: f64 = p_total.iter().sum();
    for p in p_total.iter_mut() {
        *p /= sum;
    }
    Ok(TransitionKernel {
        k_down: grid.k_down,
        k_up: grid.k_up,
        p_diff,
        nu: weights.nu,
        lambda_hat: weights.lambda_hat,
        p_total,
        renormalization: sum - 1.0,
    })
}

/// Local-consistency errors of the one-step law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    pub dt: f64,
    pub mean: f64,
    pub second_moment: f64,
    /// Exact one-step moments of the jump-diffusion whose jump measure is
    /// restricted to the lattice's integration domain.
    pub mean_target: f64,
    pub second_target: f64,
    pub mean_error: f64,
    pub var_error: f64,
    /// `max(mean_error, var_error) / dt^2`.
    pub constant: f64,
    /// Errors against the first-order targets of the untruncated measure,
    /// `(mu - sigma^2/2 - m + lambda alpha) dt` and `(sigma^2 + int z^2 nu) dt`.
    pub mean_error_full: f64,
    pub var_error_full: f64,
}

pub fn consistency_report(
    kernel: &TransitionKernel,
    model: &ModelSpec,
    grid: &GridSpec,
) -> ConsistencyReport {
    let dt = grid.dt;
    let (mean, second) = kernel.moments(grid.h_x);
    let drift = grid.diffusion_drift(model);
    let var = grid.diffusion_variance(model);

    let (jump_mean, jump_var) = match (model.family, grid.epsilon) {
        (LevyFamily::Diffusion, _) => (0.0, 0.0),
        (_, Some(eps)) => {
            let m = model.measure_integral(|z| z, -grid.b_lower, -eps)
                + model.measure_integral(|z| z, eps, grid.b_upper);
            let v = model.measure_integral(|z| z * z, -grid.b_lower, -eps)
                + model.measure_integral(|z| z * z, eps, grid.b_upper);
            (m, v)
        }
        (_, None) => (
            model.measure_integral(|z| z, -grid.b_lower, grid.b_upper),
            model.measure_integral(|z| z * z, -grid.b_lower, grid.b_upper),
        ),
    };
    let mean_target = (drift + jump_mean) * dt;
    let second_target = (var + jump_var) * dt + mean_target * mean_target;
    let mean_error = (mean - mean_target).abs();
    let var_error = (second - second_target).abs();

    let (full_mean, full_var) = match model.family {
        LevyFamily::Diffusion => (0.0, 0.0),
        LevyFamily::Merton => (
            model.merton_lambda * model.merton_alpha,
            model.jump_second_moment(),
        ),
        LevyFamily::VarianceGamma => {
            let p = grid.small_jumps.expect("VG grid carries small-jump parameters");
            (p.lambda_eps * p.theta_eps, p.sigma_j * p.sigma_j)
        }
    };
    ConsistencyReport {
        dt,
        mean,
        second_moment: second,
        mean_target,
        second_target,
        mean_error,
        var_error,
        constant: mean_error.max(var_error) / (dt * dt),
        mean_error_full: (mean - (drift + full_mean) * dt).abs(),
        var_error_full: (second - (var + full_var) * dt).abs(),
    }
}

/// Kernel and jump weights as CSV (`k, offset, nu_k, p_total`).
pub fn kernel_csv(kernel: &TransitionKernel, grid: &GridSpec) -> String {
    let mut out = String::from("k,offset,nu_k,p_total\n");
    for (idx, (nu, p)) in kernel.nu.iter().zip(&kernel.p_total).enumerate() {
        let k = kernel.offset(idx);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            k,
            crate::report::fmt_sig(k as f64 * grid.h_x),
            crate::report::fmt_sig(*nu),
            crate::report::fmt_sig(*p)
        );
    }
    out
}
