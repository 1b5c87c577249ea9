//! The four commands of the `levy-indiff` tool as library functions. Each
//! returns a CSV table plus a human-readable summary; the binary only
//! handles arguments, files and exit codes.

use std::fmt::Write as _;

use crate::benchmarks::{bs_price, merton_series_price, pide_price, PideGrid};
use crate::chain::{
    build_grid, consistency_report, layout_grid, measure_coverage, stability_margins,
    transition_kernel, GridSizing, GridSpec, Width,
};
use crate::config::{RunConfig, SweepAxis, TableKind};
use crate::dp::{price_positions, PriceKind, PricePair};
use crate::error::{Error, Result};
use crate::levy::{LevyFamily, ModelSpec};
use crate::market::MarketSpec;
use crate::mc::{mc_call_price, SimConfig};
use crate::report::{fmt_sig, Table};

/// Terms of the Merton series; the tail is below 1e-15 for moderate `lambda T`.
const SERIES_TERMS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub table: Table,
    pub summary: String,
    /// False when a diagnostic check failed.
    pub passed: bool,
}

/// Comment block written above every CSV: tool version, command and the
/// configuration that produced the numbers.
pub fn metadata_comment(cfg: &RunConfig, command: &str) -> String {
    format!(
        "levy-indifference {} command={}\n{}",
        env!("CARGO_PKG_VERSION"),
        command,
        cfg.to_toml_string().trim_end()
    )
}

#[derive(Clone, Copy)]
struct Setup {
    model: ModelSpec,
    market: MarketSpec,
    sizing: GridSizing,
    steps: usize,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        Ok(Setup {
            model: cfg.model_spec()?,
            market: cfg.market_spec()?,
            sizing: cfg.sizing()?,
            steps: cfg.grid.steps,
        })
    }

    fn grid(&self) -> Result<GridSpec> {
        build_grid(&self.model, &self.market, self.steps, &self.sizing)
    }

    fn prices(&self, kinds: &[PriceKind]) -> Result<(PricePair, GridSpec)> {
        let grid = self.grid()?;
        Ok((price_positions(kinds, &self.model, &self.market, &grid)?, grid))
    }

    fn writer(&self) -> Result<f64> {
        let (pair, _) = self.prices(&[PriceKind::Writer])?;
        Ok(pair.writer.expect("writer requested").price)
    }
}

/// Risk-neutral closed form: Black-Scholes or the Merton series. VG has none.
pub fn closed_form_price(model: &ModelSpec, market: &MarketSpec) -> Option<f64> {
    let (s, k, t, r) = (market.spot, market.strike, market.maturity, market.rate);
    match model.family {
        LevyFamily::Diffusion => Some(bs_price(s, k, t, r, model.sigma)),
        LevyFamily::Merton => Some(merton_series_price(s, k, t, r, model, SERIES_TERMS).price),
        LevyFamily::VarianceGamma => None,
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// Rows `method, price, std_error` for the requested references.
fn reference_rows(cfg: &RunConfig, setup: &Setup, table: &mut Table, summary: &mut String) -> Result<()> {
    let refs = cfg.references.clone().unwrap_or_default();
    if refs.closed_form {
        if let Some(p) = closed_form_price(&setup.model, &setup.market) {
            table.push(vec!["closed_form".into(), fmt_sig(p), String::new()]);
            let _ = writeln!(summary, "closed form     {}", fmt_sig(p));
        }
    }
    if refs.pide {
        let g = PideGrid::new(&setup.model, &setup.market, refs.pide_space, refs.pide_time)?;
        let p = pide_price(&setup.model, &setup.market, &g)?;
        table.push(vec!["pide".into(), fmt_sig(p), String::new()]);
        let _ = writeln!(summary, "PIDE            {} (dx={})", fmt_sig(p), fmt_sig(g.dx));
    }
    if refs.mc_paths > 0 {
        let est = mc_call_price(&setup.model, &setup.market, &SimConfig::new(refs.mc_paths, refs.seed))?;
        table.push(vec!["monte_carlo".into(), fmt_sig(est.mean), fmt_sig(est.std_error)]);
        let _ = writeln!(
            summary,
            "Monte Carlo     {} +- {} ({} paths)",
            fmt_sig(est.mean),
            fmt_sig(est.std_error),
            est.n_paths
        );
    }
    Ok(())
}

/// Indifference prices for the configured position(s) plus references.
pub fn cmd_price(cfg: &RunConfig) -> Result<CommandOutput> {
    let setup = Setup::new(cfg)?;
    let (pair, grid) = setup.prices(&cfg.price_kinds())?;
    let mut table = Table::new(["method", "price", "std_error"]);
    table.comment = Some(metadata_comment(cfg, "price"));
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "lattice         N={} Lbar={} Mbar={} h_x={} h_y={}",
        grid.steps,
        grid.lbar(),
        grid.mbar(),
        fmt_sig(grid.h_x),
        fmt_sig(grid.h_y)
    );
    for result in [pair.writer, pair.buyer].into_iter().flatten() {
        table.push(vec![
            format!("dp_{}", result.kind.name()),
            fmt_sig(result.price),
            String::new(),
        ]);
        let _ = writeln!(
            summary,
            "{:<16}{} ({:.2} s)",
            result.kind.name(),
            fmt_sig(result.price),
            result.diagnostics.runtime.as_secs_f64()
        );
    }
    reference_rows(cfg, &setup, &mut table, &mut summary)?;
    Ok(CommandOutput {
        table,
        summary,
        passed: true,
    })
}

fn table_steps(cfg: &RunConfig, default: &[usize]) -> Vec<usize> {
    cfg.table
        .as_ref()
        .and_then(|t| t.steps.clone())
        .unwrap_or_else(|| default.to_vec())
}

/// One of the reference tables; the schedule comes from `[table]`.
pub fn cmd_table(cfg: &RunConfig) -> Result<CommandOutput> {
    let spec = cfg
        .table
        .as_ref()
        .ok_or_else(|| Error::Config {
            field: "table".into(),
            reason: "the table command needs a [table] section".into(),
        })?;
    let setup = Setup::new(cfg)?;
    let mut summary = String::new();
    let mut table = match spec.which {
        TableKind::Atm => {
            let mut t = Table::new(["method", "price", "std_error"]);
            let grid = setup.grid()?;
            let writer = setup.writer()?;
            t.push(vec![
                format!("dp_writer_N{}", grid.steps),
                fmt_sig(writer),
                String::new(),
            ]);
            reference_rows(cfg, &setup, &mut t, &mut summary)?;
            t
        }
        TableKind::ConvergenceDiffusion => {
            let gammas = spec.gammas.clone().unwrap_or_else(|| vec![1e-4, 1e-3, 1e-2]);
            let mut header = vec!["N".to_string()];
            header.extend(gammas.iter().map(|g| format!("gamma_{}", fmt_sig(*g))));
            let mut t = Table::new(header);
            for n in table_steps(cfg, &[50, 100, 200, 400]) {
                let mut row = vec![n.to_string()];
                for &g in &gammas {
                    let s = Setup {
                        steps: n,
                        market: MarketSpec {
                            gamma: g,
                            ..setup.market
                        },
                        ..setup
                    };
                    row.push(fmt_sig(s.writer()?));
                }
                t.push(row);
            }
            t
        }
        TableKind::TruncationMerton => {
            let lbars = spec.lbars.clone().unwrap_or_else(|| vec![51, 71, 91, 101, 111]);
            let mut header = vec!["N".to_string()];
            header.extend(lbars.iter().map(|l| format!("lbar_{l}")));
            let mut t = Table::new(header);
            for n in table_steps(cfg, &[50, 100]) {
                let mut row = vec![n.to_string()];
                for &l in &lbars {
                    let s = Setup {
                        steps: n,
                        sizing: GridSizing {
                            lbar: Width::Fixed(l),
                            ..setup.sizing
                        },
                        ..setup
                    };
                    row.push(fmt_sig(s.writer()?));
                }
                t.push(row);
            }
            t
        }
        TableKind::ConvergenceMerton => {
            let steps = table_steps(cfg, &[50, 75, 100]);
            let lbars = spec.lbars.clone().unwrap_or_else(|| vec![61, 75, 91]);
            if lbars.len() != steps.len() {
                return Err(Error::Config {
                    field: "table.lbars".into(),
                    reason: "one lbar per entry of table.steps".into(),
                });
            }
            let mut t = Table::new(["N", "lbar", "price"]);
            for (&n, &l) in steps.iter().zip(&lbars) {
                let s = Setup {
                    steps: n,
                    sizing: GridSizing {
                        lbar: Width::Fixed(l),
                        ..setup.sizing
                    },
                    ..setup
                };
                t.push(vec![n.to_string(), l.to_string(), fmt_sig(s.writer()?)]);
            }
            t
        }
        TableKind::ConvergenceVg => {
            let mut t = Table::new(["N", "lambda_eps", "price"]);
            for n in table_steps(cfg, &[50, 100, 150]) {
                let s = Setup { steps: n, ..setup };
                let grid = s.grid()?;
                let lambda_eps = grid.small_jumps.map(|p| p.lambda_eps);
                t.push(vec![n.to_string(), opt_cell(lambda_eps), fmt_sig(s.writer()?)]);
            }
            t
        }
        TableKind::Costs => {
            let costs = spec
                .costs
                .clone()
                .unwrap_or_else(|| vec![0.0, 0.01, 0.02, 0.03, 0.04]);
            let sweep = sweep_values(&setup, SweepAxis::Cost, &costs)?;
            sweep.to_table()
        }
    };
    let _ = write!(summary, "{}", table.to_text());
    table.comment = Some(metadata_comment(cfg, &format!("table which={}", spec.which.name())));
    Ok(CommandOutput {
        table,
        summary,
        passed: true,
    })
}

/// Direction of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
    Mixed,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        if diffs.iter().all(|&d| d == 0.0) {
            Trend::Flat
        } else if diffs.iter().all(|&d| d > 0.0) {
            Trend::Increasing
        } else if diffs.iter().all(|&d| d < 0.0) {
            Trend::Decreasing
        } else {
            Trend::Mixed
        }
    }

    /// True for nondecreasing sequences.
    pub fn nondecreasing(values: &[f64]) -> bool {
        values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn name(self) -> &'static str {
        match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Flat => "flat",
            Trend::Mixed => "mixed",
        }
    }
}

/// Writer and buyer prices along one parameter axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub writer: Vec<f64>,
    pub buyer: Vec<f64>,
}

impl Sweep {
    pub fn writer_trend(&self) -> Trend {
        Trend::of(&self.writer)
    }

    pub fn buyer_trend(&self) -> Trend {
        Trend::of(&self.buyer)
    }

    /// `(max - min) / min` of the writer prices.
    pub fn writer_spread(&self) -> f64 {
        relative_spread(&self.writer)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new([self.axis.name(), "writer", "buyer"]);
        for ((v, w), b) in self.values.iter().zip(&self.writer).zip(&self.buyer) {
            t.push(vec![fmt_sig(*v), fmt_sig(*w), fmt_sig(*b)]);
        }
        t
    }
}

pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / min
}

fn sweep_values(setup: &Setup, axis: SweepAxis, values: &[f64]) -> Result<Sweep> {
    let mut sweep = Sweep {
        axis,
        values: values.to_vec(),
        writer: Vec::new(),
        buyer: Vec::new(),
    };
    for &v in values {
        let mut model = setup.model;
        let mut market = setup.market;
        match axis {
            SweepAxis::Cost => market = market.with_costs(v),
            SweepAxis::Gamma => market.gamma = v,
            SweepAxis::Mu => model.mu = v,
            SweepAxis::Spot => market.spot = v,
        }
        market.validate()?;
        let s = Setup {
            model,
            market,
            ..*setup
        };
        let (pair, _) = s.prices(&[PriceKind::Writer, PriceKind::Buyer])?;
        sweep.writer.push(pair.writer.expect("writer requested").price);
        sweep.buyer.push(pair.buyer.expect("buyer requested").price);
    }
    Ok(sweep)
}

/// Runs the `[sweep]` section of `cfg`.
pub fn run_sweep(cfg: &RunConfig) -> Result<Sweep> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| Error::Config {
        field: "sweep".into(),
        reason: "the sweep command needs a [sweep] section".into(),
    })?;
    sweep_values(&Setup::new(cfg)?, spec.axis, &spec.values)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput> {
    let sweep = run_sweep(cfg)?;
    let mut table = sweep.to_table();
    let flags = format!(
        "writer={} buyer={} writer_spread={}",
        sweep.writer_trend().name(),
        sweep.buyer_trend().name(),
        fmt_sig(sweep.writer_spread())
    );
    table.comment = Some(format!(
        "{}\n{}",
        metadata_comment(cfg, &format!("sweep axis={}", sweep.axis.name())),
        flags
    ));
    let summary = format!("{}{}\n", table.to_text(), flags);
    Ok(CommandOutput {
        table,
        summary,
        passed: true,
    })
}

/// Kernel, consistency and stability diagnostics of the configured lattice.
/// Nothing is priced.
pub fn cmd_check(cfg: &RunConfig) -> Result<CommandOutput> {
    let setup = Setup::new(cfg)?;
    let limits = cfg.check.clone().unwrap_or_default();
    let grid = layout_grid(&setup.model, &setup.market, setup.steps, &setup.sizing)?;
    let mut table = Table::new(["check", "value", "limit", "pass"]);
    let mut passed = true;
    let mut row = |name: &str, value: f64, limit: String, ok: Option<bool>| {
        if ok == Some(false) {
            passed = false;
        }
        let verdict = match ok {
            Some(true) => "yes",
            Some(false) => "no",
            None => "",
        };
        table.push(vec![name.into(), fmt_sig(value), limit, verdict.into()]);
    };

    row("steps", grid.steps as f64, String::new(), None);
    row("lbar", grid.lbar() as f64, String::new(), None);
    row("mbar", grid.mbar() as f64, String::new(), None);
    row("h_x", grid.h_x, String::new(), None);
    if let Some(p) = grid.small_jumps {
        row("epsilon", p.epsilon, String::new(), None);
        row("lambda_eps", p.lambda_eps, String::new(), None);
    }
    let m = stability_margins(&setup.model, &grid);
    row("margin_jump_activity", m.jump_activity, ">= 0".into(), Some(m.jump_activity >= 0.0));
    row("margin_diffusion_cfl", m.diffusion_cfl, ">= 0".into(), Some(m.diffusion_cfl >= 0.0));
    row("margin_positivity", m.positivity, ">= 0".into(), Some(m.positivity >= 0.0));
    row("margin_tree_extent", m.tree_extent, ">= 0".into(), Some(m.tree_extent >= 0.0));
    if let Some(c) = measure_coverage(&setup.model, &grid) {
        row("measure_coverage", c, String::new(), None);
    }
    match transition_kernel(&setup.model, &grid) {
        Ok(kernel) => {
            row("p_diff_down", kernel.p_diff.down, String::new(), None);
            row("p_diff_stay", kernel.p_diff.stay, String::new(), None);
            row("p_diff_up", kernel.p_diff.up, String::new(), None);
            row("lambda_hat", kernel.lambda_hat, String::new(), None);
            let residual = kernel.normalization_residual();
            row(
                "normalization_residual",
                residual,
                format!("< {}", fmt_sig(limits.max_residual)),
                Some(residual.abs() < limits.max_residual),
            );
            let min_p = kernel.p_total.iter().cloned().fold(f64::INFINITY, f64::min);
            row("min_probability", min_p, ">= 0".into(), Some(min_p >= 0.0));
            let c = consistency_report(&kernel, &setup.model, &grid);
            row("mean_error", c.mean_error, String::new(), None);
            row("var_error", c.var_error, String::new(), None);
            row(
                "consistency_constant",
                c.constant,
                format!("<= {}", fmt_sig(limits.max_consistency_constant)),
                Some(c.constant <= limits.max_consistency_constant),
            );
            row("mean_error_full", c.mean_error_full, String::new(), None);
            row("var_error_full", c.var_error_full, String::new(), None);
        }
        Err(e) => {
            passed = false;
            table.push(vec!["transition_kernel".into(), String::new(), e.to_string(), "no".into()]);
        }
    }
    table.comment = Some(metadata_comment(cfg, "check"));
    let summary = format!(
        "{}all checks {}\n",
        table.to_text(),
        if passed { "passed" } else { "FAILED" }
    );
    Ok(CommandOutput {
        table,
        summary,
        passed,
    })
}
