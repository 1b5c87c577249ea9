//! TOML run configuration shared by the command-line tool and the examples.
//!
//! ```toml
//! [model]
//! family = "merton"
//! mu = 0.1
//! sigma = 0.25
//! alpha = 0.0
//! xi = 0.5
//! lambda = 0.8
//!
//! [market]
//! spot = 15.0
//! strike = 15.0
//! maturity = 1.0
//! rate = 0.1
//! gamma = 0.04
//!
//! [grid]
//! steps = 100
//! lbar = 81
//! mbar = "auto"
//! ```

use serde::{Deserialize, Serialize};

use crate::chain::{GridSizing, Width};
use crate::dp::PriceKind;
use crate::error::{Error, Result};
use crate::levy::{LevyFamily, ModelSpec};
use crate::market::MarketSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Diffusion,
    Merton,
    Vg,
}

impl From<FamilyName> for LevyFamily {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Diffusion => LevyFamily::Diffusion,
            FamilyName::Merton => LevyFamily::Merton,
            FamilyName::Vg => LevyFamily::VarianceGamma,
        }
    }
}

/// `[model]`. For `vg`, `sigma` is the volatility of the subordinated
/// Brownian motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: FamilyName,
    pub mu: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// `[market]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub spot: f64,
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
    #[serde(default)]
    pub theta_b: f64,
    #[serde(default)]
    pub theta_s: f64,
    pub gamma: f64,
    #[serde(default)]
    pub initial_shares: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

/// A lattice width: an explicit count or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WidthConfig {
    Fixed(usize),
    Auto(AutoKeyword),
}

impl Default for WidthConfig {
    fn default() -> Self {
        WidthConfig::Auto(AutoKeyword::Auto)
    }
}

impl From<WidthConfig> for Width {
    fn from(w: WidthConfig) -> Self {
        match w {
            WidthConfig::Fixed(n) => Width::Fixed(n),
            WidthConfig::Auto(_) => Width::Auto,
        }
    }
}

/// `[grid]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub steps: usize,
    #[serde(default)]
    pub lbar: WidthConfig,
    #[serde(default)]
    pub mbar: WidthConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub short_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub short_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share_step: Option<f64>,
    /// VG small-jump truncation; defaults to `1.5 h_x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    Writer,
    Buyer,
}

impl From<KindName> for PriceKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Writer => PriceKind::Writer,
            KindName::Buyer => PriceKind::Buyer,
        }
    }
}

/// `[price]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    pub kinds: Vec<KindName>,
}

impl Default for PriceConfig {
    fn default() -> Self {
        PriceConfig {
            kinds: vec![KindName::Writer, KindName::Buyer],
        }
    }
}

/// `[references]`: risk-neutral prices printed next to the lattice prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default = "yes")]
    pub closed_form: bool,
    #[serde(default)]
    pub pide: bool,
    #[serde(default = "default_pide_space")]
    pub pide_space: usize,
    #[serde(default = "default_pide_time")]
    pub pide_time: usize,
    /// Monte Carlo paths; 0 disables the simulation.
    #[serde(default)]
    pub mc_paths: usize,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

fn default_pide_space() -> usize {
    2000
}

fn default_pide_time() -> usize {
    1000
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            closed_form: true,
            pide: false,
            pide_space: default_pide_space(),
            pide_time: default_pide_time(),
            mc_paths: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Atm,
    ConvergenceDiffusion,
    TruncationMerton,
    ConvergenceMerton,
    ConvergenceVg,
    Costs,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::Atm => "atm",
            TableKind::ConvergenceDiffusion => "convergence_diffusion",
            TableKind::TruncationMerton => "truncation_merton",
            TableKind::ConvergenceMerton => "convergence_merton",
            TableKind::ConvergenceVg => "convergence_vg",
            TableKind::Costs => "costs",
        }
    }
}

/// `[table]`. Unset schedules fall back to desk-sized defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub which: TableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lbars: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Cost,
    Gamma,
    Mu,
    Spot,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Cost => "cost",
            SweepAxis::Gamma => "gamma",
            SweepAxis::Mu => "mu",
            SweepAxis::Spot => "spot",
        }
    }
}

/// `[sweep]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// `[check]`: thresholds for the diagnostics command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_residual")]
    pub max_residual: f64,
    /// Upper bound on `max(mean_error, var_error) / dt^2`.
    #[serde(default = "default_consistency")]
    pub max_consistency_constant: f64,
}

fn default_residual() -> f64 {
    1e-12
}

fn default_consistency() -> f64 {
    100.0
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            max_residual: default_residual(),
            max_consistency_constant: default_consistency(),
        }
    }
}

/// `[output]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub market: MarketConfig,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<PriceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<ReferenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

fn config_error(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => config_error(format!("{section}.{name}"), reason),
        other => other,
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .map(|line| format!("line {line}"))
                .unwrap_or_else(|| "document".into());
            config_error(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Checks that every block converts to a valid specification.
    pub fn validate(&self) -> Result<()> {
        self.model_spec()?;
        self.market_spec()?;
        self.sizing()?;
        if self.grid.steps == 0 {
            return Err(config_error("grid.steps", "must be >= 1"));
        }
        if let Some(p) = &self.price {
            if p.kinds.is_empty() {
                return Err(config_error("price.kinds", "must name at least one of writer, buyer"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(config_error("sweep.values", "must not be empty"));
            }
        }
        if let Some(t) = &self.table {
            if let (Some(steps), Some(lbars)) = (&t.steps, &t.lbars) {
                if t.which == TableKind::ConvergenceMerton && steps.len() != lbars.len() {
                    return Err(config_error(
                        "table.lbars",
                        "convergence_merton pairs steps with lbars; lengths differ",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| config_error(format!("model.{name}"), format!("required for family {:?}", m.family)))
        };
        let spec = match m.family {
            FamilyName::Diffusion => ModelSpec::diffusion(m.mu, m.sigma),
            FamilyName::Merton => ModelSpec::merton(
                m.mu,
                m.sigma,
                m.alpha.unwrap_or(0.0),
                need(m.xi, "xi")?,
                need(m.lambda, "lambda")?,
            ),
            FamilyName::Vg => ModelSpec::variance_gamma(m.mu, need(m.theta, "theta")?, m.sigma, need(m.kappa, "kappa")?),
        };
        spec.validate().map_err(|e| prefixed("model", e))?;
        Ok(spec)
    }

    pub fn market_spec(&self) -> Result<MarketSpec> {
        let m = &self.market;
        let spec = MarketSpec {
            spot: m.spot,
            strike: m.strike,
            maturity: m.maturity,
            rate: m.rate,
            cost_buy: m.theta_b,
            cost_sell: m.theta_s,
            gamma: m.gamma,
            initial_shares: m.initial_shares,
        };
        spec.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                let key = match name {
                    "cost_buy" => "theta_b",
                    "cost_sell" => "theta_s",
                    other => other,
                };
                config_error(format!("market.{key}"), reason)
            }
            other => other,
        })?;
        Ok(spec)
    }

    pub fn sizing(&self) -> Result<GridSizing> {
        let g = &self.grid;
        let mut sizing = GridSizing {
            lbar: g.lbar.into(),
            mbar: g.mbar.into(),
            short_levels: g.short_levels,
            share_step: g.share_step,
            epsilon: g.epsilon,
            ..GridSizing::default()
        };
        if let Some(f) = g.short_fraction {
            if !(0.0..1.0).contains(&f) {
                return Err(config_error("grid.short_fraction", "must lie in [0, 1)"));
            }
            sizing.short_fraction = f;
        }
        if let Some(h) = g.share_step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(config_error("grid.share_step", "must be > 0"));
            }
        }
        if let Some(e) = g.epsilon {
            if !(e > 0.0) || !e.is_finite() {
                return Err(config_error("grid.epsilon", "must be > 0"));
            }
        }
        if let WidthConfig::Fixed(l) = g.lbar {
            if l < 3 || l % 2 == 0 {
                return Err(config_error("grid.lbar", "must be an odd number >= 3"));
            }
        }
        if let WidthConfig::Fixed(m) = g.mbar {
            if m < 2 {
                return Err(config_error("grid.mbar", "must be >= 2"));
            }
        }
        Ok(sizing)
    }

    pub fn price_kinds(&self) -> Vec<PriceKind> {
        self.price
            .clone()
            .unwrap_or_default()
            .kinds
            .into_iter()
            .map(Into::into)
            .collect()
    }

    /// Reference parameter sets: diffusion, Merton and VG with the
    /// at-the-money contract `S0 = K = 15`, `T = 1`, `r = mu = 0.1`.
    pub fn preset(family: FamilyName) -> Self {
        let (model, gamma, grid) = match family {
            FamilyName::Diffusion => (
                ModelConfig {
                    family,
                    mu: 0.1,
                    sigma: 0.25,
                    alpha: None,
                    xi: None,
                    lambda: None,
                    theta: None,
                    kappa: None,
                },
                0.001,
                GridConfig {
                    steps: 100,
                    lbar: WidthConfig::Fixed(3),
                    mbar: WidthConfig::default(),
                    short_fraction: None,
                    short_levels: None,
                    share_step: None,
                    epsilon: None,
                },
            ),
            FamilyName::Merton => (
                ModelConfig {
                    family,
                    mu: 0.1,
                    sigma: 0.25,
                    alpha: Some(0.0),
                    xi: Some(0.5),
                    lambda: Some(0.8),
                    theta: None,
                    kappa: None,
                },
                0.04,
                GridConfig {
                    steps: 100,
                    lbar: WidthConfig::Fixed(81),
                    mbar: WidthConfig::default(),
                    short_fraction: None,
                    short_levels: None,
                    share_step: None,
                    epsilon: None,
                },
            ),
            FamilyName::Vg => (
                ModelConfig {
                    family,
                    mu: 0.1,
                    sigma: 0.2,
                    alpha: None,
                    xi: None,
                    lambda: None,
                    theta: Some(-0.1),
                    kappa: Some(0.1),
                },
                0.05,
                GridConfig {
                    steps: 150,
                    lbar: WidthConfig::Fixed(43),
                    mbar: WidthConfig::default(),
                    short_fraction: None,
                    short_levels: None,
                    share_step: None,
                    epsilon: None,
                },
            ),
        };
        RunConfig {
            model,
            market: MarketConfig {
                spot: 15.0,
                strike: 15.0,
                maturity: 1.0,
                rate: 0.1,
                theta_b: 0.0,
                theta_s: 0.0,
                gamma,
                initial_shares: 0.0,
            },
            grid,
            price: None,
            references: None,
            table: None,
            sweep: None,
            check: None,
            output: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MERTON: &str = r#"
[model]
family = "merton"
mu = 0.1
sigma = 0.25
alpha = 0.0
xi = 0.5
lambda = 0.8

[market]
spot = 15.0
strike = 15.0
maturity = 1.0
rate = 0.1
theta_b = 0.02
theta_s = 0.02
gamma = 0.04

[grid]
steps = 100
lbar = 81
mbar = "auto"
"#;

    #[test]
    fn parses_and_converts() {
        let cfg = RunConfig::from_toml_str(MERTON).unwrap();
        assert_eq!(cfg.grid.lbar, WidthConfig::Fixed(81));
        assert_eq!(cfg.grid.mbar, WidthConfig::Auto(AutoKeyword::Auto));
        let m = cfg.market_spec().unwrap();
        assert_eq!(m.cost_buy, 0.02);
        assert_eq!(cfg.model_spec().unwrap().merton_lambda, 0.8);
        assert_eq!(cfg.sizing().unwrap().lbar, Width::Fixed(81));
        assert_eq!(cfg.price_kinds(), vec![PriceKind::Writer, PriceKind::Buyer]);
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::from_toml_str(MERTON).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
        for f in [FamilyName::Diffusion, FamilyName::Merton, FamilyName::Vg] {
            let p = RunConfig::preset(f);
            assert_eq!(RunConfig::from_toml_str(&p.to_toml_string()).unwrap(), p);
        }
    }

    #[test]
    fn field_level_errors() {
        let bad = MERTON.replace("gamma = 0.04", "gamma = -1.0");
        match RunConfig::from_toml_str(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "market.gamma"),
            other => panic!("{other:?}"),
        }
        let bad = MERTON.replace("xi = 0.5\n", "");
        match RunConfig::from_toml_str(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "model.xi"),
            other => panic!("{other:?}"),
        }
        let bad = MERTON.replace("lbar = 81", "lbar = \"wide\"");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config { .. })));
        let bad = MERTON.replace("theta_s = 0.02", "theta_s = 1.5");
        match RunConfig::from_toml_str(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "market.theta_s"),
            other => panic!("{other:?}"),
        }
    }
}
