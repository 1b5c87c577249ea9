use crate::error::{Error, Result};

/// Option contract, market rates, frictions and investor preferences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSpec {
    pub spot: f64,
    pub strike: f64,
    /// Maturity in years.
    pub maturity: f64,
    /// Continuously compounded risk-free rate.
    pub rate: f64,
    /// Proportional cost paid when buying shares.
    pub cost_buy: f64,
    /// Proportional cost paid when selling shares.
    pub cost_sell: f64,
    /// Exponential-utility risk aversion.
    pub gamma: f64,
    /// Shares held at the start.
    pub initial_shares: f64,
}

impl MarketSpec {
    /// At-the-money contract used throughout the reference experiments:
    /// `S0 = K = 15`, one year, 10% rate, no costs.
    pub fn atm_reference(gamma: f64) -> Self {
        MarketSpec {
            spot: 15.0,
            strike: 15.0,
            maturity: 1.0,
            rate: 0.1,
            cost_buy: 0.0,
            cost_sell: 0.0,
            gamma,
            initial_shares: 0.0,
        }
    }

    pub fn with_costs(self, cost: f64) -> Self {
        MarketSpec {
            cost_buy: cost,
            cost_sell: cost,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0) {
            return Err(Error::invalid("spot", "must be > 0"));
        }
        if !(self.strike > 0.0) {
            return Err(Error::invalid("strike", "must be > 0"));
        }
        if !(self.maturity > 0.0) {
            return Err(Error::invalid("maturity", "must be > 0"));
        }
        if !self.rate.is_finite() {
            return Err(Error::invalid("rate", "must be finite"));
        }
        if !(self.cost_buy >= 0.0) || !self.cost_buy.is_finite() {
            return Err(Error::invalid("cost_buy", "must be >= 0"));
        }
        if !(self.cost_sell >= 0.0 && self.cost_sell < 1.0) {
            return Err(Error::invalid("cost_sell", "must lie in [0, 1)"));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        if !self.initial_shares.is_finite() {
            return Err(Error::invalid("initial_shares", "must be finite"));
        }
        Ok(())
    }

    /// Discount factor `exp(-r (T - t))`.
    pub fn discount(&self, t: f64) -> f64 {
        (-self.rate * (self.maturity - t)).exp()
    }

    /// Cash received when liquidating `shares` at price `s`.
    pub fn cash_value(&self, shares: f64, s: f64) -> f64 {
        cash_value(shares, s, self.cost_buy, self.cost_sell)
    }

    /// The call is exercised iff selling the delivered share beats the strike.
    pub fn exercised(&self, s: f64) -> bool {
        self.cash_value(1.0, s) > self.strike
    }
}

/// Liquidation value of `y` shares at price `s`: long positions are sold
/// at `(1 - theta_s) s`, short positions are covered at `(1 + theta_b) s`.
pub fn cash_value(y: f64, s: f64, theta_b: f64, theta_s: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else if y < 0.0 {
        (1.0 + theta_b) * y * s
    } else {
        (1.0 - theta_s) * y * s
    }
}
