//! Levy process families, their jump measures and the small-jump
//! Brownian approximation that turns infinite-activity processes into
//! jump-diffusions with finite activity.
//!
//! The log-price is `X_t = ln S_t` and `mu` is always the drift of the
//! *price* SDE `dS/S = mu dt + ...`, so the risk-neutral model is obtained
//! by setting `mu = r`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, geometric_breakpoints, integrate_panels};

/// Absolute tolerance for Levy-measure integrals.
pub const MEASURE_TOL: f64 = 1e-10;

/// Number of standard deviations (Merton) or inverse tail rates (VG) kept
/// when an integral runs over the whole real line.
const TAIL_SPAN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevyFamily {
    Diffusion,
    Merton,
    VarianceGamma,
}

impl LevyFamily {
    pub fn name(self) -> &'static str {
        match self {
            LevyFamily::Diffusion => "diffusion",
            LevyFamily::Merton => "merton",
            LevyFamily::VarianceGamma => "vg",
        }
    }
}

/// Levy process family and parameters plus the price drift `mu`.
///
/// Parameters that do not belong to `family` are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub family: LevyFamily,
    /// Drift of the price SDE, per year.
    pub mu: f64,
    /// Diffusion volatility (0 for VG).
    pub sigma: f64,
    /// Mean of the normal log-jump size.
    pub merton_alpha: f64,
    /// Standard deviation of the log-jump size.
    pub merton_xi: f64,
    /// Jump intensity, per year.
    pub merton_lambda: f64,
    /// Drift of the subordinated Brownian motion.
    pub vg_theta: f64,
    /// Volatility of the subordinated Brownian motion.
    pub vg_sigma_bar: f64,
    /// Variance rate of the gamma subordinator.
    pub vg_kappa: f64,
}

impl ModelSpec {
    pub fn diffusion(mu: f64, sigma: f64) -> Self {
        ModelSpec {
            family: LevyFamily::Diffusion,
            mu,
            sigma,
            merton_alpha: 0.0,
            merton_xi: 0.0,
            merton_lambda: 0.0,
            vg_theta: 0.0,
            vg_sigma_bar: 0.0,
            vg_kappa: 0.0,
        }
    }

    pub fn merton(mu: f64, sigma: f64, alpha: f64, xi: f64, lambda: f64) -> Self {
        ModelSpec {
            family: LevyFamily::Merton,
            merton_alpha: alpha,
            merton_xi: xi,
            merton_lambda: lambda,
            ..Self::diffusion(mu, sigma)
        }
    }

    pub fn variance_gamma(mu: f64, theta: f64, sigma_bar: f64, kappa: f64) -> Self {
        ModelSpec {
            family: LevyFamily::VarianceGamma,
            vg_theta: theta,
            vg_sigma_bar: sigma_bar,
            vg_kappa: kappa,
            ..Self::diffusion(mu, 0.0)
        }
    }

    /// Same process with the price drift replaced by `r`.
    pub fn risk_neutral(&self, r: f64) -> Self {
        ModelSpec { mu: r, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mu,
            self.sigma,
            self.merton_alpha,
            self.merton_xi,
            self.merton_lambda,
            self.vg_theta,
            self.vg_sigma_bar,
            self.vg_kappa,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("model", "parameters must be finite"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid("sigma", "must be >= 0"));
        }
        match self.family {
            LevyFamily::Diffusion => {
                if self.sigma <= 0.0 {
                    return Err(Error::invalid("sigma", "diffusion needs sigma > 0"));
                }
            }
            LevyFamily::Merton => {
                if self.merton_xi <= 0.0 {
                    return Err(Error::invalid("merton_xi", "must be > 0"));
                }
                if self.merton_lambda <= 0.0 {
                    return Err(Error::invalid("merton_lambda", "must be > 0"));
                }
            }
            LevyFamily::VarianceGamma => {
                if self.vg_sigma_bar <= 0.0 {
                    return Err(Error::invalid("vg_sigma_bar", "must be > 0"));
                }
                if self.vg_kappa <= 0.0 {
                    return Err(Error::invalid("vg_kappa", "must be > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn has_jumps(&self) -> bool {
        self.family != LevyFamily::Diffusion
    }

    /// Exponential rates `(left, right)` of the VG density tails.
    pub fn vg_tail_rates(&self) -> (f64, f64) {
        let s2 = self.vg_sigma_bar * self.vg_sigma_bar;
        let a = (2.0 / self.vg_kappa + self.vg_theta * self.vg_theta / s2).sqrt()
            / self.vg_sigma_bar;
        let b = self.vg_theta / s2;
        (a + b, a - b)
    }

    /// Interval outside of which the jump measure is negligible.
    pub fn jump_support(&self) -> (f64, f64) {
        match self.family {
            LevyFamily::Diffusion => (0.0, 0.0),
            LevyFamily::Merton => (
                self.merton_alpha - TAIL_SPAN * self.merton_xi,
                self.merton_alpha + TAIL_SPAN * self.merton_xi,
            ),
            LevyFamily::VarianceGamma => {
                let (left, right) = self.vg_tail_rates();
                (-TAIL_SPAN / left, TAIL_SPAN / right)
            }
        }
    }

    /// Density of the Levy measure at `z` without error checks (0 for
    /// the diffusion family and at the VG singularity).
    pub(crate) fn density_unchecked(&self, z: f64) -> f64 {
        match self.family {
            LevyFamily::Diffusion => 0.0,
            LevyFamily::Merton => {
                let d = (z - self.merton_alpha) / self.merton_xi;
                self.merton_lambda / (self.merton_xi * (2.0 * PI).sqrt()) * (-0.5 * d * d).exp()
            }
            LevyFamily::VarianceGamma => {
                if z == 0.0 {
                    return 0.0;
                }
                let (left, right) = self.vg_tail_rates();
                let rate = if z > 0.0 { right } else { left };
                (-rate * z.abs()).exp() / (self.vg_kappa * z.abs())
            }
        }
    }

    /// `int_lo^hi weight(z) nu(dz)`.
    ///
    /// For VG the integrand must be integrable at 0 whenever `[lo, hi]`
    /// touches the origin (for instance `weight(z) = z^2`).
    pub fn measure_integral<W: Fn(f64) -> f64>(&self, weight: W, lo: f64, hi: f64) -> f64 {
        if hi <= lo || !self.has_jumps() {
            return 0.0;
        }
        let g = |z: f64| weight(z) * self.density_unchecked(z);
        match self.family {
            LevyFamily::Diffusion => 0.0,
            LevyFamily::Merton => {
                // split at the mode and at +-6 xi so the recursion sees the bell
                let a = self.merton_alpha;
                let xi = self.merton_xi;
                let mut pts = vec![lo];
                for c in [a - 6.0 * xi, a - xi, a, a + xi, a + 6.0 * xi] {
                    if c > lo && c < hi {
                        pts.push(c);
                    }
                }
                pts.push(hi);
                integrate_panels(&g, &pts, MEASURE_TOL)
            }
            LevyFamily::VarianceGamma => {
                let mut total = 0.0;
                if hi > 0.0 {
                    let a = lo.max(0.0);
                    total += half_line_integral(&g, a, hi);
                }
                if lo < 0.0 {
                    let b = hi.min(0.0);
                    let mirrored = |z: f64| g(-z);
                    total += half_line_integral(&mirrored, -b, -lo);
                }
                total
            }
        }
    }

    /// `int_R weight(z) nu(dz)` over the truncated support.
    pub fn full_integral<W: Fn(f64) -> f64>(&self, weight: W) -> f64 {
        let (lo, hi) = self.jump_support();
        self.measure_integral(weight, lo, hi)
    }

    /// Closed-form `int (e^z - 1) nu(dz)`; `None` when it diverges.
    pub fn exp_compensator(&self) -> Option<f64> {
        match self.family {
            LevyFamily::Diffusion => Some(0.0),
            LevyFamily::Merton => Some(
                self.merton_lambda
                    * ((self.merton_alpha + 0.5 * self.merton_xi * self.merton_xi).exp() - 1.0),
            ),
            LevyFamily::VarianceGamma => {
                let arg = 1.0
                    - self.vg_theta * self.vg_kappa
                    - 0.5 * self.vg_sigma_bar * self.vg_sigma_bar * self.vg_kappa;
                if arg > 0.0 {
                    Some(-arg.ln() / self.vg_kappa)
                } else {
                    None
                }
            }
        }
    }

    /// Closed-form `int z^2 nu(dz)`.
    pub fn jump_second_moment(&self) -> f64 {
        match self.family {
            LevyFamily::Diffusion => 0.0,
            LevyFamily::Merton => {
                self.merton_lambda
                    * (self.merton_xi * self.merton_xi + self.merton_alpha * self.merton_alpha)
            }
            LevyFamily::VarianceGamma => {
                self.vg_sigma_bar * self.vg_sigma_bar + self.vg_theta * self.vg_theta * self.vg_kappa
            }
        }
    }
}

/// `int_a^b g` for `0 <= a < b` where `g` may behave like `1/z` near 0.
fn half_line_integral<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a > 0.0 {
        return integrate_panels(g, &geometric_breakpoints(a, b), MEASURE_TOL);
    }
    // a == 0: the integrand is bounded there, resolve [0, b] dyadically
    let mut pts = geometric_breakpoints(b * 2f64.powi(-30), b);
    pts.insert(0, 0.0);
    let head = adaptive_simpson(g, pts[0], pts[1], MEASURE_TOL * 1e-3);
    head + integrate_panels(g, &pts[1..], MEASURE_TOL)
}

/// Density of the Levy measure at `z`.
pub fn levy_density(model: &ModelSpec, z: f64) -> Result<f64> {
    match model.family {
        LevyFamily::Diffusion => Err(Error::NoJumpComponent),
        LevyFamily::VarianceGamma if z == 0.0 => Err(Error::SingularPoint(z)),
        _ => Ok(model.density_unchecked(z)),
    }
}

/// Merton compensator `m = lambda (exp(alpha + xi^2/2) - 1)`.
pub fn merton_compensator(model: &ModelSpec) -> Result<f64> {
    match model.family {
        LevyFamily::Merton => Ok(model.exp_compensator().unwrap_or(f64::NAN)),
        _ => Err(Error::NoJumpComponent),
    }
}

/// Parameters of the jump-diffusion that replaces jumps smaller than
/// `epsilon` with a Brownian motion of the same variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallJumpParams {
    pub epsilon: f64,
    /// Standard deviation of the Brownian stand-in for jumps below epsilon.
    pub sigma_eps: f64,
    /// `int_{|z| >= eps} (e^z - 1) nu(dz)`.
    pub omega_eps: f64,
    /// `int_{|z| >= eps} nu(dz)`.
    pub lambda_eps: f64,
    /// Mean size of the remaining jumps.
    pub theta_eps: f64,
    /// Standard deviation of the remaining jump part.
    pub sigma_j: f64,
}

pub fn small_jump_params(model: &ModelSpec, epsilon: f64) -> Result<SmallJumpParams> {
    if !(epsilon > 0.0) || epsilon.is_nan() {
        return Err(Error::InvalidTruncation(epsilon));
    }
    if !model.has_jumps() {
        return Err(Error::NoJumpComponent);
    }
    let (lo, hi) = model.jump_support();
    let z2 = |z: f64| z * z;
    // the small-jump region, clipped to the support
    let small_var = model.measure_integral(z2, (-epsilon).max(lo), epsilon.min(hi));
    let big = |w: &dyn Fn(f64) -> f64| {
        model.measure_integral(w, lo, (-epsilon).min(hi)) + model.measure_integral(w, epsilon.max(lo), hi)
    };
    let lambda_eps = big(&|_| 1.0);
    let mean_sum = big(&|z| z);
    let omega_eps = big(&|z: f64| z.exp_m1());
    let big_var = big(&z2);
    let theta_eps = if lambda_eps > 0.0 {
        mean_sum / lambda_eps
    } else {
        0.0
    };
    Ok(SmallJumpParams {
        epsilon,
        sigma_eps: small_var.max(0.0).sqrt(),
        omega_eps,
        lambda_eps,
        theta_eps,
        sigma_j: big_var.max(0.0).sqrt(),
    })
}

/// Standard deviation of a unit-time increment of the log-price.
pub fn process_std(model: &ModelSpec) -> f64 {
    match model.family {
        LevyFamily::Diffusion => model.sigma,
        LevyFamily::Merton | LevyFamily::VarianceGamma => {
            (model.sigma * model.sigma + model.jump_second_moment()).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub finite_second_moment: bool,
    /// Exponential decay rate of the right tail of the density (VG only).
    pub right_tail_rate: Option<f64>,
    /// Numerical value of `int_{|z| >= 1} e^{2z} nu(dz)` when finite.
    pub tail_integral: Option<f64>,
    pub details: String,
}

/// Checks that `E[S_t^2]` is finite, i.e. `int_{|z|>=1} e^{2z} nu(dz) < inf`.
pub fn moment_check(model: &ModelSpec) -> MomentReport {
    match model.family {
        LevyFamily::Diffusion => MomentReport {
            finite_second_moment: true,
            right_tail_rate: None,
            tail_integral: Some(0.0),
            details: "no jump component".into(),
        },
        LevyFamily::Merton => {
            let shift = 2.0 * model.merton_xi * model.merton_xi;
            let hi = model.merton_alpha + shift + TAIL_SPAN * model.merton_xi;
            let lo = model.merton_alpha - TAIL_SPAN * model.merton_xi;
            let w = |z: f64| (2.0 * z).exp();
            let v = model.measure_integral(w, 1.0, hi.max(1.0)) + model.measure_integral(w, lo.min(-1.0), -1.0);
            MomentReport {
                finite_second_moment: v.is_finite(),
                right_tail_rate: None,
                tail_integral: Some(v),
                details: "gaussian jump tails".into(),
            }
        }
        LevyFamily::VarianceGamma => {
            let (left, right) = model.vg_tail_rates();
            if right <= 2.0 {
                return MomentReport {
                    finite_second_moment: false,
                    right_tail_rate: Some(right),
                    tail_integral: None,
                    details: format!("right tail rate {right:.6} <= 2"),
                };
            }
            let w = |z: f64| (2.0 * z).exp();
            let v = model.measure_integral(w, 1.0, 1.0 + TAIL_SPAN / (right - 2.0))
                + model.measure_integral(w, -1.0 - TAIL_SPAN / left, -1.0);
            MomentReport {
                finite_second_moment: v.is_finite(),
                right_tail_rate: Some(right),
                tail_integral: Some(v),
                details: format!("right tail rate {right:.6} > 2"),
            }
        }
    }
}
