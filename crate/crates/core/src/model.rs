//! Closed-form quantities of the sentiment-driven price model.
//!
//! The sentiment factor `P` is a geometric Brownian motion with drift `mu_p` and
//! volatility `sigma_p`, started from a constant history `phi0` on `[-L, 0]`.
//! The log-price accumulates the *integrated information*
//!
//! ```text
//! X_t = ∫_0^t P_{u - tau} du
//! ```
//!
//! as its conditional variance carrier. This module holds the moments of `X`,
//! of its increments and of the log-price, together with the two-moment
//! lognormal (Levy) approximation used for both pricing and estimation.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Denominators closer to zero than this are treated as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-10;

/// Year fractions used across the crate.
pub mod daycount {
    /// Calendar days per year (Act/365).
    pub const CALENDAR_DAYS: f64 = 365.0;
    /// Trading days per year.
    pub const TRADING_DAYS: f64 = 252.0;

    /// One calendar day.
    pub const DAY: f64 = 1.0 / CALENDAR_DAYS;
    /// One calendar week.
    pub const WEEK: f64 = 7.0 / CALENDAR_DAYS;
    /// A working week of five trading days.
    pub const WORKING_WEEK: f64 = 5.0 / TRADING_DAYS;
    /// One month as a twelfth of a year.
    pub const MONTH: f64 = 1.0 / 12.0;
}

/// Parameters of the bivariate sentiment/price model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Sentiment drift (per year).
    #[serde(rename = "mu_P")]
    pub mu_p: f64,
    /// Sentiment volatility (per square-root year).
    #[serde(rename = "sigma_P")]
    pub sigma_p: f64,
    /// Price drift loading on sentiment.
    #[serde(rename = "mu_S")]
    pub mu_s: f64,
    /// Price volatility loading on sentiment.
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    /// Delay between sentiment and its effect on the price (years).
    pub tau: f64,
    /// Constant sentiment level on the initial window `[-L, 0]`.
    pub phi0: f64,
    /// Length of the initial window (years).
    #[serde(rename = "L")]
    pub lookback: f64,
}

impl ModelParams {
    pub fn new(
        mu_p: f64,
        sigma_p: f64,
        mu_s: f64,
        sigma_s: f64,
        tau: f64,
        phi0: f64,
        lookback: f64,
    ) -> Result<Self> {
        let p = ModelParams { mu_p, sigma_p, mu_s, sigma_s, tau, phi0, lookback };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu_P", self.mu_p),
            ("sigma_P", self.sigma_p),
            ("mu_S", self.mu_s),
            ("sigma_S", self.sigma_s),
            ("tau", self.tau),
            ("phi0", self.phi0),
            ("L", self.lookback),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::param(name, "must be finite"));
            }
        }
        if self.sigma_p < 0.0 {
            return Err(ModelError::param("sigma_P", "must be non-negative"));
        }
        if self.sigma_s < 0.0 {
            return Err(ModelError::param("sigma_S", "must be non-negative"));
        }
        if self.tau < 0.0 {
            return Err(ModelError::param("tau", "must be non-negative"));
        }
        if self.lookback < self.tau {
            return Err(ModelError::param("L", "lookback window must cover the delay"));
        }
        if self.phi0 <= 0.0 {
            return Err(ModelError::param("phi0", "initial sentiment must be positive"));
        }
        if self.mu_p.abs() < DEGENERATE_TOL {
            return Err(ModelError::DegenerateDenominator("mu_P"));
        }
        Ok(())
    }

    /// Same parameters with a different delay; the lookback grows if needed.
    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self.lookback = self.lookback.max(tau);
        self
    }

    pub fn with_phi0(mut self, phi0: f64) -> Self {
        self.phi0 = phi0;
        self
    }

    /// Log-price drift per unit of integrated information.
    pub fn log_drift(&self) -> f64 {
        self.mu_s - 0.5 * self.sigma_s * self.sigma_s
    }
}

/// Mean and variance of a scalar random quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

impl MomentPair {
    pub fn deterministic(value: f64) -> Self {
        MomentPair { mean: value, variance: 0.0 }
    }

    pub fn second_moment(&self) -> f64 {
        self.variance + self.mean * self.mean
    }
}

/// Parameters `(alpha, nu2)` of a lognormal law: `log X ~ N(alpha, nu2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyLogNormal {
    pub alpha: f64,
    pub nu2: f64,
}

impl LevyLogNormal {
    pub fn mean(&self) -> f64 {
        (self.alpha + 0.5 * self.nu2).exp()
    }

    pub fn second_moment(&self) -> f64 {
        (2.0 * self.alpha + 2.0 * self.nu2).exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lx = x.ln();
        let z = lx - self.alpha;
        -lx - 0.5 * (2.0 * std::f64::consts::PI * self.nu2).ln() - z * z / (2.0 * self.nu2)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Value whose log sits `z` standard deviations from `alpha`.
    pub fn at_standard_score(&self, z: f64) -> f64 {
        (self.alpha + self.nu2.sqrt() * z).exp()
    }
}

/// First and second raw moments of `IP(s) = ∫_0^s P_u du` with `P_0 = phi0`.
pub fn ip_moments(params: &ModelParams, s: f64) -> Result<(f64, f64)> {
    ip_moments_raw(params.mu_p, params.sigma_p, params.phi0, s)
}

/// [`ip_moments`] from bare sentiment parameters and starting level.
pub fn ip_moments_raw(mu_p: f64, sigma_p: f64, level: f64, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(ModelError::param("s", "integration horizon must be positive"));
    }
    let s2 = sigma_p * sigma_p;
    let mu = mu_p;
    let a = mu + s2;
    let b = 2.0 * mu + s2;
    if mu.abs() < DEGENERATE_TOL {
        return Err(ModelError::DegenerateDenominator("mu_P"));
    }
    if a.abs() < DEGENERATE_TOL {
        return Err(ModelError::DegenerateDenominator("mu_P + sigma_P^2"));
    }
    if b.abs() < DEGENERATE_TOL {
        return Err(ModelError::DegenerateDenominator("2 mu_P + sigma_P^2"));
    }
    let g_mu = (mu * s).exp_m1() / mu;
    let g_b = (b * s).exp_m1() / b;
    let m1 = level * g_mu;
    let m2 = 2.0 * level * level / a * (g_b - g_mu);
    if !m1.is_finite() || !m2.is_finite() {
        return Err(ModelError::NonFinite("ip_moments"));
    }
    Ok((m1, m2))
}

/// `X_tau^tau = ∫_{-tau}^0 phi(u) du` for the constant initial window.
pub fn x_tau_deterministic(params: &ModelParams) -> f64 {
    params.phi0 * params.tau
}

/// Mean and variance of `X_t` (when `horizon` is `None`) or of the increment
/// `X_{t,T} = X_T - X_t` (when `horizon = Some(T)`).
pub fn integrated_info_moments(
    params: &ModelParams,
    t: f64,
    horizon: Option<f64>,
) -> Result<MomentPair> {
    if !(t >= 0.0) {
        return Err(ModelError::param("t", "must be non-negative"));
    }
    let tau = params.tau;
    let phi = params.phi0;
    match horizon {
        None => {
            if t <= tau {
                return Ok(MomentPair::deterministic(phi * t));
            }
            let (m1, m2) = ip_moments(params, t - tau)?;
            Ok(MomentPair { mean: phi * tau + m1, variance: (m2 - m1 * m1).max(0.0) })
        }
        Some(big_t) => {
            if !(big_t > t) {
                return Err(ModelError::param("T", "must exceed t"));
            }
            if big_t <= tau {
                return Ok(MomentPair::deterministic(phi * (big_t - t)));
            }
            if t <= tau {
                let (m1, m2) = ip_moments(params, big_t - tau)?;
                return Ok(MomentPair {
                    mean: phi * (tau - t) + m1,
                    variance: (m2 - m1 * m1).max(0.0),
                });
            }
            // X_{t,T} equals P_{t-tau} times an independent copy of IP(T-t)
            // started from one, so both raw moments pick up E[P^k_{t-tau}].
            let (m1, m2) = ip_moments(params, big_t - t)?;
            let lag = t - tau;
            let s2 = params.sigma_p * params.sigma_p;
            let first = (params.mu_p * lag).exp() * m1;
            let second = ((2.0 * params.mu_p + s2) * lag).exp() * m2;
            Ok(MomentPair { mean: first, variance: (second - first * first).max(0.0) })
        }
    }
}

/// Relative slack allowed on `m2 >= m1^2` before moments are rejected.
const MOMENT_SLACK: f64 = 1e-10;

/// Lognormal law matching the first two raw moments `m1`, `m2`.
pub fn levy_params(m1: f64, m2: f64) -> Result<LevyLogNormal> {
    if !(m1 > 0.0) || !m1.is_finite() || !m2.is_finite() {
        return Err(ModelError::InvalidMoments { m1, m2 });
    }
    let ratio = m2 / (m1 * m1);
    if ratio < 1.0 - MOMENT_SLACK {
        return Err(ModelError::InvalidMoments { m1, m2 });
    }
    let ln_m1 = m1.ln();
    let ln_m2 = m2.ln();
    let nu2 = (ln_m2 - 2.0 * ln_m1).max(0.0);
    Ok(LevyLogNormal { alpha: ln_m1 - 0.5 * nu2, nu2 })
}

/// Mean and variance of `log S_t` under the physical measure.
pub fn log_price_moments(params: &ModelParams, s0: f64, t: f64) -> Result<MomentPair> {
    if !(s0 > 0.0) {
        return Err(ModelError::param("s0", "must be positive"));
    }
    if !(t > 0.0) {
        return Err(ModelError::param("t", "must be positive"));
    }
    let x = integrated_info_moments(params, t, None)?;
    let drift = params.log_drift();
    let s2 = params.sigma_s * params.sigma_s;
    Ok(MomentPair {
        mean: s0.ln() + drift * x.mean,
        variance: drift * drift * x.variance + s2 * x.mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table3(phi0: f64) -> ModelParams {
        ModelParams::new(0.03, 0.35, 0.0, 0.04, 5.0 / 365.0, phi0, 5.0 / 365.0).unwrap()
    }

    #[test]
    fn ip_moments_deterministic_limit() {
        let p = ModelParams::new(1.0, 1e-9, 0.0, 0.1, 0.0, 1.0, 0.0).unwrap();
        let (m1, m2) = ip_moments(&p, 1.0).unwrap();
        assert_relative_eq!(m1, std::f64::consts::E - 1.0, max_relative = 1e-12);
        assert_relative_eq!(m2, m1 * m1, max_relative = 1e-12);
    }

    #[test]
    fn ip_moments_scale_with_phi0() {
        let p1 = table3(1.0);
        let p2 = table3(2.0);
        let (a1, a2) = ip_moments(&p1, 0.3).unwrap();
        let (b1, b2) = ip_moments(&p2, 0.3).unwrap();
        assert_eq!(b1, 2.0 * a1);
        assert_eq!(b2, 4.0 * a2);
    }

    #[test]
    fn ip_moments_rejects_singular_denominators() {
        let mut p = table3(1.0);
        p.mu_p = -p.sigma_p * p.sigma_p;
        assert_eq!(
            ip_moments(&p, 1.0),
            Err(ModelError::DegenerateDenominator("mu_P + sigma_P^2"))
        );
        p.mu_p = -0.5 * p.sigma_p * p.sigma_p;
        assert_eq!(
            ip_moments(&p, 1.0),
            Err(ModelError::DegenerateDenominator("2 mu_P + sigma_P^2"))
        );
        p.mu_p = 0.0;
        assert_eq!(ip_moments(&p, 1.0), Err(ModelError::DegenerateDenominator("mu_P")));
    }

    #[test]
    fn initial_window_integral() {
        let p = table3(100.0);
        assert_relative_eq!(x_tau_deterministic(&p), 100.0 * 5.0 / 365.0, max_relative = 1e-15);
        assert_eq!(x_tau_deterministic(&p.with_tau(0.0)), 0.0);
        let q = ModelParams::new(0.1, 0.2, 0.0, 0.1, 0.1, 10.0, 0.1).unwrap();
        assert_relative_eq!(x_tau_deterministic(&q), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn deterministic_branches_have_zero_variance() {
        let p = table3(100.0);
        let m = integrated_info_moments(&p, 0.01, None).unwrap();
        assert_eq!(m.variance, 0.0);
        assert_relative_eq!(m.mean, 1.0, max_relative = 1e-14);
        let inc = integrated_info_moments(&p, 0.001, Some(0.01)).unwrap();
        assert_eq!(inc.variance, 0.0);
        assert_relative_eq!(inc.mean, 100.0 * 0.009, max_relative = 1e-12);
    }

    #[test]
    fn straddling_increment_composes_shift_and_ip() {
        let p = table3(100.0);
        let tau = p.tau;
        let inc = integrated_info_moments(&p, 0.0, Some(0.25)).unwrap();
        let (m1, m2) = ip_moments(&p, 0.25 - tau).unwrap();
        assert_relative_eq!(inc.mean, x_tau_deterministic(&p) + m1, max_relative = 1e-14);
        assert_relative_eq!(inc.variance, m2 - m1 * m1, max_relative = 1e-12);
    }

    #[test]
    fn increment_from_zero_is_level_minus_initial_window() {
        let p = table3(100.0);
        let total = integrated_info_moments(&p, 0.4, None).unwrap();
        let inc = integrated_info_moments(&p, 0.0, Some(0.4)).unwrap();
        assert_relative_eq!(inc.mean, total.mean - 0.0, max_relative = 1e-14);
        // X_0 = 0, so the increment over [0, T] is X_T itself.
        assert_relative_eq!(inc.variance, total.variance, max_relative = 1e-12);
    }

    #[test]
    fn levy_params_reference_points() {
        let l = levy_params(1.0, 1.0).unwrap();
        assert_eq!(l.alpha, 0.0);
        assert_eq!(l.nu2, 0.0);
        let l = levy_params(0.5f64.exp(), 2.0f64.exp()).unwrap();
        assert_relative_eq!(l.alpha, 0.0, epsilon = 1e-14);
        assert_relative_eq!(l.nu2, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn levy_params_rejects_bad_moments() {
        assert!(matches!(levy_params(0.0, 1.0), Err(ModelError::InvalidMoments { .. })));
        assert!(matches!(levy_params(-1.0, 1.0), Err(ModelError::InvalidMoments { .. })));
        assert!(matches!(levy_params(2.0, 3.0), Err(ModelError::InvalidMoments { .. })));
    }

    #[test]
    fn log_price_moments_early_branch() {
        let p = ModelParams::new(0.5, 0.3, 0.2, 0.4, 0.1, 5.0, 0.1).unwrap();
        let m = log_price_moments(&p, 100.0, 0.05).unwrap();
        assert_relative_eq!(m.mean, 100f64.ln() + (0.2 - 0.08) * 5.0 * 0.05, max_relative = 1e-14);
        assert_relative_eq!(m.variance, 0.16 * 5.0 * 0.05, max_relative = 1e-14);
    }

    #[test]
    fn log_price_moments_drift_cancellation() {
        let p = ModelParams::new(0.5, 0.3, 0.08, 0.4, 0.1, 5.0, 0.1).unwrap();
        for t in [0.05, 0.3, 2.0] {
            let m = log_price_moments(&p, 100.0, t).unwrap();
            assert_relative_eq!(m.mean, 100f64.ln(), max_relative = 1e-15);
        }
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.1, -0.1, 0.0, 0.1, 0.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(0.1, 0.1, 0.0, 0.1, 0.2, 1.0, 0.1).is_err());
        assert!(ModelParams::new(0.1, 0.1, 0.0, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(0.0, 0.1, 0.0, 0.1, 0.0, 1.0, 0.0).is_err());
    }
}
