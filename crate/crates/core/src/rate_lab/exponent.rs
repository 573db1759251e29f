use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::ols_line;

use super::curve::RiskCurve;

/// Smallest `n` kept by [`default_burn_in`].
pub const BURN_IN_MIN_N: usize = 128;

/// Risk exponent `e(alpha, p) = min{1/(2 + alpha), 1/2 - 1/(2p)}`, so that
/// the risk decays like `n^{-e}`; `p = inf` is allowed.
pub fn theoretical_exponent(alpha: f64, p: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return invalid(format!("alpha must lie in (0, 2), got {alpha}"));
    }
    if !(p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    Ok(entropy_branch(alpha).min(noise_branch(p)))
}

pub fn entropy_branch(alpha: f64) -> f64 {
    1.0 / (2.0 + alpha)
}

pub fn noise_branch(p: f64) -> f64 {
    0.5 - 0.5 / p
}

/// Moment level `1 + 2/alpha` where the two branches meet.
pub fn critical_p(alpha: f64) -> f64 {
    1.0 + 2.0 / alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p < 1 + 2/alpha`: the noise branch is the smaller one.
    Noise,
    Boundary,
    /// `p > 1 + 2/alpha`: the Gaussian-noise rate.
    Entropy,
}

/// Regime from the sign of `p - (1 + 2/alpha)`; `alpha = 0` stands for
/// the limit of classes with vanishing entropy exponent, where every
/// finite `p` is in the noise regime.
pub fn regime(alpha: f64, p: f64) -> Result<Regime> {
    if !(0.0..2.0).contains(&alpha) {
        return invalid(format!("alpha must lie in [0, 2), got {alpha}"));
    }
    if !(p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    if p.is_infinite() {
        return Ok(Regime::Entropy);
    }
    if alpha == 0.0 {
        return Ok(Regime::Noise);
    }
    let gap = p - critical_p(alpha);
    Ok(if gap < 0.0 {
        Regime::Noise
    } else if gap > 0.0 {
        Regime::Entropy
    } else {
        Regime::Boundary
    })
}

/// Log-log regression of a risk curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_used: Vec<usize>,
}

impl RateFit {
    /// Measured exponent `e = -slope`.
    pub fn exponent(&self) -> f64 {
        -self.slope
    }
}

/// Number of leading rows with `n < 128`.
pub fn default_burn_in(curve: &RiskCurve) -> usize {
    curve.rows.iter().take_while(|r| r.n < BURN_IN_MIN_N).count()
}

/// OLS of `log mean_risk` on `log n` after dropping the first `burn_in` rows.
pub fn fit_rate_exponent(curve: &RiskCurve, burn_in: usize) -> Result<RateFit> {
    let rows = curve.rows.get(burn_in..).unwrap_or(&[]);
    if rows.len() < 4 {
        return invalid(format!("need at least 4 rows after burn-in, have {}", rows.len()));
    }
    if let Some(r) = rows.iter().find(|r| !(r.mean_risk > 0.0) || !r.mean_risk.is_finite()) {
        return Err(Error::NonPositiveRisk { n: r.n, risk: r.mean_risk });
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean_risk.ln()).collect();
    let fit = ols_line(&x, &y);
    Ok(RateFit {
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        intercept: fit.intercept,
        r2: fit.r2,
        n_used: rows.iter().map(|r| r.n).collect(),
    })
}
