use rand::distr::OpenClosed01;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::fit_linear_1d;
use crate::rng::{replication_rng, StreamRng};
use crate::stats::McEstimate;

use super::curve::{RiskCurve, RiskRow};
use super::exponent::{default_burn_in, fit_rate_exponent, RateFit};

/// Error structure for `y = alpha0 x + xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleNoise {
    /// `x` symmetric with `P(|x| > t) = t^-(2 + delta)` on `t >= 1`, and
    /// `xi = eps x` for an independent Rademacher sign `eps`.
    Dependent,
    /// Reference: `x` uniform on `[0, 1]`, `xi` standard Gaussian.
    IndependentGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleResult {
    pub curve: RiskCurve,
    pub fit: RateFit,
    /// Slope `-1/2` of the independent-error parametric rate.
    pub reference_slope: f64,
}

/// One draw of `|x|` with `P(|x| > t) = t^-index`, `t >= 1`.
pub fn pareto_type_one<R: Rng + ?Sized>(rng: &mut R, index: f64) -> f64 {
    let u: f64 = rng.sample(OpenClosed01);
    u.powf(-1.0 / index)
}

/// `|alpha_hat - alpha0|` for the through-origin least squares slope.
pub fn slope_error(rng: &mut StreamRng, n: usize, delta: f64, alpha0: f64, noise: CounterexampleNoise) -> Result<f64> {
    let mut x = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    for _ in 0..n {
        match noise {
            CounterexampleNoise::Dependent => {
                let mag = pareto_type_one(rng, 2.0 + delta);
                let v = if rng.random_bool(0.5) { mag } else { -mag };
                let eps = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                x.push(v);
                xi.push(eps * v);
            }
            CounterexampleNoise::IndependentGaussian => {
                x.push(rng.random::<f64>());
                xi.push(rng.sample(StandardNormal));
            }
        }
    }
    let y: Vec<f64> = x.iter().zip(&xi).map(|(a, e)| alpha0 * a + e).collect();
    Ok((fit_linear_1d(&x, &y)? - alpha0).abs())
}

/// Decay of `E |alpha_hat - alpha0|` in `n` for the closed-form linear fit.
///
/// With `xi = eps x` the error is `sum eps_i x_i^2 / sum x_i^2`, a
/// self-normalized sum of variables without a first moment, which decays
/// only like `n^{-delta / (2 + delta)}`.
pub fn counterexample_dependent(
    n_grid: &[usize],
    reps: usize,
    seed: u64,
    delta: f64,
    alpha0: f64,
    noise: CounterexampleNoise,
) -> Result<CounterexampleResult> {
    if !(delta > 0.0) {
        return invalid(format!("delta must be positive, got {delta}"));
    }
    if reps == 0 || n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("need reps >= 1 and a positive, strictly increasing n_grid");
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let errs: Vec<Result<f64>> = (0..reps)
            .into_par_iter()
            .map(|r| slope_error(&mut replication_rng(seed, n, r), n, delta, alpha0, noise))
            .collect();
        let errs = errs.into_iter().collect::<Result<Vec<f64>>>()?;
        let est = McEstimate::from_values(&errs);
        rows.push(RiskRow { n, mean_risk: est.mean, stderr: est.stderr, reps, failures: 0 });
    }
    let curve = RiskCurve { rows };
    let fit = fit_rate_exponent(&curve, default_burn_in(&curve))?;
    Ok(CounterexampleResult { curve, fit, reference_slope: -0.5 })
}
