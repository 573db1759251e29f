use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::estimate_compatibility;
use crate::noise_models::ErrorLaw;
use crate::rng::{derive_seed, stream_rng};

use super::curve::{run_risk_curve, EstimatorClass, ExperimentSpec, RiskCurve, Truth};
use super::exponent::{default_burn_in, fit_rate_exponent, RateFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoExperiment {
    pub d: usize,
    pub s: usize,
    pub n_grid: Vec<usize>,
    pub design: ErrorLaw,
    pub noise: ErrorLaw,
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    /// Rows of the design used to estimate the compatibility constant.
    pub compat_rows: usize,
    pub compat_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoExperimentResult {
    pub curve: RiskCurve,
    pub fit: RateFit,
    /// `mean_error / (s log d / n)` per grid point.
    pub scaled_error: Vec<f64>,
    /// Upper estimate of the compatibility constant `phi(3, S)`.
    pub c0_hat: f64,
    /// `mean_error / (16 L^2 ||xi||_{1/alpha,1}^2 / c0^2 * s log d / n)`.
    pub theorem_ratio: Vec<f64>,
}

/// Prediction-error curve of the tuned Lasso, its exponent in `n`, and the
/// error measured against the `s log d / n` scale.
pub fn lasso_experiment(cfg: &LassoExperiment) -> Result<LassoExperimentResult> {
    if cfg.s == 0 {
        return invalid("need s >= 1");
    }
    if cfg.compat_rows == 0 || cfg.compat_budget == 0 {
        return invalid("compatibility estimate needs rows and budget");
    }
    let spec = ExperimentSpec {
        class: EstimatorClass::Lasso {
            d: cfg.d,
            s: cfg.s,
            design: cfg.design.clone(),
            l: cfg.l,
            alpha: cfg.alpha,
            tol: 1e-8,
            max_iter: 10_000,
        },
        truth: Truth::Zero,
        noise: cfg.noise.clone(),
        n_grid: cfg.n_grid.clone(),
        reps: cfg.reps,
        master_seed: cfg.seed,
    };
    let curve = run_risk_curve(&spec)?;
    let fit = fit_rate_exponent(&curve, default_burn_in(&curve))?;

    let mut rng = stream_rng(derive_seed(cfg.seed, &[u64::MAX]), 0);
    let mut flat = vec![0.0; cfg.compat_rows * cfg.d];
    cfg.design.fill(&mut rng, &mut flat);
    let x = Array2::from_shape_vec((cfg.compat_rows, cfg.d), flat).expect("shape matches");
    let support: Vec<usize> = (0..cfg.s).collect();
    let c0_hat = estimate_compatibility(&x, &support, 3.0, cfg.compat_budget, derive_seed(cfg.seed, &[7]))?;

    let norm = cfg.noise.lp1_norm(1.0 / cfg.alpha)?.finite(&cfg.noise)?;
    let log_d = (cfg.d as f64).ln();
    let mut scaled_error = Vec::with_capacity(curve.rows.len());
    let mut theorem_ratio = Vec::with_capacity(curve.rows.len());
    for row in &curve.rows {
        let scale = cfg.s as f64 * log_d / row.n as f64;
        scaled_error.push(row.mean_risk / scale);
        let bound = 16.0 * cfg.l * cfg.l * norm * norm / (c0_hat * c0_hat) * scale;
        theorem_ratio.push(row.mean_risk / bound);
    }
    Ok(LassoExperimentResult { curve, fit, scaled_error, c0_hat, theorem_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_small_run() {
        let cfg = LassoExperiment {
            d: 16,
            s: 2,
            n_grid: vec![128, 256, 512, 1024],
            design: ErrorLaw::gaussian(1.0),
            noise: ErrorLaw::gaussian(1.0),
            l: 1.0,
            alpha: 0.5,
            reps: 20,
            seed: 3,
            compat_rows: 256,
            compat_budget: 8,
        };
        let r = lasso_experiment(&cfg).unwrap();
        assert!(r.fit.slope < -0.6 && r.fit.slope > -1.4, "{}", r.fit.slope);
        assert!(r.c0_hat > 0.0 && r.c0_hat.is_finite());
        assert!(r.theorem_ratio.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn noiseless_interpolation() {
        let cfg = LassoExperiment {
            d: 8,
            s: 2,
            n_grid: vec![128, 256, 512, 1024],
            design: ErrorLaw::gaussian(1.0),
            noise: ErrorLaw::gaussian(1e-12),
            l: 1.0,
            alpha: 0.5,
            reps: 5,
            seed: 4,
            compat_rows: 64,
            compat_budget: 4,
        };
        let r = lasso_experiment(&cfg).unwrap();
        assert!(r.curve.rows.iter().all(|row| row.mean_risk < 1e-18), "{:?}", r.curve);
    }
}
