use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical_process::uniform_design;
use crate::error::{invalid, Result};
use crate::estimators::{
    fit_interval_lse, fit_isotonic, fit_lasso_cd, fit_linear_1d, fit_segmented_lad, fit_segmented_lse, l2_risk,
    lasso_lambda_rule, LassoProblem, PiecewiseConstant, RegressionData,
};
use crate::noise_models::ErrorLaw;
use crate::rng::{replication_rng, StreamRng};
use crate::stats::McEstimate;

fn one() -> f64 {
    1.0
}

fn lasso_tol() -> f64 {
    1e-8
}

fn lasso_max_iter() -> usize {
    10_000
}

/// Minimum interval length as a function of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthRule {
    Fixed {
        value: f64,
    },
    /// `n^(-exponent)`; `exponent = 2 e` gives `delta_n^2` with `delta_n = n^(-e)`.
    Power {
        exponent: f64,
    },
}

impl LengthRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            LengthRule::Fixed { value } => value,
            LengthRule::Power { exponent } => (n as f64).powf(-exponent),
        }
    }
}

/// Number of segments as a function of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum CountRule {
    Fixed {
        value: usize,
    },
    /// `ceil(coef n^exponent)`, at least 1 and at most `n`.
    Power {
        coef: f64,
        exponent: f64,
    },
}

impl CountRule {
    pub fn at(&self, n: usize) -> usize {
        let k = match *self {
            CountRule::Fixed { value } => value,
            CountRule::Power { coef, exponent } => (coef * (n as f64).powf(exponent)).ceil() as usize,
        };
        k.clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorClass {
    IntervalLse {
        min_len: LengthRule,
    },
    SegmentedLse {
        k: CountRule,
        #[serde(default = "one")]
        level_bound: f64,
    },
    Isotonic {
        #[serde(default = "one")]
        level_bound: f64,
    },
    LadSegmented {
        k: CountRule,
        #[serde(default = "one")]
        level_bound: f64,
    },
    /// Slope through the origin for `y = alpha0 x + xi`; risk `|alpha_hat - alpha0|`.
    Linear1d {
        #[serde(default = "one")]
        alpha0: f64,
    },
    /// Rows i.i.d. from `design`, `s` entries of alternating sign `+-1`
    /// in the first coordinates, tuning from the `L_{1/alpha,1}` rule.
    /// Risk is the in-sample prediction error `(1/n) ||X (theta_hat - theta0)||^2`.
    Lasso {
        d: usize,
        s: usize,
        design: ErrorLaw,
        #[serde(rename = "L")]
        l: f64,
        alpha: f64,
        #[serde(default = "lasso_tol")]
        tol: f64,
        #[serde(default = "lasso_max_iter")]
        max_iter: usize,
    },
}

/// Regression function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Truth {
    Zero,
    Step {
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
    },
    /// `steps` equal-width steps rising from near `-1` to near `1`.
    Staircase {
        steps: usize,
    },
}

impl Truth {
    pub fn function(&self) -> Result<PiecewiseConstant<f64>> {
        match self {
            Truth::Zero => Ok(PiecewiseConstant::zero()),
            Truth::Step { breakpoints, levels } => PiecewiseConstant::new(breakpoints.clone(), levels.clone(), 1.0),
            Truth::Staircase { steps } => {
                if *steps == 0 {
                    return invalid("staircase needs at least one step");
                }
                let k = *steps as f64;
                let bp = (0..=*steps).map(|i| i as f64 / k).collect();
                let lv = (0..*steps).map(|i| -1.0 + (2 * i + 1) as f64 / k).collect();
                PiecewiseConstant::new(bp, lv, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub class: EstimatorClass,
    pub truth: Truth,
    pub noise: ErrorLaw,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.truth.function()?;
        if self.n_grid.len() < 4 {
            return invalid(format!("n_grid needs at least 4 sizes, got {}", self.n_grid.len()));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("n_grid must be positive and strictly increasing");
        }
        if self.reps == 0 {
            return invalid("reps must be positive");
        }
        match &self.class {
            EstimatorClass::IntervalLse { min_len } => {
                let v = min_len.at(self.n_grid[0]);
                if !(v >= 0.0) {
                    return invalid(format!("min_len rule gives {v}"));
                }
            }
            EstimatorClass::SegmentedLse { level_bound, .. }
            | EstimatorClass::Isotonic { level_bound }
            | EstimatorClass::LadSegmented { level_bound, .. } => {
                if !(*level_bound > 0.0) {
                    return invalid("level_bound must be positive");
                }
            }
            EstimatorClass::Linear1d { alpha0 } => {
                if !alpha0.is_finite() {
                    return invalid("alpha0 must be finite");
                }
            }
            EstimatorClass::Lasso { d, s, design, l, alpha, tol, .. } => {
                design.validate()?;
                if *d == 0 || *s > *d {
                    return invalid(format!("need 0 <= s <= d and d >= 1, got s = {s}, d = {d}"));
                }
                if !(*tol > 0.0) {
                    return invalid("tol must be positive");
                }
                lasso_lambda_rule(&self.noise, *alpha, *l, self.n_grid[0], *d)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub n: usize,
    pub mean_risk: f64,
    pub stderr: f64,
    /// Replications that entered the mean.
    pub reps: usize,
    /// Replications dropped because the solver did not converge.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub rows: Vec<RiskRow>,
}

/// Monte Carlo risk at every `n` of the grid.
///
/// Replication `r` at size `n` uses its own stream keyed by
/// `(master_seed, n, r)`; results are collected in replication order, so
/// the curve does not depend on the number of worker threads.
pub fn run_risk_curve(spec: &ExperimentSpec) -> Result<RiskCurve> {
    spec.validate()?;
    let truth = spec.truth.function()?;
    let mut rows = Vec::with_capacity(spec.n_grid.len());
    for &n in &spec.n_grid {
        let risks: Vec<Result<Option<f64>>> = (0..spec.reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = replication_rng(spec.master_seed, n, r);
                replicate(spec, &truth, n, &mut rng)
            })
            .collect();
        let mut kept = Vec::with_capacity(spec.reps);
        let mut failures = 0;
        for r in risks {
            match r? {
                Some(v) => kept.push(v),
                None => failures += 1,
            }
        }
        let est = McEstimate::from_values(&kept);
        rows.push(RiskRow { n, mean_risk: est.mean, stderr: est.stderr, reps: kept.len(), failures });
    }
    Ok(RiskCurve { rows })
}

/// One replication; `None` flags a non-converged solver.
fn replicate(
    spec: &ExperimentSpec,
    truth: &PiecewiseConstant<f64>,
    n: usize,
    rng: &mut StreamRng,
) -> Result<Option<f64>> {
    if let EstimatorClass::Lasso { d, s, design, l, alpha, tol, max_iter } = &spec.class {
        return lasso_replicate(&spec.noise, n, *d, *s, design, *l, *alpha, *tol, *max_iter, rng);
    }
    let x = uniform_design(rng, n);
    let mut xi = vec![0.0; n];
    spec.noise.fill(rng, &mut xi);
    if let EstimatorClass::Linear1d { alpha0 } = spec.class {
        let y: Vec<f64> = x.iter().zip(&xi).map(|(a, e)| alpha0 * a + e).collect();
        return Ok(Some((fit_linear_1d(&x, &y)? - alpha0).abs()));
    }
    let y: Vec<f64> = x.iter().zip(&xi).map(|(&a, e)| truth.eval(a) + e).collect();
    let data = RegressionData::new(x, y)?;
    let fitted = match &spec.class {
        EstimatorClass::IntervalLse { min_len } => fit_interval_lse(&data, min_len.at(n))?.function,
        EstimatorClass::SegmentedLse { k, level_bound } => fit_segmented_lse(&data, k.at(n), *level_bound)?.function,
        EstimatorClass::Isotonic { level_bound } => fit_isotonic(&data, *level_bound)?.function,
        EstimatorClass::LadSegmented { k, level_bound } => fit_segmented_lad(&data, k.at(n), *level_bound)?.function,
        EstimatorClass::Linear1d { .. } | EstimatorClass::Lasso { .. } => unreachable!("handled above"),
    };
    Ok(Some(l2_risk(&fitted, truth)))
}

/// Sparse truth with `s` entries `+1, -1, +1, ...` in the first coordinates.
pub fn sparse_truth(d: usize, s: usize) -> Vec<f64> {
    (0..d)
        .map(|j| {
            if j >= s {
                0.0
            } else if j % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn lasso_replicate(
    noise: &ErrorLaw,
    n: usize,
    d: usize,
    s: usize,
    design: &ErrorLaw,
    l: f64,
    alpha: f64,
    tol: f64,
    max_iter: usize,
    rng: &mut StreamRng,
) -> Result<Option<f64>> {
    let mut flat = vec![0.0; n * d];
    design.fill(rng, &mut flat);
    let x = Array2::from_shape_vec((n, d), flat).expect("shape matches");
    let theta0 = Array1::from(sparse_truth(d, s));
    let mut xi = vec![0.0; n];
    noise.fill(rng, &mut xi);
    let signal = x.dot(&theta0);
    let y = &signal + &Array1::from(xi);
    let lambda = lasso_lambda_rule(noise, alpha, l, n, d)?;
    let problem = LassoProblem::new(x, y, lambda)?;
    let fit = fit_lasso_cd(&problem, tol, max_iter)?;
    if !fit.converged {
        return Ok(None);
    }
    let pred = problem.design().dot(&Array1::from(fit.theta));
    let diff = &pred - &signal;
    Ok(Some(diff.dot(&diff) / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(class: EstimatorClass, noise: ErrorLaw, seed: u64) -> ExperimentSpec {
        ExperimentSpec { class, truth: Truth::Zero, noise, n_grid: vec![16, 32, 64, 128], reps: 60, master_seed: seed }
    }

    #[test]
    fn noiseless_recovery() {
        let s = spec(
            EstimatorClass::SegmentedLse { k: CountRule::Fixed { value: 1 }, level_bound: 1.0 },
            ErrorLaw::gaussian(1e-12),
            3,
        );
        let c = run_risk_curve(&s).unwrap();
        assert!(c.rows.iter().all(|r| r.mean_risk < 1e-10));
    }

    #[test]
    fn seed_stability() {
        let mk = |seed| spec(EstimatorClass::Isotonic { level_bound: 1.0 }, ErrorLaw::gaussian(1.0), seed);
        let a = run_risk_curve(&mk(1)).unwrap();
        let b = run_risk_curve(&mk(2)).unwrap();
        assert_ne!(a, b);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            let se = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
            assert!((x.mean_risk - y.mean_risk).abs() <= 3.0 * se, "n = {}", x.n);
        }
    }

    #[test]
    fn interval_risk_decreases_with_heavy_noise() {
        let mut s = spec(
            EstimatorClass::IntervalLse { min_len: LengthRule::Power { exponent: 0.5 } },
            ErrorLaw::pareto(2.0),
            4,
        );
        s.n_grid = vec![32, 64, 128, 256, 512];
        s.reps = 200;
        let c = run_risk_curve(&s).unwrap();
        for w in c.rows.windows(2) {
            let slack = 3.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            assert!(w[1].mean_risk <= w[0].mean_risk + slack);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = spec(
            EstimatorClass::LadSegmented { k: CountRule::Fixed { value: 2 }, level_bound: 1.0 },
            ErrorLaw::student_t(3.0),
            5,
        );
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_risk_curve(&s).unwrap())
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn linear_and_lasso_classes() {
        let s = spec(EstimatorClass::Linear1d { alpha0: 2.0 }, ErrorLaw::gaussian(1.0), 6);
        let c = run_risk_curve(&s).unwrap();
        assert!(c.rows[3].mean_risk < c.rows[0].mean_risk);
        let mut s = spec(
            EstimatorClass::Lasso {
                d: 8,
                s: 2,
                design: ErrorLaw::gaussian(1.0),
                l: 1.0,
                alpha: 0.5,
                tol: 1e-8,
                max_iter: 10_000,
            },
            ErrorLaw::gaussian(1.0),
            7,
        );
        s.reps = 10;
        let c = run_risk_curve(&s).unwrap();
        assert!(c.rows.iter().all(|r| r.failures == 0 && r.mean_risk > 0.0));
    }

    #[test]
    fn validation() {
        let mut s = spec(EstimatorClass::Isotonic { level_bound: 1.0 }, ErrorLaw::gaussian(1.0), 1);
        s.n_grid = vec![16, 32, 32, 64];
        assert!(s.validate().is_err());
        s.n_grid = vec![16, 32, 64];
        assert!(s.validate().is_err());
        let s = spec(
            EstimatorClass::Lasso {
                d: 8,
                s: 2,
                design: ErrorLaw::gaussian(1.0),
                l: 1.0,
                alpha: 0.5,
                tol: 1e-8,
                max_iter: 10,
            },
            ErrorLaw::pareto(1.5),
            1,
        );
        assert!(s.validate().is_err());
    }

    #[test]
    fn staircase_truth() {
        let f = Truth::Staircase { steps: 4 }.function().unwrap();
        assert_eq!(f.levels(), &[-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(f.eval(0.3), -0.25);
    }

    #[test]
    fn rules() {
        assert_eq!(LengthRule::Power { exponent: 0.5 }.at(64), 0.125);
        assert_eq!(CountRule::Power { coef: 1.0, exponent: 1.0 / 3.0 }.at(1000), 10);
        assert_eq!(CountRule::Fixed { value: 50 }.at(8), 8);
    }
}
