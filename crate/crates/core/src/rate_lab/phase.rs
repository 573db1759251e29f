use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise_models::ErrorLaw;
use crate::rng::derive_seed;

use super::curve::{run_risk_curve, EstimatorClass, ExperimentSpec, LengthRule, Truth};
use super::exponent::{
    default_burn_in, fit_rate_exponent, noise_branch, regime, theoretical_exponent, RateFit, Regime,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTemplate {
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    /// Allowed gap between measured and predicted exponent.
    pub tolerance: f64,
    /// Pareto tail index is `p + margin`, keeping `||xi||_{p,1}` finite.
    pub margin: f64,
    /// Steps of the staircase truth used for the isotonic cells.
    pub staircase_steps: usize,
}

impl Default for PhaseTemplate {
    fn default() -> Self {
        PhaseTemplate {
            n_grid: (7..=12).map(|e| 1 << e).collect(),
            reps: 100,
            master_seed: 0,
            tolerance: 0.10,
            margin: 0.1,
            staircase_steps: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub alpha: f64,
    pub p: f64,
    pub class: Option<String>,
    pub regime: Option<Regime>,
    pub e_theory: Option<f64>,
    pub e_measured: Option<f64>,
    pub tolerance: f64,
    /// Only a lower bound on the exponent is predicted for this cell.
    pub one_sided: bool,
    pub pass: Option<bool>,
    pub skipped: Option<String>,
    pub fit: Option<RateFit>,
}

/// The experiment a cell maps to, or the reason it is skipped.
///
/// `alpha = 1` is the monotone class (isotonic LSE, staircase truth) and
/// `alpha = 0` stands for the interval class with minimum length
/// `delta_n^2`, `delta_n = n^-e` (zero truth). `p = inf` means Gaussian
/// noise, finite `p` a symmetric Pareto law with tail index `p + margin`.
///
/// Two-sided cells are those where a matching lower bound exists: the
/// interval class under heavy-tailed noise, and the isotonic class under
/// Gaussian noise. Elsewhere only the upper bound on the risk applies.
pub fn phase_cell_spec(
    alpha: f64,
    p: f64,
    t: &PhaseTemplate,
) -> std::result::Result<(ExperimentSpec, f64, bool, &'static str), String> {
    if !(p >= 1.0) {
        return Err(format!("p = {p} is below 1"));
    }
    let noise = if p.is_infinite() { ErrorLaw::gaussian(1.0) } else { ErrorLaw::pareto(p + t.margin) };
    let seed = derive_seed(t.master_seed, &[alpha.to_bits(), p.to_bits()]);
    let (class, truth, e, one_sided, name) = if alpha == 1.0 {
        let e = theoretical_exponent(1.0, p).map_err(|e| e.to_string())?;
        (
            EstimatorClass::Isotonic { level_bound: 1.0 },
            Truth::Staircase { steps: t.staircase_steps },
            e,
            !p.is_infinite(),
            "isotonic",
        )
    } else if alpha == 0.0 {
        let e = noise_branch(p).min(0.5);
        (
            EstimatorClass::IntervalLse { min_len: LengthRule::Power { exponent: 2.0 * e } },
            Truth::Zero,
            e,
            p.is_infinite(),
            "interval_lse",
        )
    } else {
        return Err(format!("no implemented class with entropy exponent {alpha}"));
    };
    let spec = ExperimentSpec { class, truth, noise, n_grid: t.n_grid.clone(), reps: t.reps, master_seed: seed };
    Ok((spec, e, one_sided, name))
}

/// Measured against predicted risk exponents over the `(alpha, p)` grid.
pub fn phase_diagram(alphas: &[f64], ps: &[f64], template: &PhaseTemplate) -> Result<Vec<PhaseCell>> {
    if !(template.tolerance >= 0.0) || !(template.margin > 0.0) {
        return invalid("tolerance must be non-negative and margin positive");
    }
    let mut cells = Vec::with_capacity(alphas.len() * ps.len());
    for &alpha in alphas {
        for &p in ps {
            let mut cell = PhaseCell {
                alpha,
                p,
                class: None,
                regime: regime(alpha, p).ok(),
                e_theory: None,
                e_measured: None,
                tolerance: template.tolerance,
                one_sided: false,
                pass: None,
                skipped: None,
                fit: None,
            };
            match phase_cell_spec(alpha, p, template) {
                Err(reason) => cell.skipped = Some(reason),
                Ok((spec, e, one_sided, name)) => {
                    let curve = run_risk_curve(&spec)?;
                    let fit = fit_rate_exponent(&curve, default_burn_in(&curve))?;
                    let measured = fit.exponent();
                    let pass = if one_sided {
                        measured >= e - template.tolerance
                    } else {
                        (measured - e).abs() <= template.tolerance
                    };
                    cell.class = Some(name.to_string());
                    cell.e_theory = Some(e);
                    cell.e_measured = Some(measured);
                    cell.one_sided = one_sided;
                    cell.pass = Some(pass);
                    cell.fit = Some(fit);
                }
            }
            cells.push(cell);
        }
    }
    Ok(cells)
}
