//! Monte Carlo risk curves, log-log rate fits, phase-diagram checks, the
//! localized `F_n` profile and the dependent-error counterexample.

mod counterexample;
mod curve;
mod exponent;
mod fn_en;
mod lasso_exp;
mod phase;

pub use counterexample::{
    counterexample_dependent, pareto_type_one, slope_error, CounterexampleNoise, CounterexampleResult,
};
pub use curve::{
    run_risk_curve, sparse_truth, CountRule, EstimatorClass, ExperimentSpec, LengthRule, RiskCurve, RiskRow, Truth,
};
pub use exponent::{
    critical_p, default_burn_in, entropy_branch, fit_rate_exponent, noise_branch, regime, theoretical_exponent,
    RateFit, Regime, BURN_IN_MIN_N,
};
pub use fn_en::{fn_en_profile, profile_argmax, FnEnRow};
pub use lasso_exp::{lasso_experiment, LassoExperiment, LassoExperimentResult};
pub use phase::{phase_cell_spec, phase_diagram, PhaseCell, PhaseTemplate};
