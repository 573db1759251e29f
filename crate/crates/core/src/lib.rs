//! Least-squares rates under heavy-tailed errors: noise laws and their
//! `L_{p,1}` norms, multiplier empirical processes over interval classes,
//! exact step-function estimators and the Lasso, and a Monte Carlo
//! harness for risk exponents.
//!
//! The exact algorithms are generic over [`Scalar`]; the aliases below fix
//! the common `f64` and `f32` instantiations.

// `!(x >= 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod empirical_process;
pub mod error;
pub mod estimators;
pub mod noise_models;
pub mod quadrature;
pub mod rate_lab;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use noise_models::{ErrorLaw, Lp1Value};
pub use scalar::Scalar;
pub use stats::McEstimate;

pub type PiecewiseConstantFn = estimators::PiecewiseConstant<f64>;
pub type PiecewiseConstantFnF32 = estimators::PiecewiseConstant<f32>;
pub type RegressionData = estimators::RegressionData<f64>;
pub type RegressionDataF32 = estimators::RegressionData<f32>;
pub type DesignSample = empirical_process::DesignSample<f64>;
pub type DesignSampleF32 = empirical_process::DesignSample<f32>;
pub type IntervalConstraint = empirical_process::IntervalConstraint<f64>;
pub type ConcaveMajorant = empirical_process::ConcaveMajorant<f64>;
pub type LassoProblem = estimators::LassoProblem<f64>;
