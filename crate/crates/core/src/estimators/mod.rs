//! Exact least-squares and least-absolute-deviation fits over bounded
//! step-function classes, plus the Lasso.

mod compat;
mod data;
mod gaussian_approx;
mod interval;
pub(crate) mod isotonic;
mod lasso;
mod linear;
mod piecewise;
mod segmented;

pub use compat::estimate_compatibility;
pub use data::{FitRecord, RegressionData};
pub use gaussian_approx::{gaussian_approx_bound, rademacher_column_max_mc};
pub use interval::{fit_interval_lse, IntervalFit};
pub use isotonic::{fit_isotonic, IsotonicFit};
pub use lasso::{fit_lasso_cd, kkt_check, kkt_violation, lasso_lambda_rule, LassoFit, LassoProblem};
pub use linear::fit_linear_1d;
pub use piecewise::{l2_risk, PiecewiseConstant};
pub use segmented::{fit_segmented_lad, fit_segmented_lse, SegmentFit};
