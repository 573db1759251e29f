//! Suprema of (multiplier) empirical processes indexed by interval
//! indicators, the concave-majorant multiplier bound, and diagnostics.

mod bound;
mod design;
mod majorant;
mod mc;
mod monotone;
mod pz;
mod sup;

pub use bound::{multiplier_bound, Envelope, PowerEnvelope};
pub(crate) use design::Windows;
pub use design::{DesignSample, IntervalConstraint};
pub use majorant::{least_concave_majorant, ConcaveMajorant};
pub(crate) use mc::uniform_design;
pub use mc::{
    check_order_statistics_bound, check_order_statistics_bound_with, empirical_majorant, multiplier_sup_mc,
    rademacher_sup_mc, rademacher_sup_table, sup_mc_with, OrderStatCheck,
};
pub use monotone::{monotone_localized_sup, monotone_sup_mc};
pub use pz::pz_lower_bound;
pub use sup::{sup_interval_sum, IntervalSup};
