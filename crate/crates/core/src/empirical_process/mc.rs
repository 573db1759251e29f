use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise_models::ErrorLaw;
use crate::rng::{derive_seed, replication_rng, StreamRng};
use crate::stats::McEstimate;

use super::design::{DesignSample, IntervalConstraint};
use super::majorant::{least_concave_majorant, ConcaveMajorant};
use super::sup::sup_interval_sum;

/// Sorted uniform design of size `n`.
pub(crate) fn uniform_design(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite uniforms"));
    x
}

fn rademacher(rng: &mut StreamRng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
}

/// Monte Carlo estimate of `E sup_I |sum_{i<=n} w_i 1[X_i in I]|` with
/// `X_i` uniform on `[0, 1]` and weights filled by `weights`.
///
/// Replication `r` draws from its own stream keyed by `(seed, n, r)`, so the
/// estimate is identical for every thread count.
pub fn sup_mc_with<W>(n: usize, c: &IntervalConstraint<f64>, reps: usize, seed: u64, weights: W) -> Result<McEstimate>
where
    W: Fn(&mut StreamRng, &mut [f64]) + Sync,
{
    if n == 0 || reps == 0 {
        return invalid("Monte Carlo suprema need n, reps >= 1");
    }
    c.validate()?;
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, n, r);
            let x = uniform_design(&mut rng, n);
            let mut w = vec![0.0; n];
            weights(&mut rng, &mut w);
            let sample = DesignSample::new(x, w).expect("uniform design is valid");
            sup_interval_sum(&sample, c).expect("validated constraint").value
        })
        .collect();
    Ok(McEstimate::from_values(&values))
}

/// Symmetrized process: Rademacher weights.
pub fn rademacher_sup_mc(n: usize, c: &IntervalConstraint<f64>, reps: usize, seed: u64) -> Result<McEstimate> {
    sup_mc_with(n, c, reps, seed, rademacher)
}

/// Multiplier process: weights drawn i.i.d. from `law`, independent of the design.
pub fn multiplier_sup_mc(
    law: &ErrorLaw,
    n: usize,
    c: &IntervalConstraint<f64>,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    law.validate()?;
    sup_mc_with(n, c, reps, seed, |rng, w| law.fill(rng, w))
}

/// Rademacher suprema for every sample size `1..=k_max`; entry `k - 1`
/// holds size `k`.
pub fn rademacher_sup_table(
    k_max: usize,
    c: &IntervalConstraint<f64>,
    reps: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    (1..=k_max).map(|k| rademacher_sup_mc(k, c, reps, seed)).collect()
}

/// Least concave majorant of `(k, mean_k + inflate * stderr_k)` over a
/// table from [`rademacher_sup_table`].
pub fn empirical_majorant(table: &[McEstimate], inflate: f64) -> Result<ConcaveMajorant<f64>> {
    let pts: Vec<(f64, f64)> =
        table.iter().enumerate().map(|(idx, e)| ((idx + 1) as f64, e.mean + inflate * e.stderr)).collect();
    least_concave_majorant(&pts)
}

/// Both sides of the reversed-order-statistics comparison
/// `E||sum xi_i f(X_i)|| <= E[sum_k (|eta_(k)| - |eta_(k+1)|) E||sum_{i<=k} eps_i f(X_i)||]`,
/// `eta = 2 xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderStatCheck {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
}

impl OrderStatCheck {
    /// `lhs <= rhs + z * sqrt(se_lhs^2 + se_rhs^2)`.
    pub fn holds_within(&self, z: f64) -> bool {
        let se = (self.lhs.stderr.powi(2) + self.rhs.stderr.powi(2)).sqrt();
        self.lhs.mean <= self.rhs.mean + z * se
    }
}

/// Order-statistics diagnostic with multipliers from `draw`.
pub fn check_order_statistics_bound_with<D>(
    n: usize,
    c: &IntervalConstraint<f64>,
    reps: usize,
    seed: u64,
    draw: D,
) -> Result<OrderStatCheck>
where
    D: Fn(&mut StreamRng, &mut [f64]) + Sync,
{
    if n == 0 || reps < 2 {
        return invalid("order statistics check needs n >= 1 and reps >= 2");
    }
    let table = rademacher_sup_table(n, c, reps, derive_seed(seed, &[1]))?;
    let lhs = sup_mc_with(n, c, reps, derive_seed(seed, &[2]), &draw)?;

    let rhs_seed = derive_seed(seed, &[3]);
    let draws: Vec<(f64, Vec<f64>)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(rhs_seed, n, r);
            let mut xi = vec![0.0; n];
            draw(&mut rng, &mut xi);
            let mut eta: Vec<f64> = xi.iter().map(|v| 2.0 * v.abs()).collect();
            eta.sort_by(|a, b| b.partial_cmp(a).expect("finite multipliers"));
            let gaps: Vec<f64> = (0..n).map(|k| eta[k] - if k + 1 < n { eta[k + 1] } else { 0.0 }).collect();
            let value = gaps.iter().zip(&table).map(|(g, e)| g * e.mean).sum();
            (value, gaps)
        })
        .collect();
    let values: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut rhs = McEstimate::from_values(&values);
    // The tabulated inner expectations carry their own error; count it as
    // fully correlated across k.
    let table_err: f64 = (0..n)
        .map(|k| {
            let mean_gap = draws.iter().map(|d| d.1[k]).sum::<f64>() / reps as f64;
            mean_gap * table[k].stderr
        })
        .sum();
    rhs.stderr = (rhs.stderr.powi(2) + table_err.powi(2)).sqrt();
    Ok(OrderStatCheck { lhs, rhs })
}

/// Order-statistics diagnostic for i.i.d. multipliers from `law`.
pub fn check_order_statistics_bound(
    law: &ErrorLaw,
    n: usize,
    c: &IntervalConstraint<f64>,
    reps: usize,
    seed: u64,
) -> Result<OrderStatCheck> {
    law.validate()?;
    check_order_statistics_bound_with(n, c, reps, seed, |rng, w| law.fill(rng, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ols_line;

    #[test]
    fn single_point_rademacher_sup_is_one() {
        let e = rademacher_sup_mc(1, &IntervalConstraint::unconstrained(), 50, 4).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn constant_weights_give_n() {
        let e = sup_mc_with(5, &IntervalConstraint::unconstrained(), 10, 1, |_, w| w.fill(1.0)).unwrap();
        assert_eq!(e.mean, 5.0);
    }

    #[test]
    fn localized_rademacher_is_seed_stable() {
        let n = 256;
        let c = IntervalConstraint::at_most((n as f64).powf(-2.0 / 3.0)).unwrap();
        let a = rademacher_sup_mc(n, &c, 400, 1).unwrap();
        let b = rademacher_sup_mc(n, &c, 400, 2).unwrap();
        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() <= 3.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn unconstrained_rademacher_growth_is_square_root() {
        let c = IntervalConstraint::unconstrained();
        let (mut lx, mut ly) = (vec![], vec![]);
        for e in 6..=13 {
            let n = 1usize << e;
            let est = rademacher_sup_mc(n, &c, 200, 17).unwrap();
            lx.push((n as f64).ln());
            ly.push(est.mean.ln());
        }
        let fit = ols_line(&lx, &ly);
        assert!((0.40..=0.60).contains(&fit.slope), "slope {}", fit.slope);
    }

    #[test]
    fn constant_multipliers_collapse_the_order_statistics() {
        let c = IntervalConstraint::unconstrained();
        let n = 16;
        let chk = check_order_statistics_bound_with(n, &c, 200, 5, |_, w| w.fill(1.0)).unwrap();
        assert_eq!(chk.lhs.mean, n as f64);
        let table = rademacher_sup_table(n, &c, 200, derive_seed(5, &[1])).unwrap();
        assert!((chk.rhs.mean - 2.0 * table[n - 1].mean).abs() < 1e-12);
        // Constant multipliers are not mean zero and indicators are not
        // centered, so the comparison itself need not hold here.
        assert!(chk.lhs.mean > chk.rhs.mean);
    }

    #[test]
    fn pareto_multipliers_satisfy_the_order_statistics_bound() {
        let c = IntervalConstraint::unconstrained();
        let chk = check_order_statistics_bound(&ErrorLaw::pareto(3.0), 32, &c, 2000, 9).unwrap();
        assert!(chk.holds_within(3.0), "{chk:?}");
    }

    #[test]
    fn one_sample_sides_match_mean_abs() {
        let law = ErrorLaw::pareto(3.0);
        let chk = check_order_statistics_bound(&law, 1, &IntervalConstraint::unconstrained(), 4000, 2).unwrap();
        let m = law.mean_abs().unwrap();
        // sup over intervals of |xi f(X)| = |xi|; the right side is 2 E|xi| * 1.
        assert!((chk.lhs.mean - m).abs() <= 3.0 * chk.lhs.stderr, "{chk:?} {m}");
        assert!((chk.rhs.mean - 2.0 * m).abs() <= 3.0 * chk.rhs.stderr, "{chk:?} {m}");
    }
}
