use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::estimators::isotonic::pava;
use crate::rng::{replication_rng, StreamRng};
use crate::stats::McEstimate;

use super::mc::uniform_design;

const BISECTION_STEPS: usize = 80;

/// `sup |sum_i w_i (f - f0)(x_i)|` over non-decreasing `f` with `|f| <= 1`
/// and `(1/n) sum_i (f - f0)(x_i)^2 <= delta^2`, where `center` holds
/// `f0(x_i)` (non-decreasing, within `[-1, 1]`) in design order.
///
/// With a multiplier on the norm constraint the maximizer is the
/// projection of `f0 + t w` onto the monotone box, i.e. the clamped
/// isotonic regression; the distance of that projection from `f0` grows
/// with `t`, and `t` is bisected onto the active constraint.
pub fn monotone_localized_sup(w: &[f64], center: &[f64], delta: f64) -> Result<f64> {
    if w.is_empty() || w.len() != center.len() {
        return invalid("need equally long, nonempty weights and center");
    }
    if !(delta >= 0.0) {
        return invalid(format!("delta must be non-negative, got {delta}"));
    }
    if center.windows(2).any(|p| p[0] > p[1]) || center.iter().any(|c| !(c.abs() <= 1.0)) {
        return invalid("center must be non-decreasing with values in [-1, 1]");
    }
    let up = one_sided(w, center, delta);
    let neg: Vec<f64> = w.iter().map(|v| -v).collect();
    Ok(up.max(one_sided(&neg, center, delta)))
}

fn project(w: &[f64], center: &[f64], t: f64) -> Vec<f64> {
    let shifted: Vec<f64> = center.iter().zip(w).map(|(c, v)| c + t * v).collect();
    let mut f = pava(&shifted);
    f.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    f
}

fn dist2(f: &[f64], center: &[f64]) -> f64 {
    f.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn one_sided(w: &[f64], center: &[f64], delta: f64) -> f64 {
    let budget = w.len() as f64 * delta * delta;
    let value = |t: f64| -> f64 {
        let f = project(w, center, t);
        w.iter().zip(f.iter().zip(center)).map(|(v, (a, b))| v * (a - b)).sum()
    };
    let mut hi = 1.0;
    while dist2(&project(w, center, hi), center) <= budget {
        hi *= 2.0;
        if hi > 1e18 {
            return value(hi).max(0.0);
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if dist2(&project(w, center, mid), center) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    value(lo).max(0.0)
}

/// Monte Carlo mean of [`monotone_localized_sup`] on a sorted uniform
/// design, centered at `center(x)` with radius `delta`; the weights are
/// drawn after the design.
pub fn monotone_sup_mc<C, W>(n: usize, delta: f64, reps: usize, seed: u64, center: C, weights: W) -> Result<McEstimate>
where
    C: Fn(f64) -> f64 + Sync,
    W: Fn(&mut StreamRng, &mut [f64]) + Sync,
{
    if n == 0 || reps == 0 {
        return invalid("Monte Carlo suprema need n, reps >= 1");
    }
    let values: Vec<Result<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, n, r);
            let x = uniform_design(&mut rng, n);
            let mut w = vec![0.0; n];
            weights(&mut rng, &mut w);
            let c: Vec<f64> = x.iter().map(|&v| center(v)).collect();
            monotone_localized_sup(&w, &c, delta)
        })
        .collect();
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate::from_values(&values))
}
