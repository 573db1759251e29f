use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rng::replication_rng;
use crate::stats::McEstimate;

/// Constant-free shape `(k log^3 d (M4 ∨ log^2 d))^{1/4} + (k log d)^{1/2}`
/// bounding `E max_j |sum_{i<=k} eps_i X_ij|`.
pub fn gaussian_approx_bound(k: usize, d: usize, m4: f64) -> Result<f64> {
    if d < 2 {
        return invalid(format!("need d >= 2 so that log d > 0, got {d}"));
    }
    if k < 1 {
        return invalid("need k >= 1");
    }
    if !(m4 >= 0.0) {
        return invalid(format!("M4 must be non-negative, got {m4}"));
    }
    let kf = k as f64;
    let ld = (d as f64).ln();
    Ok((kf * ld.powi(3) * m4.max(ld * ld)).powf(0.25) + (kf * ld).sqrt())
}

/// Monte Carlo `E max_j |sum_{i<=k} eps_i X_ij|` for Rademacher `eps` and
/// i.i.d. uniform `[-1, 1]` entries (so `M4 <= 1`).
pub fn rademacher_column_max_mc(k: usize, d: usize, reps: usize, seed: u64) -> Result<McEstimate> {
    if k == 0 || d == 0 || reps == 0 {
        return invalid("k, d and reps must be positive");
    }
    let vals: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, k, r);
            let mut col = vec![0.0f64; d];
            for _ in 0..k {
                let e = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                for c in col.iter_mut() {
                    *c += e * rng.random_range(-1.0..=1.0);
                }
            }
            col.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .collect();
    Ok(McEstimate::from_values(&vals))
}
