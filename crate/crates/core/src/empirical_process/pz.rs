use crate::error::{invalid, Result};

/// Paley–Zygmund lower bound on `P(Z > eps * E Z)` for `Z >= 0`:
/// `((1 - eps) E Z / (E Z^q)^(1/q))^(q')` with `1/q + 1/q' = 1`, clipped
/// to `[0, 1]`.
pub fn pz_lower_bound(mean: f64, q_moment: f64, q: f64, eps: f64) -> Result<f64> {
    if !(mean >= 0.0) {
        return invalid(format!("mean must be >= 0, got {mean}"));
    }
    if !(q > 1.0) {
        return invalid(format!("q must exceed 1, got {q}"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    let jensen = mean.powf(q);
    if q_moment < jensen * (1.0 - 1e-12) {
        return invalid(format!("E Z^q = {q_moment} violates Jensen (E Z)^q = {jensen}"));
    }
    if mean == 0.0 {
        return Ok(0.0);
    }
    let conj = q / (q - 1.0);
    let ratio = (1.0 - eps) * mean / q_moment.powf(1.0 / q);
    Ok(ratio.powf(conj).clamp(0.0, 1.0))
}
