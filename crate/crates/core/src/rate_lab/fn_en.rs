use serde::{Deserialize, Serialize};

use crate::empirical_process::Windows;
use crate::error::{invalid, Result};
use crate::estimators::RegressionData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnEnRow {
    pub delta: f64,
    pub e_n: f64,
    pub f_n: f64,
}

/// Captured window summary: multiplier sum, count, and the range of
/// admissible interval lengths (the upper end may be a supremum).
#[derive(Debug, Clone, Copy)]
struct Piece {
    s: f64,
    m: f64,
    len_min: f64,
    len_max: f64,
}

/// Localized profile of the interval class `{c 1_I : |c| <= 1, |I| >= min_len}`
/// around `f0 = 0` under the uniform design, with `xi = y`:
/// `E_n(delta) = sup_{P f^2 <= delta^2} (P_n - P)(2 xi f - f^2)` and
/// `F_n(delta) = E_n(delta) - delta^2`.
///
/// For `f = c 1_I` capturing a window with sum `s` over `m` points the
/// objective is `2 c s / n - c^2 m / n + c^2 |I|`; for fixed `|c|` the
/// interval is stretched as far as `c^2 |I| <= delta^2` and the window
/// room allow, leaving a one-dimensional piecewise quadratic in `|c|`
/// whose maximum is found among its stationary points and breakpoints.
/// Intervals capturing no point contribute `min(gap, delta^2)`.
pub fn fn_en_profile(data: &RegressionData<f64>, deltas: &[f64], min_len: f64) -> Result<Vec<FnEnRow>> {
    if data.is_empty() {
        return invalid("fn_en_profile needs nonempty data");
    }
    if !(min_len >= 0.0) {
        return invalid(format!("min_len must be non-negative, got {min_len}"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
        return invalid(format!("deltas must be finite and non-negative, got {d}"));
    }
    let x = data.x();
    let y = data.y();
    let n = x.len();
    let nf = n as f64;
    let win = Windows::new(x);

    let mut pieces = Vec::new();
    if min_len <= 1.0 {
        let mut prefix = vec![0.0; n + 1];
        for k in 0..n {
            prefix[k + 1] = prefix[k] + y[k];
        }
        for i in (0..n).filter(|&i| win.valid_start(i)) {
            for j in (i..n).filter(|&j| win.valid_end(j)) {
                if !win.gap_ok(i, j, min_len) {
                    continue;
                }
                pieces.push(Piece {
                    s: (prefix[j + 1] - prefix[i]).abs(),
                    m: (j + 1 - i) as f64,
                    len_min: win.shortest(i, j, min_len),
                    len_max: win.room(i, j),
                });
            }
        }
    }
    // Widest open gap free of design points.
    let mut gap: f64 = x[0].max(1.0 - x[n - 1]);
    for k in 1..n {
        gap = gap.max(x[k] - x[k - 1]);
    }
    let empty_ok = gap > min_len;

    Ok(deltas
        .iter()
        .map(|&delta| {
            let d2 = delta * delta;
            let mut best = 0.0f64;
            if empty_ok {
                best = best.max(gap.min(d2));
            }
            for p in &pieces {
                best = best.max(piece_sup(p, nf, d2));
            }
            FnEnRow { delta, e_n: best, f_n: best - d2 }
        })
        .collect())
}

fn piece_sup(p: &Piece, n: f64, d2: f64) -> f64 {
    let a_max = if p.len_min > 0.0 { (d2 / p.len_min).sqrt().min(1.0) } else { 1.0 };
    let h = |a: f64| 2.0 * a * p.s / n - a * a * p.m / n + (a * a * p.len_max).min(d2);
    let a_b = if p.len_max > 0.0 { (d2 / p.len_max).sqrt().min(a_max) } else { a_max };
    let mut best = h(0.0).max(h(a_max)).max(h(a_b));
    if a_b < a_max {
        best = best.max(h((p.s / p.m).clamp(a_b, a_max)));
    }
    let curv = p.m - n * p.len_max;
    if curv > 0.0 {
        best = best.max(h((p.s / curv).clamp(0.0, a_b)));
    }
    best
}

/// First grid point whose `F_n` is within a relative `1e-12` of the maximum.
pub fn profile_argmax(rows: &[FnEnRow]) -> Option<FnEnRow> {
    let max = rows.iter().map(|r| r.f_n).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * max.abs().max(1.0);
    rows.iter().find(|r| r.f_n >= max - tol).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_interval_lse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_data(rng: &mut ChaCha8Rng, n: usize, heavy: bool) -> RegressionData<f64> {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                if heavy {
                    z / rng.random::<f64>().max(1e-3)
                } else {
                    z
                }
            })
            .collect();
        RegressionData::new(x, y).unwrap()
    }

    fn grid(m: usize) -> Vec<f64> {
        (0..=m).map(|k| k as f64 / m as f64).collect()
    }

    #[test]
    fn zero_noise_structure() {
        let d = RegressionData::new(vec![0.1, 0.35, 0.4, 0.8], vec![0.0; 4]).unwrap();
        let rows = fn_en_profile(&d, &grid(100), 0.0).unwrap();
        for r in &rows {
            assert!(r.f_n <= 1e-15 && r.e_n >= 0.0);
            assert!((r.e_n - r.delta * r.delta - r.f_n).abs() < 1e-15);
        }
        assert!(rows[0].f_n >= 0.0);
    }

    /// The LSE maximizes `M(f) = P_n(2 xi f - f^2) = (sum y^2 - rss) / n`,
    /// and `F_n(delta) <= max M` with equality at `delta = ||f_hat||`.
    #[test]
    fn profile_peaks_at_the_lse() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..40 {
            let n = rng.random_range(5..60);
            let d = random_data(&mut rng, n, trial % 2 == 0);
            let min_len = [0.0, 0.05, 0.2][trial % 3];
            let fit = fit_interval_lse(&d, min_len).unwrap();
            let total: f64 = d.y().iter().map(|v| v * v).sum();
            let m_hat = (total - fit.rss) / n as f64;
            let norm = fit.function.l2_distance(&crate::estimators::PiecewiseConstant::zero());
            let mut deltas = grid(200);
            deltas.push(norm);
            let rows = fn_en_profile(&d, &deltas, min_len).unwrap();
            let tol = 1e-10 * m_hat.abs().max(1.0);
            for r in &rows {
                assert!(r.f_n <= m_hat + tol, "trial {trial}: F_n({}) = {} > {m_hat}", r.delta, r.f_n);
            }
            let at = rows.last().unwrap();
            assert!((at.f_n - m_hat).abs() <= tol, "trial {trial}: {} vs {m_hat}", at.f_n);
        }
    }

    #[test]
    fn grid_argmax_tracks_lse_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let deltas = grid(500);
        for trial in 0..30 {
            let n = rng.random_range(5..200);
            let d = random_data(&mut rng, n, trial % 3 == 0);
            let min_len = [0.0, 0.02, 0.1][trial % 3];
            let fit = fit_interval_lse(&d, min_len).unwrap();
            let norm = fit.function.l2_distance(&crate::estimators::PiecewiseConstant::zero());
            let rows = fn_en_profile(&d, &deltas, min_len).unwrap();
            let arg = profile_argmax(&rows).unwrap();
            assert!((arg.delta - norm).abs() <= 1.0 / 500.0 + 1e-12, "trial {trial}: {} vs {norm}", arg.delta);
        }
    }

    #[test]
    fn lower_envelope_implication() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let d = random_data(&mut rng, 40, false);
            let rows = fn_en_profile(&d, &grid(100), 0.0).unwrap();
            let arg = profile_argmax(&rows).unwrap();
            for (a, r1) in rows.iter().enumerate() {
                for r2 in &rows[a + 1..] {
                    if r1.e_n < r2.f_n {
                        assert!(arg.delta >= r1.delta);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let d = RegressionData::new(vec![0.5], vec![1.0]).unwrap();
        assert!(fn_en_profile(&d, &[-0.1], 0.0).is_err());
        assert!(fn_en_profile(&d, &[0.1], -1.0).is_err());
        assert_eq!(fn_en_profile(&d, &[], 0.0).unwrap(), vec![]);
    }
}
