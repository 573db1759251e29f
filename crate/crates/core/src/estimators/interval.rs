use crate::empirical_process::Windows;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::data::RegressionData;
use super::piecewise::PiecewiseConstant;

/// Least-squares fit over `{c 1[a, b] : |c| <= 1, b - a >= min_len} ∪ {0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFit<T> {
    pub function: PiecewiseConstant<T>,
    pub rss: T,
    pub level: T,
    /// Captured sorted-index window, inclusive.
    pub window: Option<(usize, usize)>,
    pub interval: Option<(T, T)>,
}

/// Exact least squares over bounded interval indicators of length at
/// least `min_len`, by an `O(n^2)` scan over captured windows.
///
/// For a window with sum `s` over `m` points the best level is
/// `clamp(s / m, -1, 1)` and the RSS drops by `s^2 / m` (unclamped) or
/// `2|s| - m` (clamped). The first window in `(start, end)` order that
/// attains the largest drop wins; the zero function is kept unless some
/// window strictly improves on it. The returned interval is the shortest
/// admissible one capturing exactly that window.
pub fn fit_interval_lse<T: Scalar>(data: &RegressionData<T>, min_len: T) -> Result<IntervalFit<T>> {
    if data.is_empty() {
        return invalid("fit_interval_lse needs nonempty data");
    }
    if !(min_len >= T::zero()) {
        return invalid(format!("min_len must be non-negative, got {min_len}"));
    }
    let y = data.y();
    let total: T = y.iter().fold(T::zero(), |a, &v| a + v * v);
    let zero_fit =
        |rss| IntervalFit { function: PiecewiseConstant::zero(), rss, level: T::zero(), window: None, interval: None };
    if min_len > T::one() {
        return Ok(zero_fit(total));
    }
    let x = data.x();
    let n = x.len();
    let win = Windows::new(x);
    let (prefix, _) = data.prefix_sums();
    let ends: Vec<bool> = (0..n).map(|j| win.valid_end(j)).collect();

    let mut best_gain = T::zero();
    let mut best: Option<(usize, usize)> = None;
    let mut first_end = 0usize;
    for i in 0..n {
        if !win.valid_start(i) {
            continue;
        }
        first_end = first_end.max(i);
        while first_end < n && !win.gap_ok(i, first_end, min_len) {
            first_end += 1;
        }
        let base = prefix[i];
        for j in first_end..n {
            if !ends[j] {
                continue;
            }
            let s = (prefix[j + 1] - base).abs();
            let m = T::from_usize_lossy(j + 1 - i);
            let better = if s <= m { s * s > best_gain * m } else { s + s - m > best_gain };
            if better {
                best_gain = if s <= m { s * s / m } else { s + s - m };
                best = Some((i, j));
            }
        }
    }

    let Some((i, j)) = best else {
        return Ok(zero_fit(total));
    };
    let m = T::from_usize_lossy(j + 1 - i);
    let s = prefix[j + 1] - prefix[i];
    let level = (s / m).clamp_abs(T::one());
    let rss = (total - (level + level) * s + level * level * m).max(T::zero());
    let (a, b) = win.realize(i, j, min_len);
    Ok(IntervalFit {
        function: PiecewiseConstant::indicator(a, b, level, T::one())?,
        rss,
        level,
        window: Some((i, j)),
        interval: Some((a, b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Every closed interval capturing a contiguous block, with an
    /// independent length test: the widest interval capturing exactly
    /// `i..=j` has length `right - left` and must reach `min_len`.
    fn brute(x: &[f64], y: &[f64], min_len: f64) -> f64 {
        let n = x.len();
        let mut best: f64 = y.iter().map(|v| v * v).sum();
        for i in 0..n {
            for j in i..n {
                if i > 0 && x[i - 1] == x[i] || j + 1 < n && x[j] == x[j + 1] {
                    continue;
                }
                let left = if i == 0 { 0.0 } else { x[i - 1] };
                let right = if j + 1 == n { 1.0 } else { x[j + 1] };
                let open = i > 0 || j + 1 < n;
                let fits = if open { right - left > min_len } else { right - left >= min_len };
                if !fits {
                    continue;
                }
                let mean = y[i..=j].iter().sum::<f64>() / (j + 1 - i) as f64;
                let c = mean.clamp(-1.0, 1.0);
                let rss: f64 =
                    (0..n).map(|k| if (i..=j).contains(&k) { (y[k] - c).powi(2) } else { y[k] * y[k] }).sum();
                best = best.min(rss);
            }
        }
        best
    }

    fn rss_of(d: &RegressionData<f64>, f: &PiecewiseConstant<f64>, fit: &IntervalFit<f64>) -> f64 {
        // Evaluate through the captured window: interval endpoints may sit
        // on a design point when min_len is binding.
        let (i, j) = fit.window.unwrap_or((1, 0));
        d.y()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let inside = i <= k && k <= j;
                let fx = if inside { fit.level } else { 0.0 };
                if fit.window.is_some() && !inside {
                    assert_eq!(f.eval(d.x()[k]), 0.0, "interval captures an extra point");
                }
                (v - fx).powi(2)
            })
            .sum()
    }

    #[test]
    fn zero_response() {
        let d = RegressionData::<f64>::new(vec![0.1, 0.4, 0.8], vec![0.0; 3]).unwrap();
        let fit = fit_interval_lse(&d, 0.0).unwrap();
        assert_eq!(fit.function, PiecewiseConstant::zero());
        assert_eq!(fit.rss, 0.0);
        assert_eq!(fit.window, None);
    }

    #[test]
    fn single_outlier_is_clamped_singleton() {
        let x: Vec<f64> = (0..10).map(|k| (k as f64 + 0.5) / 10.0).collect();
        let mut y = vec![0.0; 10];
        y[6] = 10.0;
        let d = RegressionData::<f64>::new(x.clone(), y).unwrap();
        let fit = fit_interval_lse(&d, 0.0).unwrap();
        assert_eq!(fit.window, Some((6, 6)));
        assert_eq!(fit.level, 1.0);
        assert_eq!(fit.interval, Some((x[6], x[6])));
        assert_eq!(fit.rss, 81.0);
    }

    #[test]
    fn min_len_above_one_gives_zero() {
        let d = RegressionData::<f64>::new(vec![0.5], vec![0.7]).unwrap();
        let fit = fit_interval_lse(&d, 1.5).unwrap();
        assert_eq!(fit.function, PiecewiseConstant::zero());
        assert!((fit.rss - 0.49).abs() < 1e-15);
        assert!(fit_interval_lse(&d, -0.1).is_err());
    }

    #[test]
    fn matches_exhaustive_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..600 {
            let n = rng.random_range(1..=12);
            let x: Vec<f64> = if trial % 3 == 0 {
                (0..n).map(|_| rng.random_range(0..5) as f64 / 4.0).collect()
            } else {
                (0..n).map(|_| rng.random::<f64>()).collect()
            };
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let min_len = [0.0, 0.1, 0.3, 0.6, 1.0][trial % 5];
            let d = RegressionData::<f64>::new(x.clone(), y).unwrap();
            let fit = fit_interval_lse(&d, min_len).unwrap();
            let oracle = brute(d.x(), d.y(), min_len);
            assert!((fit.rss - oracle).abs() < 1e-9, "trial {trial}: {} vs {oracle}", fit.rss);
            assert!((rss_of(&d, &fit.function, &fit) - fit.rss).abs() < 1e-9);
            if let Some((a, b)) = fit.interval {
                assert!(b - a >= min_len - 1e-12 && 0.0 <= a && b <= 1.0);
                let (i, j) = fit.window.unwrap();
                assert!(a <= d.x()[i] && d.x()[j] <= b);
            }
        }
    }

    #[test]
    fn scan_order_first_on_ties() {
        // Two identical bumps: the earlier one is returned.
        let x = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let y = vec![0.0, 0.5, 0.0, 0.0, 0.5, 0.0];
        let d = RegressionData::<f64>::new(x, y).unwrap();
        let fit = fit_interval_lse(&d, 0.0).unwrap();
        assert_eq!(fit.window, Some((1, 1)));
    }

    #[test]
    fn works_in_f32() {
        let d = RegressionData::new(vec![0.2f32, 0.4, 0.6], vec![0.0, 0.5, 0.5]).unwrap();
        let fit = fit_interval_lse(&d, 0.0f32).unwrap();
        assert_eq!(fit.window, Some((1, 2)));
        assert!((fit.level - 0.5).abs() < 1e-7);
    }
}
