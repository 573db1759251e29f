use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::data::RegressionData;
use super::piecewise::PiecewiseConstant;

#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicFit<T> {
    pub function: PiecewiseConstant<T>,
    /// Fitted values in sorted-design order.
    pub fitted: Vec<T>,
    /// First sorted index of every pooled block.
    pub starts: Vec<usize>,
    pub rss: T,
}

/// Non-decreasing least squares with levels in `[-level_bound, level_bound]`:
/// pool adjacent violators, then clamp.
pub fn fit_isotonic<T: Scalar>(data: &RegressionData<T>, level_bound: T) -> Result<IsotonicFit<T>> {
    if data.is_empty() {
        return invalid("fit_isotonic needs nonempty data");
    }
    if !(level_bound > T::zero()) || !level_bound.is_finite() {
        return invalid(format!("level_bound must be finite and positive, got {level_bound}"));
    }
    let x = data.x();
    let y = data.y();
    let n = y.len();
    let blocks = pava_blocks(y, |j| x[j] == x[j - 1]);

    let mut starts = Vec::with_capacity(blocks.len());
    let mut levels: Vec<T> = Vec::with_capacity(blocks.len());
    let mut fitted = Vec::with_capacity(n);
    for &(s, c, sum) in &blocks {
        let level = (sum / T::from_usize_lossy(c)).clamp_abs(level_bound);
        fitted.extend(std::iter::repeat_n(level, c));
        if levels.last() != Some(&level) {
            starts.push(s);
            levels.push(level);
        }
    }
    let rss = y.iter().zip(&fitted).fold(T::zero(), |a, (&v, &f)| a + (v - f) * (v - f));
    let function = data.segments_to_fn(&starts, &levels, level_bound)?;
    Ok(IsotonicFit { function, fitted, starts, rss })
}

/// Pool-adjacent-violators blocks `(start, count, sum)` for unit weights;
/// `tied(j)` forces `j` into the same initial block as `j - 1`.
pub(crate) fn pava_blocks<T: Scalar>(y: &[T], tied: impl Fn(usize) -> bool) -> Vec<(usize, usize, T)> {
    let n = y.len();
    let mut blocks: Vec<(usize, usize, T)> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        let mut sum = y[i];
        while j < n && tied(j) {
            sum = sum + y[j];
            j += 1;
        }
        blocks.push((i, j - i, sum));
        while blocks.len() > 1 {
            let (_, cb, sb) = blocks[blocks.len() - 1];
            let (_, ca, sa) = blocks[blocks.len() - 2];
            // mean_a > mean_b, cross-multiplied.
            if sa * T::from_usize_lossy(cb) > sb * T::from_usize_lossy(ca) {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last].1 += cb;
                blocks[last].2 = sa + sb;
            } else {
                break;
            }
        }
        i = j;
    }
    blocks
}

/// Unclamped isotonic regression of `y` in index order.
pub(crate) fn pava<T: Scalar>(y: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(y.len());
    for (_, c, s) in pava_blocks(y, |_| false) {
        out.extend(std::iter::repeat_n(s / T::from_usize_lossy(c), c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Projection onto the monotone box cone by enumeration: an optimum is
    /// constant on consecutive blocks, each at its clamped block mean, so
    /// the minimum over all block partitions with non-decreasing levels is
    /// the exact optimum.
    fn brute(y: &[f64]) -> f64 {
        let n = y.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << (n - 1)) {
            let mut bounds = vec![0];
            bounds.extend((1..n).filter(|b| mask >> (b - 1) & 1 == 1));
            bounds.push(n);
            let levels: Vec<f64> = bounds
                .windows(2)
                .map(|w| (y[w[0]..w[1]].iter().sum::<f64>() / (w[1] - w[0]) as f64).clamp(-1.0, 1.0))
                .collect();
            if levels.windows(2).any(|l| l[0] > l[1]) {
                continue;
            }
            let rss: f64 = bounds
                .windows(2)
                .zip(&levels)
                .map(|(w, c)| y[w[0]..w[1]].iter().map(|v| (v - c).powi(2)).sum::<f64>())
                .sum();
            best = best.min(rss);
        }
        best
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn monotone_input_is_reproduced() {
        let y = vec![-0.5, -0.1, 0.0, 0.3, 0.9];
        let d = RegressionData::<f64>::new(grid(5), y.clone()).unwrap();
        let fit = fit_isotonic(&d, 1.0).unwrap();
        assert_eq!(fit.fitted, y);
        assert_eq!(fit.rss, 0.0);
    }

    #[test]
    fn decreasing_input_pools_completely() {
        let d = RegressionData::<f64>::new(grid(4), vec![0.9, 0.5, 0.1, -0.3]).unwrap();
        let fit = fit_isotonic(&d, 1.0).unwrap();
        assert_eq!(fit.function.levels().len(), 1);
        assert!((fit.fitted[0] - 0.3).abs() < 1e-15);
        let d = RegressionData::<f64>::new(grid(3), vec![9.0, 6.0, 3.0]).unwrap();
        assert_eq!(fit_isotonic(&d, 1.0).unwrap().fitted, vec![1.0; 3]);
    }

    #[test]
    fn matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..300 {
            let n = rng.random_range(1..=9);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let d = RegressionData::<f64>::new(grid(n), y.clone()).unwrap();
            let fit = fit_isotonic(&d, 1.0).unwrap();
            assert!((fit.rss - brute(&y)).abs() < 1e-9, "trial {trial}");
        }
        let y: Vec<f64> = (0..8).map(|_| rng.random_range(-1.5..1.5)).collect();
        let d = RegressionData::<f64>::new(grid(8), y.clone()).unwrap();
        assert!((fit_isotonic(&d, 1.0).unwrap().rss - brute(&y)).abs() < 1e-9);
    }

    #[test]
    fn tied_design_points_share_a_level() {
        let d = RegressionData::<f64>::new(vec![0.2, 0.2, 0.6], vec![0.4, -0.4, 0.1]).unwrap();
        let fit = fit_isotonic(&d, 1.0).unwrap();
        assert_eq!(fit.fitted[0], fit.fitted[1]);
        assert_eq!(fit.fitted, vec![0.0, 0.0, 0.1]);
        assert_eq!(fit.function.breakpoints(), &[0.0, 0.4, 1.0]);
    }

    proptest! {
        #[test]
        fn monotone_and_orthogonal(ys in proptest::collection::vec(-2.0f64..2.0, 1..40)) {
            let n = ys.len();
            let d = RegressionData::<f64>::new(grid(n), ys.clone()).unwrap();
            let fit = fit_isotonic(&d, 1.0).unwrap();
            prop_assert!(fit.fitted.windows(2).all(|w| w[0] <= w[1]));
            let mut i = 0;
            while i < n {
                let mut j = i;
                while j < n && fit.fitted[j] == fit.fitted[i] {
                    j += 1;
                }
                let c = fit.fitted[i];
                if c.abs() < 1.0 {
                    let r: f64 = ys[i..j].iter().map(|v| v - c).sum();
                    prop_assert!(r.abs() < 1e-9);
                }
                i = j;
            }
        }
    }
}
