use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::data::RegressionData;
use super::piecewise::PiecewiseConstant;

/// In-sample segmentation and its extension to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFit<T> {
    pub function: PiecewiseConstant<T>,
    /// Residual sum of squares (LSE) or of absolute deviations (LAD).
    pub loss: T,
    /// First sorted index of each segment.
    pub starts: Vec<usize>,
    pub levels: Vec<T>,
}

/// Exact least squares over step functions with at most `k` segments and
/// levels in `[-level_bound, level_bound]`.
pub fn fit_segmented_lse<T: Scalar>(data: &RegressionData<T>, k: usize, level_bound: T) -> Result<SegmentFit<T>> {
    check_args(data, k, level_bound)?;
    let (s, q) = data.prefix_sums();
    let level = |i: usize, j: usize| {
        let m = T::from_usize_lossy(j - i);
        ((s[j] - s[i]) / m).clamp_abs(level_bound)
    };
    let cost = |i: usize, j: usize| {
        let m = T::from_usize_lossy(j - i);
        let sum = s[j] - s[i];
        let c = (sum / m).clamp_abs(level_bound);
        (q[j] - q[i] - (c + c) * sum + c * c * m).max(T::zero())
    };
    let starts = segment_dp(data, k, cost);
    let levels = levels_for(&starts, data.len(), level);
    let loss = residuals(data, &starts, &levels, |r| r * r);
    Ok(SegmentFit { function: data.segments_to_fn(&starts, &levels, level_bound)?, loss, starts, levels })
}

/// Exact least absolute deviations over at most `k` bounded segments;
/// each level is the clamped lower median of its segment.
pub fn fit_segmented_lad<T: Scalar>(data: &RegressionData<T>, k: usize, level_bound: T) -> Result<SegmentFit<T>> {
    check_args(data, k, level_bound)?;
    let n = data.len();
    let table = LadTable::new(data.y(), level_bound);
    let starts = segment_dp(data, k, |i, j| table.cost[i * (n + 1) + j]);
    let levels = levels_for(&starts, n, |i, j| table.level[i * (n + 1) + j]);
    let loss = residuals(data, &starts, &levels, |r| r.abs());
    Ok(SegmentFit { function: data.segments_to_fn(&starts, &levels, level_bound)?, loss, starts, levels })
}

fn check_args<T: Scalar>(data: &RegressionData<T>, k: usize, level_bound: T) -> Result<()> {
    if k < 1 || k > data.len() {
        return invalid(format!("need 1 <= k <= n, got k = {k}, n = {}", data.len()));
    }
    if !(level_bound > T::zero()) || !level_bound.is_finite() {
        return invalid(format!("level_bound must be finite and positive, got {level_bound}"));
    }
    Ok(())
}

fn levels_for<T>(starts: &[usize], n: usize, level: impl Fn(usize, usize) -> T) -> Vec<T> {
    starts.iter().enumerate().map(|(k, &i)| level(i, starts.get(k + 1).copied().unwrap_or(n))).collect()
}

fn residuals<T: Scalar>(data: &RegressionData<T>, starts: &[usize], levels: &[T], loss: impl Fn(T) -> T) -> T {
    let y = data.y();
    let mut acc = T::zero();
    for (k, &i) in starts.iter().enumerate() {
        let j = starts.get(k + 1).copied().unwrap_or(y.len());
        for &v in &y[i..j] {
            acc = acc + loss(v - levels[k]);
        }
    }
    acc
}

/// Minimizes the summed segment cost over at most `k` segments of
/// `0..n`, splitting only between distinct design points.
///
/// The table is filled from the right so that, reading the choices from
/// the left, the smallest split index wins every exact tie; the result is
/// the lexicographically smallest optimal boundary sequence.
fn segment_dp<T: Scalar>(data: &RegressionData<T>, k: usize, cost: impl Fn(usize, usize) -> T) -> Vec<usize> {
    let x = data.x();
    let n = x.len();
    let split_ok: Vec<bool> = (0..n).map(|j| j > 0 && x[j - 1] < x[j]).collect();
    let mut prev: Vec<T> = (0..n).map(|i| cost(i, n)).collect();
    let mut choice: Vec<Vec<usize>> = vec![vec![n; n]];
    for _ in 2..=k {
        let mut cur = vec![T::zero(); n];
        let mut pick = vec![n; n];
        for i in 0..n {
            let mut best = T::infinity();
            let mut arg = n;
            for j in i + 1..n {
                if !split_ok[j] {
                    continue;
                }
                let v = cost(i, j) + prev[j];
                if v < best {
                    best = v;
                    arg = j;
                }
            }
            let whole = cost(i, n);
            if whole < best {
                best = whole;
                arg = n;
            }
            cur[i] = best;
            pick[i] = arg;
        }
        prev = cur;
        choice.push(pick);
    }
    let mut starts = vec![0];
    let mut i = 0;
    for t in (0..k).rev() {
        let j = choice[t][i];
        if j == n {
            break;
        }
        starts.push(j);
        i = j;
    }
    starts
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key<T>(T);

impl<T: PartialOrd> Eq for Key<T> {}

impl<T: PartialOrd> PartialOrd for Key<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Key<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("finite responses")
    }
}

/// Absolute-loss segment costs and clamped lower medians for every
/// segment `[i, j)`, built per start with a two-heap running median.
struct LadTable<T> {
    cost: Vec<T>,
    level: Vec<T>,
}

impl<T: Scalar> LadTable<T> {
    fn new(y: &[T], bound: T) -> Self {
        let n = y.len();
        let mut cost = vec![T::zero(); n * (n + 1)];
        let mut level = vec![T::zero(); n * (n + 1)];
        for i in 0..n {
            let mut low: BinaryHeap<Key<T>> = BinaryHeap::new();
            let mut high: BinaryHeap<Reverse<Key<T>>> = BinaryHeap::new();
            let (mut s_low, mut s_high) = (T::zero(), T::zero());
            let (mut n_gt, mut s_gt, mut n_lt, mut s_lt) = (0usize, T::zero(), 0usize, T::zero());
            for j in i + 1..=n {
                let v = y[j - 1];
                if v > bound {
                    n_gt += 1;
                    s_gt = s_gt + v;
                } else if v < -bound {
                    n_lt += 1;
                    s_lt = s_lt + v;
                }
                if low.peek().is_none_or(|t| v <= t.0) {
                    low.push(Key(v));
                    s_low = s_low + v;
                } else {
                    high.push(Reverse(Key(v)));
                    s_high = s_high + v;
                }
                // Keep |low| = ceil(m / 2) so its top is the lower median.
                if low.len() > high.len() + 1 {
                    let t = low.pop().expect("nonempty").0;
                    s_low = s_low - t;
                    high.push(Reverse(Key(t)));
                    s_high = s_high + t;
                } else if high.len() > low.len() {
                    let t = high.pop().expect("nonempty").0 .0;
                    s_high = s_high - t;
                    low.push(Key(t));
                    s_low = s_low + t;
                }
                let med = low.peek().expect("nonempty").0;
                let m = j - i;
                let (c, sad) = if med > bound {
                    let total = s_low + s_high;
                    let above = s_gt - bound * T::from_usize_lossy(n_gt);
                    let below = bound * T::from_usize_lossy(m - n_gt) - (total - s_gt);
                    (bound, above + below)
                } else if med < -bound {
                    let total = s_low + s_high;
                    let above = total - s_lt + bound * T::from_usize_lossy(m - n_lt);
                    let below = -bound * T::from_usize_lossy(n_lt) - s_lt;
                    (-bound, above + below)
                } else {
                    let above = s_high - med * T::from_usize_lossy(high.len());
                    let below = med * T::from_usize_lossy(low.len()) - s_low;
                    (med, above + below)
                };
                cost[i * (n + 1) + j] = sad.max(T::zero());
                level[i * (n + 1) + j] = c;
            }
        }
        LadTable { cost, level }
    }
}
