use std::collections::VecDeque;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::design::{DesignSample, IntervalConstraint, Windows};

/// Maximizer of `|sum_i w_i 1[x_i in [a, b]]|` over admissible intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSup<T> {
    pub value: T,
    /// Captured index window `(start, end)`, inclusive; `None` when no
    /// admissible interval captures a design point.
    pub window: Option<(usize, usize)>,
    /// A realizing interval `[a, b]` for `window`.
    pub interval: Option<(T, T)>,
}

/// Exact supremum of the weighted interval count over closed intervals
/// obeying `c`, in `O(n)` after the (already sorted) design.
///
/// For each admissible window end `j` the admissible starts form an index
/// range whose two ends only move right as `j` grows, so the extreme
/// prefix sums over that range are tracked with two monotone deques. Ties
/// resolve to the lexicographically smallest `(start, end)`.
pub fn sup_interval_sum<T: Scalar>(sample: &DesignSample<T>, c: &IntervalConstraint<T>) -> Result<IntervalSup<T>> {
    if sample.is_empty() {
        return invalid("sup_interval_sum needs a nonempty sample");
    }
    c.validate()?;
    let x = sample.x();
    let w = sample.w();
    let n = x.len();
    let win = Windows::new(x);

    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = T::zero();
    prefix.push(acc);
    for &v in w {
        acc = acc + v;
        prefix.push(acc);
    }

    let mut min_q: VecDeque<usize> = VecDeque::new();
    let mut max_q: VecDeque<usize> = VecDeque::new();
    let mut lo = 0usize; // first start with x[j] - x[start] <= max_len
    let mut next = 0usize; // next start index to admit into the deques
    let mut best: Option<(T, usize, usize)> = None;

    for j in 0..n {
        while lo < j && x[j] - x[lo] > c.max_len {
            lo += 1;
        }
        // Admit every start i <= j whose room reaches min_len.
        while next <= j && win.gap_ok(next, j, c.min_len) {
            if win.valid_start(next) {
                let s = prefix[next];
                while min_q.back().is_some_and(|&b| prefix[b] > s) {
                    min_q.pop_back();
                }
                min_q.push_back(next);
                while max_q.back().is_some_and(|&b| prefix[b] < s) {
                    max_q.pop_back();
                }
                max_q.push_back(next);
            }
            next += 1;
        }
        while min_q.front().is_some_and(|&f| f < lo) {
            min_q.pop_front();
        }
        while max_q.front().is_some_and(|&f| f < lo) {
            max_q.pop_front();
        }
        if !win.valid_end(j) {
            continue;
        }
        let end = prefix[j + 1];
        if let Some(&i) = min_q.front() {
            consider(&mut best, end - prefix[i], i, j);
        }
        if let Some(&i) = max_q.front() {
            consider(&mut best, prefix[i] - end, i, j);
        }
    }

    Ok(match best {
        Some((value, i, j)) if value >= T::zero() => {
            IntervalSup { value, window: Some((i, j)), interval: Some(win.realize(i, j, c.min_len)) }
        }
        _ => IntervalSup { value: T::zero(), window: None, interval: None },
    })
}

#[inline]
fn consider<T: Scalar>(best: &mut Option<(T, usize, usize)>, v: T, i: usize, j: usize) {
    let replace = match *best {
        None => true,
        Some((bv, bi, bj)) => v > bv || (v == bv && (i, j) < (bi, bj)),
    };
    if replace {
        *best = Some((v, i, j));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    /// Interval-by-interval oracle, written independently of `Windows`.
    fn brute(x: &[f64], w: &[f64], c: &IntervalConstraint<f64>) -> (f64, Option<(usize, usize)>) {
        let n = x.len();
        let mut prefix = vec![0.0];
        for &v in w {
            prefix.push(prefix.last().unwrap() + v);
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i..n {
                // The interval [a, b] must satisfy lo < a <= x[i], x[j] <= b < hi
                // (non-strict at 0 / 1), with min_len <= b - a <= max_len.
                if i > 0 && x[i - 1] == x[i] {
                    continue;
                }
                if j + 1 < n && x[j + 1] == x[j] {
                    continue;
                }
                let lo = if i > 0 { x[i - 1] } else { 0.0 };
                let hi = if j + 1 < n { x[j + 1] } else { 1.0 };
                let strict = i > 0 || j + 1 < n;
                let longest_ok = if strict { hi - lo > c.min_len } else { hi - lo >= c.min_len };
                if !longest_ok || x[j] - x[i] > c.max_len {
                    continue;
                }
                let s = prefix[j + 1] - prefix[i];
                for v in [s, -s] {
                    let better = match best {
                        None => true,
                        Some((bv, bi, bj)) => v > bv || (v == bv && (i, j) < (bi, bj)),
                    };
                    if better {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        match best {
            Some((v, i, j)) => (v, Some((i, j))),
            None => (0.0, None),
        }
    }

    fn random_instance(seed: u64) -> (Vec<f64>, Vec<f64>, IntervalConstraint<f64>) {
        let mut rng = stream_rng(seed, 11);
        let n = rng.random_range(1..=64);
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                // Coarse grid so that duplicate design points occur.
                if rng.random_bool(0.3) {
                    (rng.random_range(0..20) as f64) / 20.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let w: Vec<f64> =
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(-3..=3) as f64
                    } else {
                        rng.random::<f64>() * 4.0 - 2.0
                    }
                })
                .collect();
        let a: f64 = rng.random::<f64>() * 0.6;
        let b: f64 = rng.random::<f64>();
        let c = match rng.random_range(0..4) {
            0 => IntervalConstraint::unconstrained(),
            1 => IntervalConstraint::at_least(a).unwrap(),
            2 => IntervalConstraint::at_most(b).unwrap(),
            _ => IntervalConstraint::new(a.min(b), a.max(b)).unwrap(),
        };
        (x, w, c)
    }

    #[test]
    fn all_positive_weights_take_everything() {
        let s = DesignSample::new(vec![0.1, 0.2, 0.3], vec![1.0, 1.0, 1.0]).unwrap();
        let r = sup_interval_sum(&s, &IntervalConstraint::unconstrained()).unwrap();
        assert_eq!(r.value, 3.0);
        let (a, b) = r.interval.unwrap();
        assert!(a <= 0.1 && b >= 0.3);
    }

    #[test]
    fn mixed_weights_pick_singleton() {
        let s = DesignSample::new(vec![0.1, 0.2, 0.3], vec![1.0, -2.0, 3.0]).unwrap();
        let r = sup_interval_sum(&s, &IntervalConstraint::unconstrained()).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.window, Some((2, 2)));
        assert_eq!(brute(s.x(), s.w(), &IntervalConstraint::unconstrained()).0, 3.0);
    }

    #[test]
    fn errors_on_empty_or_infeasible() {
        let s = DesignSample::<f64>::new(vec![], vec![]).unwrap();
        assert!(sup_interval_sum(&s, &IntervalConstraint::unconstrained()).is_err());
        let s = DesignSample::new(vec![0.5], vec![1.0]).unwrap();
        let bad = IntervalConstraint { min_len: 1.5, max_len: 1.0 };
        assert!(sup_interval_sum(&s, &bad).is_err());
    }

    #[test]
    fn min_len_forces_neighbours_in() {
        // A window around the middle point alone has room 0.2 < 0.5.
        let s = DesignSample::new(vec![0.4, 0.5, 0.6], vec![-1.0, 5.0, -1.0]).unwrap();
        let c = IntervalConstraint::at_least(0.5).unwrap();
        let r = sup_interval_sum(&s, &c).unwrap();
        assert_eq!(r.value, brute(s.x(), s.w(), &c).0);
        let (a, b) = r.interval.unwrap();
        assert!(b - a >= 0.5 - 1e-12);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        for seed in 0..1000 {
            let (x, w, c) = random_instance(seed);
            let s = DesignSample::new(x.clone(), w.clone()).unwrap();
            let r = sup_interval_sum(&s, &c).unwrap();
            let (v, win) = brute(&x, &w, &c);
            assert_eq!(r.value, v, "seed {seed}");
            assert_eq!(r.window, win, "seed {seed}");
        }
    }

    #[test]
    fn realized_interval_captures_exactly_the_window() {
        for seed in 0..300 {
            let (x, w, c) = random_instance(seed);
            let s = DesignSample::new(x.clone(), w.clone()).unwrap();
            let r = sup_interval_sum(&s, &c).unwrap();
            if let (Some((i, j)), Some((a, b))) = (r.window, r.interval) {
                let inside: Vec<usize> = (0..x.len()).filter(|&k| x[k] >= a && x[k] <= b).collect();
                assert_eq!(inside, (i..=j).collect::<Vec<_>>(), "seed {seed}");
                assert!(b - a >= c.min_len - 1e-12 && b - a <= c.max_len + 1e-12);
                assert!(a >= 0.0 && b <= 1.0);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let s = DesignSample::new(vec![0.1f32, 0.2, 0.3], vec![1.0f32, -2.0, 3.0]).unwrap();
        let r = sup_interval_sum(&s, &IntervalConstraint::unconstrained()).unwrap();
        assert_eq!(r.value, 3.0f32);
    }

    proptest! {
        #[test]
        fn nested_constraints_are_monotone(seed in 0u64..10_000, shrink in 0.0f64..1.0) {
            let (x, w, c) = random_instance(seed);
            let s = DesignSample::new(x, w).unwrap();
            let inner = IntervalConstraint::new(
                c.min_len + shrink * (c.max_len - c.min_len) * 0.5,
                c.max_len - shrink * (c.max_len - c.min_len) * 0.5,
            ).unwrap();
            prop_assume!(inner.is_within(&c));
            let v_inner = sup_interval_sum(&s, &inner).unwrap().value;
            let v_outer = sup_interval_sum(&s, &c).unwrap().value;
            prop_assert!(v_inner <= v_outer);
        }

        #[test]
        fn positive_scaling_is_equivariant(seed in 0u64..10_000, pow in -4i32..6) {
            let (x, w, c) = random_instance(seed);
            let lambda = 2f64.powi(pow);
            let s = DesignSample::new(x.clone(), w.clone()).unwrap();
            let scaled = DesignSample::new(x, w.iter().map(|v| v * lambda).collect()).unwrap();
            let r = sup_interval_sum(&s, &c).unwrap();
            let rs = sup_interval_sum(&scaled, &c).unwrap();
            prop_assert_eq!(rs.value, r.value * lambda);
            prop_assert_eq!(rs.window, r.window);
        }
    }
}
