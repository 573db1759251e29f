use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Step function on `[0, 1]` with bounded levels.
///
/// Segment `k` covers `[breakpoints[k], breakpoints[k + 1])`; the last one
/// is closed at 1. Values at the breakpoints themselves do not affect any
/// `L2` quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant<T> {
    breakpoints: Vec<T>,
    levels: Vec<T>,
    level_bound: T,
}

impl<T: Scalar> PiecewiseConstant<T> {
    pub fn new(breakpoints: Vec<T>, levels: Vec<T>, level_bound: T) -> Result<Self> {
        if !(level_bound > T::zero()) || !level_bound.is_finite() {
            return invalid(format!("level_bound must be finite and positive, got {level_bound}"));
        }
        if breakpoints.len() < 2 || levels.len() + 1 != breakpoints.len() {
            return invalid(format!(
                "need one level per segment: {} breakpoints, {} levels",
                breakpoints.len(),
                levels.len()
            ));
        }
        if breakpoints[0] != T::zero() || breakpoints[breakpoints.len() - 1] != T::one() {
            return invalid("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("breakpoints must be strictly increasing");
        }
        if let Some(l) = levels.iter().find(|l| !l.is_finite() || l.abs() > level_bound) {
            return invalid(format!("level {l} exceeds the bound {level_bound}"));
        }
        Ok(PiecewiseConstant { breakpoints, levels, level_bound })
    }

    pub fn zero() -> Self {
        Self::constant(T::zero(), T::one()).expect("zero is admissible")
    }

    pub fn constant(level: T, level_bound: T) -> Result<Self> {
        Self::new(vec![T::zero(), T::one()], vec![level], level_bound)
    }

    /// `level * 1[a, b]`; a degenerate interval gives the zero function.
    pub fn indicator(a: T, b: T, level: T, level_bound: T) -> Result<Self> {
        if !(T::zero() <= a && a <= b && b <= T::one()) {
            return invalid(format!("need 0 <= a <= b <= 1, got [{a}, {b}]"));
        }
        if a == b {
            return Self::constant(T::zero(), level_bound);
        }
        let mut bp = vec![T::zero()];
        let mut lv = Vec::new();
        if a > T::zero() {
            bp.push(a);
            lv.push(T::zero());
        }
        bp.push(b);
        lv.push(level);
        if b < T::one() {
            bp.push(T::one());
            lv.push(T::zero());
        }
        Self::new(bp, lv, level_bound)
    }

    /// Assembles a step function from sorted inner breakpoints, merging
    /// equal neighbouring levels.
    pub(crate) fn from_steps(inner: &[T], levels: &[T], level_bound: T) -> Result<Self> {
        debug_assert_eq!(inner.len() + 1, levels.len());
        let mut bp = vec![T::zero()];
        let mut lv = vec![levels[0]];
        for (k, &b) in inner.iter().enumerate() {
            let next = levels[k + 1];
            if next == lv[lv.len() - 1] {
                continue;
            }
            bp.push(b);
            lv.push(next);
        }
        bp.push(T::one());
        Self::new(bp, lv, level_bound)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn level_bound(&self) -> T {
        self.level_bound
    }

    pub fn segments(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.levels.iter().enumerate().map(|(k, &c)| (self.breakpoints[k], self.breakpoints[k + 1], c))
    }

    pub fn eval(&self, x: T) -> T {
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        let k = inner.partition_point(|&b| b <= x);
        self.levels[k]
    }

    /// `sqrt(int_0^1 (self - other)^2 dx)`.
    pub fn l2_distance(&self, other: &Self) -> T {
        l2_risk(self, other)
    }
}

/// Exact `L2([0, 1])` distance between two step functions.
pub fn l2_risk<T: Scalar>(f: &PiecewiseConstant<T>, truth: &PiecewiseConstant<T>) -> T {
    let (a, b) = (&f.breakpoints, &truth.breakpoints);
    let (mut i, mut j) = (0usize, 0usize);
    let mut left = T::zero();
    let mut acc = T::zero();
    while i < f.levels.len() && j < truth.levels.len() {
        let right = a[i + 1].min(b[j + 1]);
        let d = f.levels[i] - truth.levels[j];
        acc = acc + d * d * (right - left);
        left = right;
        if a[i + 1] == right {
            i += 1;
        }
        if b[j + 1] == right {
            j += 1;
        }
    }
    acc.sqrt()
}
