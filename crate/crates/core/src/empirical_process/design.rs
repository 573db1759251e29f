use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Sorted design points on `[0, 1]` paired with weights (multipliers,
/// Rademacher signs or residuals).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSample<T> {
    x: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> DesignSample<T> {
    /// Builds a sample from design points that are already sorted.
    pub fn new(x: Vec<T>, w: Vec<T>) -> Result<Self> {
        if x.len() != w.len() {
            return invalid(format!("x has {} points but w has {}", x.len(), w.len()));
        }
        for (k, &xi) in x.iter().enumerate() {
            if !(xi >= T::zero() && xi <= T::one()) {
                return invalid(format!("x[{k}] = {xi} outside [0, 1]"));
            }
            if k > 0 && x[k - 1] > xi {
                return invalid(format!("x not sorted at index {k}"));
            }
        }
        if w.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite weight");
        }
        Ok(DesignSample { x, w })
    }

    /// Stable-sorts `(x, w)` pairs by `x` first.
    pub fn from_unsorted(x: Vec<T>, w: Vec<T>) -> Result<Self> {
        if x.len() != w.len() {
            return invalid(format!("x has {} points but w has {}", x.len(), w.len()));
        }
        if x.iter().any(|v| v.is_nan()) {
            return invalid("NaN design point");
        }
        let mut pairs: Vec<(T, T)> = x.into_iter().zip(w).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN"));
        let (x, w) = pairs.into_iter().unzip();
        Self::new(x, w)
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn w(&self) -> &[T] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn with_weights(&self, w: Vec<T>) -> Result<Self> {
        Self::new(self.x.clone(), w)
    }
}

/// Length constraint `min_len <= b - a <= max_len` on the intervals `[a, b]`.
///
/// Under the uniform design measure `P 1_[a,b]^2 = b - a`, so `max_len`
/// plays the role of a squared localization radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalConstraint<T> {
    pub min_len: T,
    pub max_len: T,
}

impl<T: Scalar> Default for IntervalConstraint<T> {
    fn default() -> Self {
        Self::unconstrained()
    }
}

impl<T: Scalar> IntervalConstraint<T> {
    pub fn unconstrained() -> Self {
        IntervalConstraint { min_len: T::zero(), max_len: T::one() }
    }

    pub fn new(min_len: T, max_len: T) -> Result<Self> {
        let c = IntervalConstraint { min_len, max_len };
        c.validate()?;
        Ok(c)
    }

    pub fn at_least(min_len: T) -> Result<Self> {
        Self::new(min_len, T::one())
    }

    pub fn at_most(max_len: T) -> Result<Self> {
        Self::new(T::zero(), max_len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_len > T::one() {
            return invalid(format!("infeasible constraint: min_len {} > 1", self.min_len));
        }
        if !(self.min_len >= T::zero() && self.min_len <= self.max_len && self.max_len <= T::one()) {
            return invalid(format!(
                "constraint needs 0 <= min_len <= max_len <= 1, got [{}, {}]",
                self.min_len, self.max_len
            ));
        }
        Ok(())
    }

    /// Whether every interval admissible here is admissible under `other`.
    pub fn is_within(&self, other: &Self) -> bool {
        self.min_len >= other.min_len && self.max_len <= other.max_len
    }
}

/// Which index windows `i..=j` of a sorted design are captured exactly by
/// some closed interval `[a, b]` inside `[0, 1]`.
///
/// The interval can move between the neighbouring design points
/// (exclusive) or the ends of `[0, 1]` (inclusive); that free room decides
/// whether a minimum length can be met without capturing extra points.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Windows<'a, T> {
    x: &'a [T],
}

impl<'a, T: Scalar> Windows<'a, T> {
    pub fn new(x: &'a [T]) -> Self {
        Windows { x }
    }

    /// A window can start at `i` only if `x[i]` is separable from `x[i-1]`.
    #[inline]
    pub fn valid_start(&self, i: usize) -> bool {
        i == 0 || self.x[i - 1] < self.x[i]
    }

    #[inline]
    pub fn valid_end(&self, j: usize) -> bool {
        j + 1 == self.x.len() || self.x[j] < self.x[j + 1]
    }

    /// Left limit of the free room and whether it is exclusive.
    #[inline]
    pub fn left_room(&self, i: usize) -> (T, bool) {
        if i == 0 {
            (T::zero(), false)
        } else {
            (self.x[i - 1], true)
        }
    }

    #[inline]
    pub fn right_room(&self, j: usize) -> (T, bool) {
        if j + 1 == self.x.len() {
            (T::one(), false)
        } else {
            (self.x[j + 1], true)
        }
    }

    /// Longest admissible interval length (a supremum when a side is exclusive).
    #[inline]
    pub fn room(&self, i: usize, j: usize) -> T {
        self.right_room(j).0 - self.left_room(i).0
    }

    /// Shortest admissible interval length for `i..=j`.
    #[inline]
    pub fn shortest(&self, i: usize, j: usize, min_len: T) -> T {
        let span = self.x[j] - self.x[i];
        if span > min_len {
            span
        } else {
            min_len
        }
    }

    /// Room for an interval of length at least `min_len`.
    #[inline]
    pub fn gap_ok(&self, i: usize, j: usize, min_len: T) -> bool {
        let (l, le) = self.left_room(i);
        let (r, re) = self.right_room(j);
        let span = r - l;
        if le || re {
            span > min_len
        } else {
            span >= min_len
        }
    }

    /// Shortest interval capturing exactly `i..=j`: the design-point hull,
    /// widened into the free room on both sides, proportionally to that
    /// room, when shorter than `min_len`.
    pub fn realize(&self, i: usize, j: usize, min_len: T) -> (T, T) {
        let a0 = self.x[i];
        let b0 = self.x[j];
        let extra = min_len - (b0 - a0);
        if extra <= T::zero() {
            return (a0, b0);
        }
        let (l, _) = self.left_room(i);
        let (r, _) = self.right_room(j);
        let room_l = a0 - l;
        let room_r = r - b0;
        let total = room_l + room_r;
        if total <= T::zero() {
            return (a0, b0);
        }
        let a = (a0 - extra * room_l / total).max(l);
        let b = (b0 + extra * room_r / total).min(r);
        (a, b)
    }
}
