use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Non-decreasing concave piecewise-linear function on `[0, inf)` with
/// `value(0) = 0`, stored by its knots and held constant past the last one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcaveMajorant<T> {
    knots: Vec<(T, T)>,
}

impl<T: Scalar> ConcaveMajorant<T> {
    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn value(&self, u: T) -> T {
        let k = &self.knots;
        if u <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if u >= last.0 {
            return last.1;
        }
        // First knot strictly right of u.
        let idx = k.partition_point(|p| p.0 <= u);
        let (x0, y0) = k[idx - 1];
        let (x1, y1) = k[idx];
        y0 + (y1 - y0) * (u - x0) / (x1 - x0)
    }

    /// Segment slopes, left to right.
    pub fn slopes(&self) -> Vec<T> {
        self.knots.windows(2).map(|p| (p[1].1 - p[0].1) / (p[1].0 - p[0].0)).collect()
    }

    pub fn initial_slope(&self) -> T {
        self.slopes().first().copied().unwrap_or_else(T::zero)
    }
}

/// Least non-decreasing concave majorant of `points`.
///
/// Builds the upper hull (monotone chain) and then flattens it after its
/// highest vertex. `(0, 0)` is added when absent.
pub fn least_concave_majorant<T: Scalar>(points: &[(T, T)]) -> Result<ConcaveMajorant<T>> {
    let mut pts: Vec<(T, T)> = Vec::with_capacity(points.len() + 1);
    for (idx, &(k, v)) in points.iter().enumerate() {
        if !(v >= T::zero()) || !v.is_finite() {
            return invalid(format!("point {idx} has negative or non-finite value {v}"));
        }
        if !(k >= T::zero()) || !k.is_finite() {
            return invalid(format!("point {idx} has negative abscissa {k}"));
        }
        if k == T::zero() && v != T::zero() {
            return invalid("the point at k = 0 must have value 0");
        }
        if let Some(&(pk, pv)) = pts.last() {
            if k < pk {
                return invalid("points must be sorted by k");
            }
            if k == pk {
                if v > pv {
                    pts.pop();
                    pts.push((k, v));
                }
                continue;
            }
        }
        pts.push((k, v));
    }
    if pts.first().is_none_or(|p| p.0 != T::zero()) {
        pts.insert(0, (T::zero(), T::zero()));
    }

    let mut hull: Vec<(T, T)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 {
            let (x0, y0) = hull[hull.len() - 2];
            let (x1, y1) = hull[hull.len() - 1];
            // Drop the middle vertex when it is on or below the chord.
            let cross = (x1 - x0) * (p.1 - y0) - (y1 - y0) * (p.0 - x0);
            if cross >= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let mut top = 0;
    for (idx, p) in hull.iter().enumerate() {
        if p.1 > hull[top].1 {
            top = idx;
        }
    }
    let last_k = pts[pts.len() - 1].0;
    let peak = hull[top].1;
    hull.truncate(top + 1);
    if hull[top].0 < last_k {
        hull.push((last_k, peak));
    }
    Ok(ConcaveMajorant { knots: hull })
}
