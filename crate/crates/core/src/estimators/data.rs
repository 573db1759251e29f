use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::piecewise::PiecewiseConstant;

/// Observations `y_i = f0(x_i) + xi_i` on `[0, 1]`, kept sorted by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData<T> {
    x: Vec<T>,
    y: Vec<T>,
    xi: Option<Vec<T>>,
    /// `perm[k]` is the input position of the `k`-th sorted observation.
    perm: Vec<usize>,
}

impl<T: Scalar> RegressionData<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() {
            return invalid(format!("x has {} entries but y has {}", x.len(), y.len()));
        }
        if let Some(v) = x.iter().find(|v| !(T::zero() <= **v && **v <= T::one())) {
            return invalid(format!("design point {v} outside [0, 1]"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return invalid("responses must be finite");
        }
        let mut perm: Vec<usize> = (0..x.len()).collect();
        perm.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite"));
        let xs = perm.iter().map(|&k| x[k]).collect();
        let ys = perm.iter().map(|&k| y[k]).collect();
        Ok(RegressionData { x: xs, y: ys, xi: None, perm })
    }

    /// Attaches the true noise (input order) for oracle checks.
    pub fn with_noise(mut self, xi: Vec<T>) -> Result<Self> {
        if xi.len() != self.perm.len() {
            return invalid("noise length differs from the sample size");
        }
        self.xi = Some(self.perm.iter().map(|&k| xi[k]).collect());
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn xi(&self) -> Option<&[T]> {
        self.xi.as_deref()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Step function on `[0, 1]` from an in-sample segmentation: `starts`
    /// lists the first sorted index of every segment (beginning with 0),
    /// and boundaries sit halfway between neighbouring design points.
    pub(crate) fn segments_to_fn(
        &self,
        starts: &[usize],
        levels: &[T],
        level_bound: T,
    ) -> Result<PiecewiseConstant<T>> {
        let half = T::from_f64_lossy(0.5);
        let inner: Vec<T> = starts[1..].iter().map(|&s| (self.x[s - 1] + self.x[s]) * half).collect();
        PiecewiseConstant::from_steps(&inner, levels, level_bound)
    }

    pub(crate) fn prefix_sums(&self) -> (Vec<T>, Vec<T>) {
        let mut s = Vec::with_capacity(self.len() + 1);
        let mut q = Vec::with_capacity(self.len() + 1);
        let (mut a, mut b) = (T::zero(), T::zero());
        s.push(a);
        q.push(b);
        for &v in &self.y {
            a = a + v;
            b = b + v * v;
            s.push(a);
            q.push(b);
        }
        (s, q)
    }
}

/// Serializable summary of a fitted step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord<T> {
    pub breakpoints: Vec<T>,
    pub levels: Vec<T>,
    pub rss: T,
}

impl<T: Scalar> FitRecord<T> {
    pub fn new(f: &PiecewiseConstant<T>, rss: T) -> Self {
        FitRecord { breakpoints: f.breakpoints().to_vec(), levels: f.levels().to_vec(), rss }
    }
}
