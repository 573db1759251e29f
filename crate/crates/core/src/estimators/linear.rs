use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

use super::data::RegressionData;

/// Least-squares slope through the origin, `sum x y / sum x^2`.
///
/// Takes raw slices since the design need not live in `[0, 1]`.
pub fn fit_linear_1d<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return invalid(format!("x has {} entries but y has {}", x.len(), y.len()));
    }
    let (sxy, sxx) = x.iter().zip(y).fold((T::zero(), T::zero()), |(a, b), (&u, &v)| (a + u * v, b + u * u));
    if sxx == T::zero() {
        return Err(Error::Degenerate("all design points are zero".into()));
    }
    Ok(sxy / sxx)
}

impl<T: Scalar> RegressionData<T> {
    pub fn fit_linear_1d(&self) -> Result<T> {
        fit_linear_1d(self.x(), self.y())
    }
}
