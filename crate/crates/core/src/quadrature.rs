//! Adaptive Simpson quadrature and semi-infinite integrals with a known
//! power-law or light tail.

/// A quadrature result with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Integral {
    if !(b > a) {
        return Integral { value: 0.0, error: 0.0 };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut error = 0.0;
    let value = simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut error);
    Integral { value, error }
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    error: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        *error += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, error)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, error)
}

/// Behaviour of an integrand at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `f(t) ~ coef * t^(-exponent)` with `exponent > 1`.
    Power { coef: f64, exponent: f64 },
    /// Decays faster than any power.
    Light,
}

/// Integrates `f` over `[from, inf)`.
///
/// The range is cut into geometric panels integrated by adaptive Simpson.
/// For a power tail the panels stop once the integrand tracks its
/// asymptote closely enough that replacing the remainder by the closed
/// form `coef * T^(1 - exponent) / (exponent - 1)` is within `tol`.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: &F, from: f64, model: TailModel, tol: f64) -> Integral {
    let panel_tol = tol / 128.0;
    let mut acc = Integral { value: 0.0, error: 0.0 };
    let mut lo = from.max(0.0);
    let mut hi = if lo < 1.0 { 1.0 } else { 2.0 * lo };
    for _ in 0..400 {
        acc = acc + adaptive_simpson(f, lo, hi, panel_tol);
        lo = hi;
        hi = 2.0 * lo;
        match model {
            TailModel::Power { coef, exponent } => {
                debug_assert!(exponent > 1.0);
                let asym = coef * lo.powf(-exponent);
                let tail = coef * lo.powf(1.0 - exponent) / (exponent - 1.0);
                let dev = if asym > 0.0 { (f(lo) / asym - 1.0).abs() } else { 0.0 };
                // The deviation from the asymptote is monotone past the
                // first panels, so `dev * tail` bounds the remainder error.
                if dev <= 0.01 && dev * tail <= 0.25 * tol {
                    acc.value += tail;
                    acc.error += dev * tail;
                    return acc;
                }
            }
            TailModel::Light => {
                let v = f(lo);
                if v * lo <= 0.25 * tol || v == 0.0 {
                    acc.error += v * lo;
                    return acc;
                }
            }
        }
    }
    acc.error = f64::INFINITY;
    acc
}
