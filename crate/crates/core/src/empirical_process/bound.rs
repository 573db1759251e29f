use crate::error::Result;
use crate::noise_models::ErrorLaw;
use crate::quadrature::{adaptive_simpson, Integral};
use crate::scalar::Scalar;

use super::majorant::ConcaveMajorant;

/// A non-decreasing concave envelope `psi` usable in the multiplier bound.
pub trait Envelope {
    fn value(&self, u: f64) -> f64;

    /// Arguments where `value` has a kink.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `(coef, exponent, until)` such that `value(u) = coef * u^exponent`
    /// exactly for `0 <= u <= until`.
    fn near_zero(&self) -> (f64, f64, f64);
}

impl<T: Scalar> Envelope for ConcaveMajorant<T> {
    fn value(&self, u: f64) -> f64 {
        ConcaveMajorant::value(self, T::from_f64_lossy(u)).to_f64_lossy()
    }

    fn kinks(&self) -> Vec<f64> {
        self.knots().iter().map(|k| k.0.to_f64_lossy()).collect()
    }

    fn near_zero(&self) -> (f64, f64, f64) {
        let knots = self.knots();
        if knots.len() < 2 {
            return (0.0, 1.0, f64::INFINITY);
        }
        (self.initial_slope().to_f64_lossy(), 1.0, knots[1].0.to_f64_lossy())
    }
}

/// `psi(u) = kappa * u^(1/gamma)` with `gamma >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEnvelope {
    pub kappa: f64,
    pub gamma: f64,
}

impl Envelope for PowerEnvelope {
    fn value(&self, u: f64) -> f64 {
        self.kappa * u.max(0.0).powf(1.0 / self.gamma)
    }

    fn near_zero(&self) -> (f64, f64, f64) {
        (self.kappa, 1.0 / self.gamma, f64::INFINITY)
    }
}

/// `4 int_0^inf psi(n P(|xi| > t)) dt` for i.i.d. multipliers with law `law`.
///
/// `[0, T]` is integrated directly, split at the `t` where `n P(|xi| > t)`
/// crosses a kink of `psi`; beyond `T` the envelope is an exact power
/// `c u^b`, so the remainder is `c n^b int_T^inf P(|xi| > t)^b dt`.
/// Returns `f64::INFINITY` when that remainder diverges.
pub fn multiplier_bound<E: Envelope + ?Sized>(psi: &E, law: &ErrorLaw, n: usize) -> Result<f64> {
    law.validate()?;
    let nf = n as f64;
    let (coef, power, until) = psi.near_zero();
    if n == 0 || coef == 0.0 {
        // Non-decreasing, concave, zero at 0 and flat at 0: identically zero.
        return Ok(0.0);
    }
    if law.tail_index() * power <= 1.0 {
        return Ok(f64::INFINITY);
    }
    let cut = until.min(1.0).min(nf);
    let t_cut = law.tail_quantile(cut / nf)?;

    let mut breaks: Vec<f64> = psi
        .kinks()
        .into_iter()
        .filter(|&k| k > cut && k < nf)
        .map(|k| law.tail_quantile(k / nf))
        .collect::<Result<_>>()?;
    breaks.push(0.0);
    breaks.push(t_cut);
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite quantiles"));
    breaks.dedup();

    let integrand = |t: f64| psi.value(nf * law.tail_prob_unchecked(t));
    let pieces = breaks.len().max(1) as f64;
    let mut total = Integral { value: 0.0, error: 0.0 };
    for w in breaks.windows(2) {
        total = total + adaptive_simpson(&integrand, w[0], w[1], 1e-10 / pieces);
    }
    let tail = law.tail_power_integral(power, t_cut);
    total.value += coef * nf.powf(power) * tail.value;
    Ok(4.0 * total.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical_process::least_concave_majorant;

    #[test]
    fn zero_envelope_gives_zero() {
        let psi = least_concave_majorant(&[(1.0, 0.0), (5.0, 0.0)]).unwrap();
        assert_eq!(multiplier_bound(&psi, &ErrorLaw::pareto(1.5), 10).unwrap(), 0.0);
    }

    #[test]
    fn sqrt_envelope_reduces_to_lp1_norm() {
        let law = ErrorLaw::pareto(4.0);
        let psi = PowerEnvelope { kappa: 1.0, gamma: 2.0 };
        let b = multiplier_bound(&psi, &law, 64).unwrap();
        let closed = 4.0 * 8.0 * law.lp1_norm(2.0).unwrap().value;
        assert!((b - closed).abs() <= 1e-6 * closed, "{b} vs {closed}");
    }

    #[test]
    fn power_envelope_closed_form_for_several_laws() {
        for (law, gamma) in
            [(ErrorLaw::gaussian(1.0), 2.0), (ErrorLaw::student_t(5.0), 3.0), (ErrorLaw::pareto(4.5), 1.5)]
        {
            let kappa = 0.7;
            let n = 300;
            let psi = PowerEnvelope { kappa, gamma };
            let b = multiplier_bound(&psi, &law, n).unwrap();
            let closed = 4.0 * kappa * (n as f64).powf(1.0 / gamma) * law.lp1_norm(gamma).unwrap().value;
            assert!((b - closed).abs() <= 1e-6 * closed, "{law:?}: {b} vs {closed}");
        }
    }

    #[test]
    fn linear_envelope_is_four_n_mean_abs() {
        // psi(u) = u gives 4 n E|xi|.
        let psi = least_concave_majorant(&[(1.0, 1.0), (100.0, 100.0)]).unwrap();
        let law = ErrorLaw::student_t(3.0);
        let b = multiplier_bound(&psi, &law, 50).unwrap();
        let exact = 4.0 * 50.0 * law.mean_abs().unwrap();
        assert!((b - exact).abs() < 1e-7 * exact, "{b} vs {exact}");
    }

    #[test]
    fn divergent_when_tail_too_heavy() {
        let psi = least_concave_majorant(&[(1.0, 1.0), (2.0, 1.5)]).unwrap();
        assert!(multiplier_bound(&psi, &ErrorLaw::pareto(1.0), 10).unwrap().is_infinite());
        assert!(multiplier_bound(&psi, &ErrorLaw::pareto(1.2), 10).unwrap().is_finite());
    }

    #[test]
    fn piecewise_envelope_against_brute_quadrature() {
        let psi = least_concave_majorant(&[(1.0, 1.0), (3.0, 2.0), (8.0, 3.0), (20.0, 3.5)]).unwrap();
        let law = ErrorLaw::pareto(3.0);
        let n = 20usize;
        let b = multiplier_bound(&psi, &law, n).unwrap();
        // Oracle: substitute t = s / (1 - s) and apply a fine midpoint rule.
        let m = 2_000_000;
        let mut acc = 0.0;
        for k in 0..m {
            let s = (k as f64 + 0.5) / m as f64;
            let t = s / (1.0 - s);
            let u = n as f64 / (1.0 + t.powi(3));
            acc += Envelope::value(&psi, u) / (1.0 - s).powi(2);
        }
        let oracle = 4.0 * acc / m as f64;
        assert!((b - oracle).abs() < 1e-6 * oracle, "{b} vs {oracle}");
    }
}
