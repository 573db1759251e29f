//! Symmetric error laws with exact tail functions, samplers and
//! `L_{p,1}` / `L_p` norms.

use libm::erfc;
use rand::distr::OpenClosed01;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, gamma::ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_tail, Integral, TailModel};
use crate::rng::{replication_rng, stream_rng};
use crate::stats::McEstimate;

/// Absolute tolerance handed to the quadrature routines.
const QUAD_TOL: f64 = 1e-10;

/// A noise distribution, symmetric about zero.
///
/// Serialized as a tagged record, e.g. `{ kind = "pareto", tail_index = 4.5 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorLaw {
    /// `P(|xi| > t) = 1 / (1 + t^tail_index)`.
    #[serde(rename = "pareto")]
    ParetoSymmetric {
        tail_index: f64,
    },
    StudentT {
        dof: f64,
    },
    Gaussian {
        sigma: f64,
    },
    /// `scale * base`.
    #[serde(rename = "scaled")]
    ScaledMixture {
        base: Box<ErrorLaw>,
        scale: f64,
    },
}

impl ErrorLaw {
    pub fn pareto(tail_index: f64) -> Self {
        ErrorLaw::ParetoSymmetric { tail_index }
    }

    pub fn student_t(dof: f64) -> Self {
        ErrorLaw::StudentT { dof }
    }

    pub fn gaussian(sigma: f64) -> Self {
        ErrorLaw::Gaussian { sigma }
    }

    pub fn scaled(base: ErrorLaw, scale: f64) -> Self {
        ErrorLaw::ScaledMixture { base: Box::new(base), scale }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match self {
            ErrorLaw::ParetoSymmetric { tail_index } if !ok(*tail_index) => {
                invalid(format!("pareto tail_index must be positive, got {tail_index}"))
            }
            ErrorLaw::StudentT { dof } if !ok(*dof) => invalid(format!("student_t dof must be positive, got {dof}")),
            ErrorLaw::Gaussian { sigma } if !ok(*sigma) => {
                invalid(format!("gaussian sigma must be positive, got {sigma}"))
            }
            ErrorLaw::ScaledMixture { base, scale } => {
                if !ok(*scale) {
                    return invalid(format!("scale must be positive, got {scale}"));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    /// Polynomial tail index `q` with `P(|xi| > t) ~ t^-q`; infinite for
    /// the Gaussian.
    pub fn tail_index(&self) -> f64 {
        match self {
            ErrorLaw::ParetoSymmetric { tail_index } => *tail_index,
            ErrorLaw::StudentT { dof } => *dof,
            ErrorLaw::Gaussian { .. } => f64::INFINITY,
            ErrorLaw::ScaledMixture { base, .. } => base.tail_index(),
        }
    }

    /// `(A, q)` with `P(|xi| > t) ~ A t^-q` as `t -> inf`, for polynomial tails.
    pub fn tail_asymptote(&self) -> Option<(f64, f64)> {
        match self {
            ErrorLaw::ParetoSymmetric { tail_index } => Some((1.0, *tail_index)),
            ErrorLaw::StudentT { dof } => {
                let nu = *dof;
                let ln_k = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln();
                let coef = 2.0 * (ln_k + 0.5 * (nu - 1.0) * nu.ln()).exp();
                Some((coef, nu))
            }
            ErrorLaw::Gaussian { .. } => None,
            ErrorLaw::ScaledMixture { base, scale } => base.tail_asymptote().map(|(a, q)| (a * scale.powf(q), q)),
        }
    }

    /// `P(|xi| > t)` in closed form.
    pub fn tail_prob(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return invalid(format!("tail_prob needs t >= 0, got {t}"));
        }
        Ok(self.tail_prob_unchecked(t))
    }

    pub(crate) fn tail_prob_unchecked(&self, t: f64) -> f64 {
        match self {
            ErrorLaw::ParetoSymmetric { tail_index } => {
                if t.is_infinite() {
                    0.0
                } else {
                    1.0 / (1.0 + t.powf(*tail_index))
                }
            }
            ErrorLaw::StudentT { dof } => {
                if t == 0.0 {
                    1.0
                } else if t.is_infinite() {
                    0.0
                } else {
                    beta_reg(0.5 * dof, 0.5, dof / (dof + t * t))
                }
            }
            ErrorLaw::Gaussian { sigma } => erfc(t / (sigma * std::f64::consts::SQRT_2)),
            ErrorLaw::ScaledMixture { base, scale } => base.tail_prob_unchecked(t / scale),
        }
    }

    /// Smallest `t` with `P(|xi| > t) <= prob`.
    pub fn tail_quantile(&self, prob: f64) -> Result<f64> {
        if !(prob > 0.0 && prob <= 1.0) {
            return invalid(format!("tail_quantile needs prob in (0, 1], got {prob}"));
        }
        Ok(match self {
            ErrorLaw::ParetoSymmetric { tail_index } => (1.0 / prob - 1.0).powf(1.0 / tail_index),
            ErrorLaw::ScaledMixture { base, scale } => scale * base.tail_quantile(prob)?,
            _ => {
                if prob >= 1.0 {
                    return Ok(0.0);
                }
                let mut hi = 1.0;
                while self.tail_prob_unchecked(hi) > prob {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.tail_prob_unchecked(mid) > prob {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        })
    }

    /// One draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::ParetoSymmetric { tail_index } => {
                let u: f64 = rng.sample(OpenClosed01);
                let magnitude = (1.0 / u - 1.0).powf(1.0 / tail_index);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            ErrorLaw::StudentT { dof } => StudentT::new(*dof).expect("validated degrees of freedom").sample(rng),
            ErrorLaw::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
            ErrorLaw::ScaledMixture { base, scale } => scale * base.draw(rng),
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.draw(rng);
        }
    }

    /// `n` i.i.d. draws, deterministic in `(self, seed, n)`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let mut out = vec![0.0; n];
        self.fill(&mut rng, &mut out);
        out
    }

    /// `||xi||_{p,1} = int_0^inf P(|xi| > t)^(1/p) dt`.
    pub fn lp1_norm(&self, p: f64) -> Result<Lp1Value> {
        self.validate()?;
        if !(p >= 1.0) || p.is_infinite() {
            return invalid(format!("lp1_norm needs 1 <= p < inf, got {p}"));
        }
        if let ErrorLaw::ScaledMixture { base, scale } = self {
            let inner = base.lp1_norm(p)?;
            return Ok(Lp1Value { p, value: scale * inner.value, quadrature_error: scale * inner.quadrature_error });
        }
        let q = self.tail_index();
        if q <= p {
            return Ok(Lp1Value::infinite(p));
        }
        let integral = self.tail_power_integral(1.0 / p, 0.0);
        Ok(Lp1Value { p, value: integral.value, quadrature_error: integral.error })
    }

    /// `int_from^inf P(|xi| > t)^power dt` for `power * tail_index > 1`.
    pub(crate) fn tail_power_integral(&self, power: f64, from: f64) -> Integral {
        let f = |t: f64| self.tail_prob_unchecked(t).powf(power);
        let model = match self.tail_asymptote() {
            Some((a, q)) => TailModel::Power { coef: a.powf(power), exponent: q * power },
            None => TailModel::Light,
        };
        integrate_tail(&f, from, model, QUAD_TOL)
    }

    /// Ordinary `L_p` norm `(E|xi|^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> Result<Lp1Value> {
        self.validate()?;
        if !(p >= 1.0) || p.is_infinite() {
            return invalid(format!("lp_norm needs 1 <= p < inf, got {p}"));
        }
        let q = self.tail_index();
        if q <= p {
            return Ok(Lp1Value::infinite(p));
        }
        let f = |t: f64| p * t.powf(p - 1.0) * self.tail_prob_unchecked(t);
        let model = match self.tail_asymptote() {
            Some((a, q)) => TailModel::Power { coef: p * a, exponent: q - p + 1.0 },
            None => TailModel::Light,
        };
        let moment = integrate_tail(&f, 0.0, model, QUAD_TOL);
        let value = moment.value.powf(1.0 / p);
        let quadrature_error =
            if moment.value > 0.0 { value / (p * moment.value) * moment.error } else { moment.error };
        Ok(Lp1Value { p, value, quadrature_error })
    }

    /// `E|xi|`, via the tail integral.
    pub fn mean_abs(&self) -> Result<f64> {
        let v = self.lp1_norm(1.0)?;
        if v.is_infinite() {
            return Err(Error::InfiniteNorm { p: 1.0, tail_index: self.tail_index() });
        }
        Ok(v.value)
    }
}

/// Value of a (possibly infinite) norm of an error law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lp1Value {
    pub p: f64,
    /// `f64::INFINITY` when the norm diverges.
    pub value: f64,
    pub quadrature_error: f64,
}

impl Lp1Value {
    fn infinite(p: f64) -> Self {
        Lp1Value { p, value: f64::INFINITY, quadrature_error: 0.0 }
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }

    /// The finite value, or an error naming the offending law.
    pub fn finite(&self, law: &ErrorLaw) -> Result<f64> {
        if self.is_infinite() {
            Err(Error::InfiniteNorm { p: self.p, tail_index: law.tail_index() })
        } else {
            Ok(self.value)
        }
    }
}

/// Free-function form of [`ErrorLaw::tail_prob`].
pub fn tail_prob(law: &ErrorLaw, t: f64) -> Result<f64> {
    law.tail_prob(t)
}

/// Free-function form of [`ErrorLaw::sample`].
pub fn sample(law: &ErrorLaw, seed: u64, n: usize) -> Vec<f64> {
    law.sample(seed, n)
}

/// Free-function form of [`ErrorLaw::lp1_norm`].
pub fn lp1_norm(law: &ErrorLaw, p: f64) -> Result<Lp1Value> {
    law.lp1_norm(p)
}

/// Monte Carlo estimate of `E max_{i <= n} |xi_i|`.
pub fn expected_max_mc(law: &ErrorLaw, n: usize, reps: usize, seed: u64) -> Result<McEstimate> {
    law.validate()?;
    if n == 0 || reps == 0 {
        return invalid("expected_max_mc needs n, reps >= 1");
    }
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, n, r);
            (0..n).map(|_| law.draw(&mut rng).abs()).fold(0.0, f64::max)
        })
        .collect();
    Ok(McEstimate::from_values(&values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_prob_examples() {
        assert_eq!(ErrorLaw::pareto(2.0).tail_prob(1.0).unwrap(), 0.5);
        assert_eq!(ErrorLaw::pareto(2.0).tail_prob(0.0).unwrap(), 1.0);
        assert_eq!(ErrorLaw::gaussian(1.0).tail_prob(0.0).unwrap(), 1.0);
        assert!((ErrorLaw::student_t(3.0).tail_prob(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(ErrorLaw::gaussian(1.0).tail_prob(-0.1).is_err());
    }

    #[test]
    fn gaussian_and_student_tails_match_known_values() {
        // P(|Z| > 1.959964) = 0.05
        let g = ErrorLaw::gaussian(1.0).tail_prob(1.959_963_984_540_054).unwrap();
        assert!((g - 0.05).abs() < 1e-12, "{g}");
        // Student t with 1 dof is Cauchy: P(|T| > 1) = 1/2.
        let c = ErrorLaw::student_t(1.0).tail_prob(1.0).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn student_asymptote_matches_tail() {
        let law = ErrorLaw::student_t(5.0);
        let (a, q) = law.tail_asymptote().unwrap();
        let t = 1e4;
        let ratio = law.tail_prob(t).unwrap() / (a * t.powf(-q));
        assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn scaled_law_rescales_tail_and_norm() {
        let base = ErrorLaw::pareto(4.0);
        let law = ErrorLaw::scaled(base.clone(), 3.0);
        assert_eq!(law.tail_prob(3.0).unwrap(), base.tail_prob(1.0).unwrap());
        let a = law.lp1_norm(2.0).unwrap().value;
        let b = base.lp1_norm(2.0).unwrap().value;
        assert!((a - 3.0 * b).abs() < 1e-9);
    }

    #[test]
    fn lp1_norm_rejects_p_below_one() {
        assert!(ErrorLaw::gaussian(1.0).lp1_norm(0.5).is_err());
    }

    #[test]
    fn lp1_infinity_flag() {
        assert!(ErrorLaw::pareto(2.0).lp1_norm(2.0).unwrap().is_infinite());
        assert!(!ErrorLaw::gaussian(1.0).lp1_norm(2.0).unwrap().is_infinite());
    }

    #[test]
    fn lp1_of_pareto_q4_p2_against_trapezoid() {
        // Independent oracle: with t = tan(theta) the integrand becomes
        // 1/sqrt(cos^4 + sin^4) on [0, pi/2], smooth at both ends.
        let m = 20_000;
        let h = std::f64::consts::FRAC_PI_2 / m as f64;
        let mut acc = 0.0;
        for k in 0..=m {
            let th = k as f64 * h;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            acc += w / (th.cos().powi(4) + th.sin().powi(4)).sqrt();
        }
        let oracle = acc * h;
        let v = ErrorLaw::pareto(4.0).lp1_norm(2.0).unwrap();
        assert!((v.value - oracle).abs() < 1e-8, "{} vs {}", v.value, oracle);
        assert!(v.quadrature_error < 1e-8 * (1.0 + v.value));
        // Closed form: Gamma(1/4)^2 / (4 sqrt(pi)).
        let exact = (2.0 * ln_gamma(0.25)).exp() / (4.0 * std::f64::consts::PI.sqrt());
        assert!((v.value - exact).abs() < 1e-9, "{} vs {}", v.value, exact);
    }

    #[test]
    fn mean_abs_of_gaussian() {
        let m = ErrorLaw::gaussian(2.0).mean_abs().unwrap();
        let exact = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((m - exact).abs() < 1e-9);
    }

    #[test]
    fn lp_norm_of_gaussian_is_sigma_at_two() {
        let v = ErrorLaw::gaussian(1.5).lp_norm(2.0).unwrap();
        assert!((v.value - 1.5).abs() < 1e-8, "{v:?}");
        assert!(ErrorLaw::pareto(2.0).lp_norm(2.0).unwrap().is_infinite());
    }

    #[test]
    fn tail_quantile_inverts_tail() {
        for law in [ErrorLaw::pareto(3.0), ErrorLaw::gaussian(1.0), ErrorLaw::student_t(4.0)] {
            for &p in &[0.9, 0.5, 0.01, 1e-6] {
                let t = law.tail_quantile(p).unwrap();
                assert!((law.tail_prob(t).unwrap() - p).abs() < 1e-9 * p.max(1e-3));
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let law = ErrorLaw::student_t(3.0);
        assert_eq!(law.sample(9, 100), law.sample(9, 100));
        assert_ne!(law.sample(9, 100), law.sample(10, 100));
        assert!(law.sample(9, 0).is_empty());
    }

    #[test]
    fn pareto_empirical_tail_matches() {
        let law = ErrorLaw::pareto(4.5);
        let n = 100_000;
        let xs = law.sample(1, n);
        let p = law.tail_prob(2.0).unwrap();
        let emp = xs.iter().filter(|x| x.abs() > 2.0).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((emp - p).abs() <= 3.0 * se, "{emp} vs {p}");
    }

    #[test]
    fn gaussian_sample_mean_in_clt_band() {
        let n = 100_000;
        let xs = ErrorLaw::gaussian(1.0).sample(7, n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn expected_max_of_near_degenerate_law() {
        let est = expected_max_mc(&ErrorLaw::gaussian(1e-12), 10, 50, 3).unwrap();
        assert!(est.mean <= 1e-10);
    }
}
