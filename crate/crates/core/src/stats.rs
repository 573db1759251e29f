use serde::{Deserialize, Serialize};

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

impl McEstimate {
    /// Summarizes replicate values in index order, so the result does not
    /// depend on how the replicates were scheduled.
    pub fn from_values(values: &[f64]) -> Self {
        let reps = values.len();
        if reps == 0 {
            return McEstimate { mean: f64::NAN, stderr: f64::NAN, reps };
        }
        let mean = values.iter().sum::<f64>() / reps as f64;
        let stderr = if reps > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (reps - 1) as f64 / reps as f64).sqrt()
        } else {
            0.0
        };
        McEstimate { mean, stderr, reps }
    }
}

/// Ordinary least squares of `y` on `x` with an intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r2: f64,
}

pub(crate) fn ols_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    LineFit { slope, intercept, slope_stderr, r2 }
}
