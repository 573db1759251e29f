use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{invalid, Error, Result};
use crate::noise_models::ErrorLaw;
use crate::scalar::Scalar;

/// `min_theta (1/n) ||Y - X theta||^2 + lambda ||theta||_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoProblem<T> {
    design: Array2<T>,
    response: Array1<T>,
    lambda: T,
}

impl<T: Scalar> LassoProblem<T> {
    pub fn new(design: Array2<T>, response: Array1<T>, lambda: T) -> Result<Self> {
        if design.nrows() != response.len() {
            return invalid(format!("design has {} rows but response has {}", design.nrows(), response.len()));
        }
        if design.nrows() == 0 || design.ncols() == 0 {
            return invalid("empty design");
        }
        if design.iter().chain(response.iter()).any(|v| !v.is_finite()) {
            return invalid("design and response must be finite");
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return invalid(format!("lambda must be finite and non-negative, got {lambda}"));
        }
        Ok(LassoProblem { design, response, lambda })
    }

    pub fn design(&self) -> &Array2<T> {
        &self.design
    }

    pub fn response(&self) -> &Array1<T> {
        &self.response
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::new(self.design.clone(), self.response.clone(), lambda)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn d(&self) -> usize {
        self.design.ncols()
    }

    pub fn objective(&self, theta: &[T]) -> T {
        let r = self.residual(theta);
        let n = T::from_usize_lossy(self.n());
        let l1 = theta.iter().fold(T::zero(), |a, v| a + v.abs());
        r.dot(&r) / n + self.lambda * l1
    }

    fn residual(&self, theta: &[T]) -> Array1<T> {
        &self.response - &self.design.dot(&ArrayView1::from(theta))
    }

    /// `(2/n) X^T (Y - X theta)`, the negative gradient of the loss.
    pub fn score(&self, theta: &[T]) -> Array1<T> {
        let r = self.residual(theta);
        let scale = T::two() / T::from_usize_lossy(self.n());
        self.design.t().dot(&r).mapv(|v| v * scale)
    }

    /// `(2/n) ||X^T Y||_inf`: every `lambda` at or above it gives `theta = 0`.
    pub fn lambda_max(&self) -> T {
        self.score(&vec![T::zero(); self.d()]).iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }
}

impl LassoProblem<f64> {
    /// Loads `response, x_1, ..., x_d` rows; a leading non-numeric row is
    /// taken as a header.
    pub fn from_csv_reader<R: Read>(reader: R, lambda: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => rows.push(v),
                Err(_) if k == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("row {}: {e}", k + 1))),
            }
        }
        let Some(width) = rows.first().map(Vec::len) else {
            return Err(Error::Parse("no data rows".into()));
        };
        if width < 2 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Parse("rows need a response and at least one design column, all of equal width".into()));
        }
        let n = rows.len();
        let response = Array1::from_iter(rows.iter().map(|r| r[0]));
        let design = Array2::from_shape_fn((n, width - 1), |(i, j)| rows[i][j + 1]);
        Self::new(design, response, lambda)
    }

    pub fn from_csv(path: impl AsRef<Path>, lambda: f64) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(f, lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit<T> {
    pub theta: Vec<T>,
    /// Duality gap of the objective at `theta`, from the rescaled residual.
    pub dual_gap: T,
    pub iterations: usize,
    pub converged: bool,
    pub objective: T,
}

/// Cyclic coordinate descent with soft thresholding.
///
/// Stops after a sweep whose largest coordinate move is below `tol` and
/// whose subgradient violation is at most `tol`; after `max_iter` sweeps
/// it returns the current iterate with `converged = false`.
pub fn fit_lasso_cd<T: Scalar>(problem: &LassoProblem<T>, tol: T, max_iter: usize) -> Result<LassoFit<T>> {
    if !(tol > T::zero()) {
        return invalid(format!("tol must be positive, got {tol}"));
    }
    let n = problem.n();
    let d = problem.d();
    let nf = T::from_usize_lossy(n);
    let half_lambda = problem.lambda / T::two();
    let cols = problem.design.t().as_standard_layout().into_owned();
    let col_sq: Vec<T> = cols.rows().into_iter().map(|c| c.dot(&c) / nf).collect();
    let mut theta = vec![T::zero(); d];
    let mut r = problem.response.to_vec();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut max_move = T::zero();
        for j in 0..d {
            if col_sq[j] == T::zero() {
                continue;
            }
            let col = cols.row(j);
            let col = col.as_slice().expect("standard layout");
            let dot = col.iter().zip(&r).fold(T::zero(), |a, (&u, &v)| a + u * v);
            let rho = dot / nf + col_sq[j] * theta[j];
            let new = soft_threshold(rho, half_lambda) / col_sq[j];
            let delta = new - theta[j];
            if delta != T::zero() {
                for (ri, &xi) in r.iter_mut().zip(col) {
                    *ri = *ri - xi * delta;
                }
                theta[j] = new;
                max_move = max_move.max(delta.abs());
            }
        }
        if max_move < tol && kkt_violation(problem, &theta) <= tol {
            converged = true;
            break;
        }
    }
    Ok(LassoFit {
        dual_gap: dual_gap(problem, &theta),
        objective: problem.objective(&theta),
        theta,
        iterations,
        converged,
    })
}

fn soft_threshold<T: Scalar>(v: T, t: T) -> T {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        T::zero()
    }
}

/// Largest violation of the Lasso optimality conditions: `|g_j| <= lambda`
/// where `theta_j = 0` and `g_j = lambda sign(theta_j)` elsewhere, with
/// `g = (2/n) X^T (Y - X theta)`.
pub fn kkt_violation<T: Scalar>(problem: &LassoProblem<T>, theta: &[T]) -> T {
    let g = problem.score(theta);
    let lam = problem.lambda;
    g.iter().zip(theta).fold(T::zero(), |worst, (&gj, &tj)| {
        let v = if tj == T::zero() { (gj.abs() - lam).max(T::zero()) } else { (gj - lam * tj.signum()).abs() };
        worst.max(v)
    })
}

/// `true` when `theta` satisfies the optimality conditions within `10 tol`.
pub fn kkt_check<T: Scalar>(problem: &LassoProblem<T>, theta: &[T], tol: T) -> bool {
    kkt_violation(problem, theta) <= T::from_f64_lossy(10.0) * tol
}

/// Primal objective minus the dual value at the residual rescaled into
/// the dual feasible set.
fn dual_gap<T: Scalar>(problem: &LassoProblem<T>, theta: &[T]) -> T {
    let n = T::from_usize_lossy(problem.n());
    let r = problem.residual(theta);
    let r2 = r.dot(&r);
    // Work in the (1/2)||r||^2 + a ||theta||_1 scaling with a = n lambda / 2.
    let a = n * problem.lambda / T::two();
    let xtr = problem.design.t().dot(&r);
    let dual_norm = xtr.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    // With lambda = 0 the only feasible duals are orthogonal to the
    // columns; the unscaled residual is used as is.
    let (scale, gap) = if dual_norm > a && a > T::zero() {
        let s = a / dual_norm;
        (s, (r2 + r2 * s * s) / T::two())
    } else {
        (T::one(), r2)
    };
    let l1 = theta.iter().fold(T::zero(), |acc, v| acc + v.abs());
    let gap = gap + a * l1 - scale * r.dot(&problem.response);
    (T::two() * gap / n).max(T::zero())
}

/// Tuning `lambda = 2 L ||xi||_{1/alpha,1} sqrt(log d / n)`.
pub fn lasso_lambda_rule(law: &ErrorLaw, alpha: f64, l: f64, n: usize, d: usize) -> Result<f64> {
    if !(0.25..=0.5).contains(&alpha) {
        return invalid(format!("alpha must lie in [1/4, 1/2], got {alpha}"));
    }
    if !(l > 0.0) || !l.is_finite() {
        return invalid(format!("L must be positive, got {l}"));
    }
    if n == 0 || d == 0 {
        return invalid("n and d must be positive");
    }
    let norm = law.lp1_norm(1.0 / alpha)?;
    if norm.is_infinite() {
        return Err(Error::InfiniteNorm { p: 1.0 / alpha, tail_index: law.tail_index() });
    }
    Ok(2.0 * l * norm.value * ((d as f64).ln() / n as f64).sqrt())
}
