use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::rng::stream_rng;

const STEPS_PER_START: usize = 400;

/// Upper estimate of the compatibility constant
/// `sqrt|S| min { ||X theta_S - X theta_Sc||_2 / sqrt n : ||theta_S||_1 = 1, ||theta_Sc||_1 <= L }`.
///
/// The objective is convex once the sign pattern of `theta_S` is fixed,
/// so each of the `search_budget` starts fixes a pattern (all of them in
/// turn when few enough, else random ones), draws a random feasible
/// point and runs projected gradient descent with backtracking. The
/// smallest value found is returned; it can only overstate the minimum.
pub fn estimate_compatibility(
    design: &Array2<f64>,
    support: &[usize],
    l: f64,
    search_budget: usize,
    seed: u64,
) -> Result<f64> {
    let d = design.ncols();
    let n = design.nrows();
    if support.is_empty() {
        return invalid("support set must be nonempty");
    }
    if support.iter().any(|&j| j >= d) {
        return invalid(format!("support index out of range for {d} columns"));
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != support.len() {
        return invalid("support indices must be distinct");
    }
    if !(l >= 0.0) || !l.is_finite() {
        return invalid(format!("L must be finite and non-negative, got {l}"));
    }
    if n == 0 || search_budget == 0 {
        return invalid("need a nonempty design and a positive search budget");
    }
    let rest: Vec<usize> = (0..d).filter(|j| sorted.binary_search(j).is_err()).collect();
    let xs = design.select(Axis(1), &sorted);
    let xc = design.select(Axis(1), &rest);
    let s = sorted.len();
    let patterns = if s <= 20 && (1usize << (s - 1)) <= search_budget { Some(1usize << (s - 1)) } else { None };

    let mut rng = stream_rng(seed, 7);
    let mut best = f64::INFINITY;
    for start in 0..search_budget {
        // Patterns and their negatives give the same value: fix sign[0] = +.
        let signs: Vec<f64> = (0..s)
            .map(|k| match (k, patterns) {
                (0, _) => 1.0,
                (_, Some(p)) => {
                    if (start % p) >> (k - 1) & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                }
                (_, None) => {
                    if rng.random_bool(0.5) {
                        -1.0
                    } else {
                        1.0
                    }
                }
            })
            .collect();
        let mut v: Vec<f64> = (0..s).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        let mut w: Vec<f64> = (0..rest.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        project_l1_ball(&mut w, l * rng.random::<f64>());
        let value = descend(&xs, &xc, &signs, v, w, l, n as f64);
        best = best.min(value);
    }
    Ok((s as f64).sqrt() * best.max(0.0).sqrt())
}

/// Projected gradient on `(1/n) ||X_S (sign . v) - X_Sc w||^2` over the
/// simplex in `v` and the `L`-ball in `w`.
fn descend(xs: &Array2<f64>, xc: &Array2<f64>, signs: &[f64], mut v: Vec<f64>, mut w: Vec<f64>, l: f64, n: f64) -> f64 {
    let eval = |v: &[f64], w: &[f64]| -> (f64, Array1<f64>) {
        let u = Array1::from_iter(v.iter().zip(signs).map(|(a, b)| a * b));
        let mut r = xs.dot(&u);
        if !w.is_empty() {
            r -= &xc.dot(&Array1::from(w.to_vec()));
        }
        (r.dot(&r) / n, r)
    };
    let (mut f, mut r) = eval(&v, &w);
    // Reciprocal of a Lipschitz bound, so the iterates are scale-free.
    let frob: f64 = xs.iter().chain(xc.iter()).map(|x| x * x).sum();
    let mut step = if frob > 0.0 { n / (2.0 * frob) } else { return f };
    for _ in 0..STEPS_PER_START {
        let gs = xs.t().dot(&r) * (2.0 / n);
        let gv: Vec<f64> = gs.iter().zip(signs).map(|(g, s)| g * s).collect();
        let gw: Vec<f64> = if w.is_empty() { Vec::new() } else { (xc.t().dot(&r) * (-2.0 / n)).to_vec() };
        let mut accepted = false;
        for _ in 0..60 {
            let mut nv: Vec<f64> = v.iter().zip(&gv).map(|(a, g)| a - step * g).collect();
            project_simplex(&mut nv, 1.0);
            let mut nw: Vec<f64> = w.iter().zip(&gw).map(|(a, g)| a - step * g).collect();
            project_l1_ball(&mut nw, l);
            let (nf, nr) = eval(&nv, &nw);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for (k, (&a, &b)) in nv.iter().zip(&v).enumerate() {
                lin += gv[k] * (a - b);
                quad += (a - b) * (a - b);
            }
            for (k, (&a, &b)) in nw.iter().zip(&w).enumerate() {
                lin += gw[k] * (a - b);
                quad += (a - b) * (a - b);
            }
            if nf <= f + lin + quad / (2.0 * step) + 1e-15 * f.abs() {
                let moved = quad;
                v = nv;
                w = nw;
                f = nf;
                r = nr;
                accepted = true;
                step *= 1.5;
                if moved == 0.0 {
                    return f;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    f
}

/// Euclidean projection onto `{v >= 0, sum v = radius}`.
fn project_simplex(v: &mut [f64], radius: f64) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - radius) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

/// Euclidean projection onto the `l1` ball of the given radius.
fn project_l1_ball(w: &mut [f64], radius: f64) {
    let norm: f64 = w.iter().map(|x| x.abs()).sum();
    if norm <= radius {
        return;
    }
    if radius <= 0.0 {
        w.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut a: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    project_simplex(&mut a, radius);
    for (x, m) in w.iter_mut().zip(a) {
        *x = x.signum() * m;
    }
}
