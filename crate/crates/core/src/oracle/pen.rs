use serde::{Deserialize, Serialize};

use crate::model::ExplicitScenarioTree;
use crate::penalty::{exact_grad_f_theta, f_theta_raw, SmoothingParam};
use crate::{Error, Result};

pub const PEN_MAX_ITERS: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Gradient-mapping norm at termination.
    pub residual: f64,
}

fn full_gradient(tree: &ExplicitScenarioTree, x: &[f64], theta: SmoothingParam) -> Result<Vec<f64>> {
    let g = exact_grad_f_theta(tree, x, theta)?;
    Ok(g.iter().zip(tree.nodes()).map(|(g, n)| g * n.prob).collect())
}

fn project(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// `OPT_{pen^θ} = max_{X ∈ [0,1]} f^θ(X)` by accelerated projected gradient
/// ascent with backtracking and adaptive restart, stopped once the gradient
/// mapping norm is at most `tol`.
pub fn solve_pen_explicit(tree: &ExplicitScenarioTree, theta: SmoothingParam, tol: f64) -> Result<PenSolution> {
    let n = tree.len();
    let f = |x: &[f64]| f_theta_raw(tree, x, theta);
    let mut x = vec![0.0; n];
    let mut fx = f(&x)?;
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut lip = 1.0f64;
    for iter in 1..=PEN_MAX_ITERS {
        let fy = f(&y)?;
        let gy = full_gradient(tree, &y, theta)?;
        let (next, f_next) = loop {
            let cand: Vec<f64> = y.iter().zip(&gy).map(|(y, g)| project(y + g / lip)).collect();
            let fc = f(&cand)?;
            let lin: f64 = cand.iter().zip(&y).zip(&gy).map(|((c, y), g)| g * (c - y)).sum();
            let sq: f64 = cand.iter().zip(&y).map(|(c, y)| (c - y) * (c - y)).sum();
            if fc >= fy + lin - 0.5 * lip * sq - 1e-13 * fy.abs().max(1.0) {
                break (cand, fc);
            }
            lip *= 2.0;
            if !lip.is_finite() {
                return Err(Error::NonConvergence("backtracking diverged".into()));
            }
        };
        let residual = lip * next.iter().zip(&y).map(|(c, y)| (c - y) * (c - y)).sum::<f64>().sqrt();
        if residual <= tol {
            let (x_best, f_best) = if f_next >= fx { (next, f_next) } else { (x, fx) };
            return Ok(PenSolution { value: f_best, x: x_best, iterations: iter, residual });
        }
        // Restart the momentum from the last iterate on a (non-roundoff)
        // decrease; right after a restart the step is a plain projected
        // gradient step and is taken as is.
        if t > 1.0 && f_next < fx - 1e-14 * fx.abs().max(1.0) {
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = next.iter().zip(&x).map(|(a, b)| project(a + beta * (a - b))).collect();
        x = next;
        fx = f_next;
        t = t_next;
        lip = (lip * 0.9).max(1e-12);
    }
    Err(Error::NonConvergence(format!("gradient mapping above {tol} after {PEN_MAX_ITERS} iterations")))
}
