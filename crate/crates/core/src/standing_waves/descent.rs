//! Preconditioned descent with Schwarz symmetrization between steps: onto a
//! constraint manifold for the defocusing problems, over the Nehari set for
//! the focusing ones. The preconditioner is `P = -D2 + c`. Residuals are
//! measured against the linear term, `sup|r| / (c sup|U|)`.

use crate::grid::{self, Grid1D};
use crate::tridiag::ThomasFactor;

use super::functional::{nehari_scale_local, Constraint, Functional};

const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 1e3;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub u: Vec<f64>,
    /// Lagrange multiplier `μ` with `∇J ≈ μ ∇C` (constrained runs only).
    pub mu: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Functional value after every accepted step (first entry: the start).
    pub history: Vec<f64>,
}

pub(crate) struct Workspace {
    grid: Grid1D,
    order: Vec<usize>,
    scratch: Vec<f64>,
    precond: ThomasFactor<f64>,
}

impl Workspace {
    pub(crate) fn new(grid: Grid1D, c: f64) -> Self {
        let h = grid.spacing();
        let n = grid.n_points();
        let off = -1.0 / (h * h);
        Self {
            grid,
            order: grid.radial_order(),
            scratch: Vec::with_capacity(n),
            precond: ThomasFactor::constant(n, off, 2.0 / (h * h) + c, off),
        }
    }

    pub(crate) fn rearrange(&mut self, u: &mut [f64]) {
        grid::rearrange_values(&self.grid, &self.order, u, &mut self.scratch);
    }

    fn precondition(&self, g: &[f64]) -> Vec<f64> {
        let mut d = g.to_vec();
        self.precond.solve_in_place(&mut d);
        d
    }
}

fn dot(h: f64, a: &[f64], b: &[f64]) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` on `{C = target}`. `u0` must be feasible after rescaling.
pub(crate) fn constrained_descent(
    f: &Functional,
    cons: &Constraint,
    target: f64,
    u0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<DescentOutcome> {
    let g = f.grid;
    let h = g.spacing();
    let n = g.n_points();
    let mut ws = Workspace::new(g, f.c);
    let mut u = u0;
    cons.project(&g, &mut u, target)?;
    ws.rearrange(&mut u);
    let mut value = f.value(&u);
    let mut history = vec![value];
    let mut tau = 1.0;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut mu = 0.0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        f.gradient(&u, &mut grad);
        let gc: Vec<f64> = u.iter().map(|&x| cons.first(x)).collect();
        let dj = ws.precondition(&grad);
        let dc = ws.precondition(&gc);
        mu = dot(h, &dj, &gc) / dot(h, &dc, &gc);
        let r: Vec<f64> = grad.iter().zip(&gc).map(|(a, b)| a - mu * b).collect();
        residual = sup(&r) / (f.c * sup(&u));
        if residual <= tol {
            converged = true;
            break;
        }
        let d: Vec<f64> = dj.iter().zip(&dc).map(|(a, b)| a - mu * b).collect();
        let slope = dot(h, &r, &d);
        let mut accepted = false;
        while tau >= MIN_STEP {
            for ((t, &x), &dx) in trial.iter_mut().zip(&u).zip(&d) {
                *t = x - tau * dx;
            }
            if cons.project(&g, &mut trial, target).is_some() {
                ws.rearrange(&mut trial);
                let tv = f.value(&trial);
                if tv <= value - ARMIJO * tau * slope {
                    accepted = true;
                    value = tv;
                    break;
                }
            }
            tau *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut u, &mut trial);
        history.push(value);
        tau = (2.0 * tau).min(MAX_STEP);
        iterations += 1;
    }
    Some(DescentOutcome {
        u,
        mu,
        iterations,
        residual,
        converged,
        history,
    })
}

/// Minimizes `f` over its Nehari set. Each trial point is symmetrized and
/// then rescaled onto the set along its ray.
pub(crate) fn nehari_descent(f: &Functional, u0: Vec<f64>, tol: f64, max_iter: usize) -> Option<DescentOutcome> {
    let g = f.grid;
    let h = g.spacing();
    let n = g.n_points();
    let mut ws = Workspace::new(g, f.c);
    let mut u = u0;
    let mut value = f.value(&u);
    let mut history = vec![value];
    let mut tau = 1.0;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        f.gradient(&u, &mut grad);
        residual = sup(&grad) / (f.c * sup(&u));
        if residual <= tol {
            converged = true;
            break;
        }
        let d = ws.precondition(&grad);
        let slope = dot(h, &grad, &d);
        let mut accepted = false;
        while tau >= MIN_STEP {
            for ((t, &x), &dx) in trial.iter_mut().zip(&u).zip(&d) {
                *t = x - tau * dx;
            }
            ws.rearrange(&mut trial);
            if let Some(s) = nehari_scale_local(f, &trial, 1.0) {
                for x in trial.iter_mut() {
                    *x *= s;
                }
                let tv = f.value(&trial);
                if tv <= value - ARMIJO * tau * slope {
                    accepted = true;
                    value = tv;
                    break;
                }
            }
            tau *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut u, &mut trial);
        history.push(value);
        tau = (2.0 * tau).min(MAX_STEP);
        iterations += 1;
    }
    Some(DescentOutcome {
        u,
        mu: 0.0,
        iterations,
        residual,
        converged,
        history,
    })
}
