//! Newton polish of even critical points on the half grid `x > 0`.
//!
//! Restricting to even profiles removes the translation mode, so the
//! Jacobian (tridiagonal, possibly indefinite) is invertible at a
//! nondegenerate ground state. Constrained problems use the bordered system
//! for `(δU, δμ)`, solved with two tridiagonal solves.

use crate::tridiag::solve_pivoted;

use super::functional::{Constraint, Functional};

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Expands the half-grid values of an even profile to the full grid.
fn expand(half: &[f64], full: &mut [f64]) {
    let m = half.len();
    for (i, &x) in half.iter().enumerate() {
        full[m + i] = x;
        full[m - 1 - i] = x;
    }
}

/// Solves `∇f(U) = μ ∇C(U)`, `C(U) = target` (or `∇f(U) = 0` without a
/// constraint) starting from the even profile `u`, which is updated in place.
/// The residual is `‖∇f - μ∇C‖∞ / (1 + ‖U‖∞)`.
pub(crate) fn polish(
    f: &Functional,
    constraint: Option<(&Constraint, f64)>,
    u: &mut [f64],
    mu0: f64,
    tol: f64,
    max_iter: usize,
) -> NewtonOutcome {
    let g = f.grid;
    let n = g.n_points();
    let m = n / 2;
    let h = g.spacing();
    let inv_h2 = 1.0 / (h * h);
    let mut half: Vec<f64> = u[m..].to_vec();
    let mut full = u.to_vec();
    expand(&half, &mut full);
    let mut grad = vec![0.0; n];
    let mut mu = mu0;

    let eval = |full: &[f64], grad: &mut [f64], mu: f64| -> (Vec<f64>, f64, f64) {
        f.gradient(full, grad);
        let r: Vec<f64> = match constraint {
            Some((c, _)) => (m..n).map(|j| grad[j] - mu * c.first(full[j])).collect(),
            None => grad[m..].to_vec(),
        };
        let gap = match constraint {
            Some((c, target)) => (c.value(&g, full) - target) / target.abs().max(1.0),
            None => 0.0,
        };
        let res = sup(&r) / (1.0 + sup(full));
        (r, gap, res)
    };

    let (mut r, mut gap, mut res) = eval(&full, &mut grad, mu);
    let mut iterations = 0;
    while iterations < max_iter && (res > tol || gap.abs() > 1e-14) {
        let mut diag: Vec<f64> = half
            .iter()
            .map(|&x| {
                let mut d = 2.0 * inv_h2 + f.c + f.potential.second(x);
                if let Some((c, _)) = constraint {
                    d -= mu * c.second(x);
                }
                d
            })
            .collect();
        diag[0] -= inv_h2;
        let off = vec![-inv_h2; m];
        let mut a: Vec<f64> = r.iter().map(|x| -x).collect();
        if solve_pivoted(&off, &diag, &off, &mut a).is_none() {
            break;
        }
        let (step, dmu) = match constraint {
            None => (a, 0.0),
            Some((c, target)) => {
                let gc: Vec<f64> = half.iter().map(|&x| c.first(x)).collect();
                let mut b = gc.clone();
                if solve_pivoted(&off, &diag, &off, &mut b).is_none() {
                    break;
                }
                let current = c.value(&g, &full);
                let ga: f64 = 2.0 * h * gc.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>();
                let gb: f64 = 2.0 * h * gc.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
                let dmu = (target - current - ga) / gb;
                (a.iter().zip(&b).map(|(x, y)| x + dmu * y).collect(), dmu)
            }
        };
        // damped update: halve until the residual does not grow
        let before = res + gap.abs();
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = half.iter().zip(&step).map(|(x, s)| x + lambda * s).collect();
            expand(&trial, &mut full);
            let (tr, tg, tres) = eval(&full, &mut grad, mu + lambda * dmu);
            if tres.is_finite() && (tres + tg.abs() <= before || lambda < 1e-3) {
                half = trial;
                mu += lambda * dmu;
                r = tr;
                gap = tg;
                res = tres;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        iterations += 1;
        if !accepted || (lambda < 1e-3 && res + gap.abs() >= before) {
            expand(&half, &mut full);
            break;
        }
    }
    expand(&half, u);
    NewtonOutcome {
        iterations,
        residual: res,
        converged: res <= tol,
    }
}
