//! Banded linear solvers used by the implicit substeps, the preconditioner and
//! the Newton polish.

use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};

pub(crate) trait Scalar:
    Copy + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> Scalar for T where
    T: Copy + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>
{
}

/// LU factorization (no pivoting) of a tridiagonal matrix, reusable across
/// right-hand sides. Only for diagonally dominant systems.
#[derive(Debug, Clone)]
pub(crate) struct ThomasFactor<T> {
    lower: Vec<T>,
    upper_mod: Vec<T>,
    inv_pivot: Vec<T>,
}

impl<T: Scalar> ThomasFactor<T> {
    /// `lower[i]` multiplies `x[i-1]` in row `i` (entry 0 unused), `upper[i]`
    /// multiplies `x[i+1]` (last entry unused).
    pub(crate) fn new(lower: &[T], diag: &[T], upper: &[T]) -> Self {
        let n = diag.len();
        let mut upper_mod = vec![T::zero(); n];
        let mut inv_pivot = vec![T::zero(); n];
        let mut piv = diag[0];
        inv_pivot[0] = T::one() / piv;
        for i in 1..n {
            upper_mod[i - 1] = upper[i - 1] * inv_pivot[i - 1];
            piv = diag[i] - lower[i] * upper_mod[i - 1];
            inv_pivot[i] = T::one() / piv;
        }
        Self {
            lower: lower.to_vec(),
            upper_mod,
            inv_pivot,
        }
    }

    pub(crate) fn constant(n: usize, lower: T, diag: T, upper: T) -> Self {
        Self::new(&vec![lower; n], &vec![diag; n], &vec![upper; n])
    }

    pub(crate) fn solve_in_place(&self, rhs: &mut [T]) {
        let n = rhs.len();
        rhs[0] = rhs[0] * self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.upper_mod[i] * rhs[i + 1];
        }
    }
}

/// Solver for the periodic (cyclic) constant-coefficient tridiagonal system
/// `lower x[i-1] + diag x[i] + upper x[i+1] = rhs[i]` with wrap-around, by
/// Sherman–Morrison on top of [`ThomasFactor`].
#[derive(Debug, Clone)]
pub(crate) struct CyclicFactor<T> {
    inner: ThomasFactor<T>,
    z: Vec<T>,
    gamma: T,
    lower: T,
    denom: T,
}

impl<T: Scalar> CyclicFactor<T> {
    pub(crate) fn constant(n: usize, lower: T, diag: T, upper: T) -> Self {
        let gamma = T::zero() - diag;
        let mut d = vec![diag; n];
        d[0] = diag - gamma;
        d[n - 1] = diag - lower * upper / gamma;
        let inner = ThomasFactor::new(&vec![lower; n], &d, &vec![upper; n]);
        let mut z = vec![T::zero(); n];
        z[0] = gamma;
        z[n - 1] = upper;
        inner.solve_in_place(&mut z);
        let denom = T::one() + z[0] + lower * z[n - 1] / gamma;
        Self {
            inner,
            z,
            gamma,
            lower,
            denom,
        }
    }

    pub(crate) fn solve_in_place(&self, rhs: &mut [T]) {
        let n = rhs.len();
        self.inner.solve_in_place(rhs);
        let fact = (rhs[0] + self.lower * rhs[n - 1] / self.gamma) / self.denom;
        for i in 0..n {
            rhs[i] = rhs[i] - fact * self.z[i];
        }
    }
}

/// Gaussian elimination with partial pivoting for a general real tridiagonal
/// system. Returns `None` when the matrix is numerically singular.
pub(crate) fn solve_pivoted(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Option<()> {
    let n = diag.len();
    let mut d: Vec<f64> = diag.to_vec();
    let mut du: Vec<f64> = upper.to_vec();
    let mut du2 = vec![0.0; n];
    let mut dl: Vec<f64> = lower.to_vec();
    let scale = diag
        .iter()
        .chain(lower.iter())
        .chain(upper.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let tiny = scale * 1e-300_f64.max(f64::EPSILON * 1e-3);
    for i in 0..n - 1 {
        let sub = dl[i + 1];
        if d[i].abs() >= sub.abs() {
            if d[i].abs() <= tiny {
                return None;
            }
            let fact = sub / d[i];
            d[i + 1] -= fact * du[i];
            rhs[i + 1] -= fact * rhs[i];
            dl[i + 1] = 0.0;
        } else {
            let fact = d[i] / sub;
            d[i] = sub;
            let tmp = d[i + 1];
            d[i + 1] = du[i] - fact * tmp;
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = tmp;
            rhs.swap(i, i + 1);
            rhs[i + 1] -= fact * rhs[i];
        }
    }
    if d[n - 1].abs() <= tiny {
        return None;
    }
    rhs[n - 1] /= d[n - 1];
    if n > 1 {
        rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
    }
    if rhs.iter().all(|v| v.is_finite()) {
        Some(())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn apply(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn thomas_solves_dominant_system() {
        let n = 50;
        let lower: Vec<f64> = (0..n).map(|i| -1.0 + 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.9 - 0.003 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + (i as f64).sin()).collect();
        let x: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let mut b = apply(&lower, &diag, &upper, &x);
        ThomasFactor::new(&lower, &diag, &upper).solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn pivoted_solver_handles_indefinite_matrix() {
        let n = 40;
        let lower = vec![1.0; n];
        let upper = vec![1.0; n];
        // zero diagonal forces pivoting on every row
        let diag: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.0 } else { -0.5 }).collect();
        let x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mut b = apply(&lower, &diag, &upper, &x);
        solve_pivoted(&lower, &diag, &upper, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-11, "{a} vs {e}");
        }
    }

    #[test]
    fn cyclic_solver_matches_dense_wraparound() {
        let n = 16;
        let (l, d, u) = (Complex64::new(-0.3, 0.1), Complex64::new(1.5, -0.2), Complex64::new(-0.4, -0.05));
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let mut b: Vec<Complex64> = (0..n)
            .map(|i| l * x[(i + n - 1) % n] + d * x[i] + u * x[(i + 1) % n])
            .collect();
        CyclicFactor::constant(n, l, d, u).solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).norm() < 1e-12);
        }
    }
}
