//! Discrete actions `½(K(U) + c hΣU²) + hΣΦ(U)`, constraint functionals and
//! the Nehari projection along rays `t ↦ A(tU)`.

use crate::coupling::CubicBranches;
use crate::grid::{self, Grid1D};

/// Pointwise potential `Φ` of an action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    /// `Φ(u) = coef |u|^p / p + quartic u⁴ / 4`.
    Power { coef: f64, p: f64, quartic: f64 },
    /// `Φ(u) = ½ G(α (u⁺)²) - ¼ (u⁺)⁴`, `G` the antiderivative of the negative branch.
    NegBranch { branches: CubicBranches, alpha: f64 },
    /// `Φ(u) = ½ H(α u²) - ¼ (u⁺)⁴`, `H` the antiderivative of the capped positive branch.
    PosBranch { branches: CubicBranches, alpha: f64 },
}

impl Potential {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Potential::Power { coef, p, quartic } => {
                let mut v = 0.25 * quartic * u.powi(4);
                if coef != 0.0 {
                    v += coef * u.abs().powf(p) / p;
                }
                v
            }
            Potential::NegBranch { branches, alpha } => {
                if u <= 0.0 {
                    0.0
                } else {
                    0.5 * branches.negative_antiderivative(alpha * u * u) - 0.25 * u.powi(4)
                }
            }
            Potential::PosBranch { branches, alpha } => {
                let q = if u > 0.0 { 0.25 * u.powi(4) } else { 0.0 };
                0.5 * branches.positive_antiderivative(alpha * u * u) - q
            }
        }
    }

    pub fn first(&self, u: f64) -> f64 {
        match *self {
            Potential::Power { coef, p, quartic } => {
                let mut d = quartic * u * u * u;
                if coef != 0.0 {
                    d += coef * u.abs().powf(p - 2.0) * u;
                }
                d
            }
            Potential::NegBranch { branches, alpha } => {
                if u <= 0.0 {
                    0.0
                } else {
                    alpha * branches.negative(alpha * u * u) * u - u * u * u
                }
            }
            Potential::PosBranch { branches, alpha } => {
                let q = if u > 0.0 { u * u * u } else { 0.0 };
                alpha * branches.positive(alpha * u * u) * u - q
            }
        }
    }

    pub fn second(&self, u: f64) -> f64 {
        match *self {
            Potential::Power { coef, p, quartic } => {
                let mut d = 3.0 * quartic * u * u;
                if coef != 0.0 {
                    d += coef * (p - 1.0) * u.abs().powf(p - 2.0);
                }
                d
            }
            Potential::NegBranch { branches, alpha } => {
                if u <= 0.0 {
                    0.0
                } else {
                    let (g, sg) = branches.negative_with_scaled_derivative(alpha * u * u);
                    alpha * (g + 2.0 * sg) - 3.0 * u * u
                }
            }
            Potential::PosBranch { branches, alpha } => {
                let (h, sh) = branches.positive_with_scaled_derivative(alpha * u * u);
                let q = if u > 0.0 { 3.0 * u * u } else { 0.0 };
                alpha * (h + 2.0 * sh) - q
            }
        }
    }
}

/// `A(U) = ½(K(U) + c hΣU²) + hΣΦ(U)` on a grid, `K` the Dirichlet form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functional {
    pub grid: Grid1D,
    pub c: f64,
    pub potential: Potential,
}

impl Functional {
    /// `K(U) + c hΣU²`.
    pub fn quadratic(&self, u: &[f64]) -> f64 {
        grid::dirichlet_form(&self.grid, u) + self.c * self.grid.spacing() * u.iter().map(|x| x * x).sum::<f64>()
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        0.5 * self.quadratic(u) + self.grid.spacing() * u.iter().map(|&x| self.potential.value(x)).sum::<f64>()
    }

    /// Pointwise gradient `-D2 U + c U + Φ'(U)`; the first variation is
    /// `h Σ gradient · δU`.
    pub fn gradient(&self, u: &[f64], out: &mut [f64]) {
        grid::laplacian_into(&self.grid, u, out);
        for (o, &x) in out.iter_mut().zip(u) {
            *o = -*o + self.c * x + self.potential.first(x);
        }
    }

    /// `(φ'(t), φ''(t))` for `φ(t) = A(tU)`, given `q = quadratic(U)`.
    pub fn ray_derivatives(&self, u: &[f64], q: f64, t: f64) -> (f64, f64) {
        let h = self.grid.spacing();
        let (mut d1, mut d2) = (0.0, 0.0);
        for &x in u {
            d1 += x * self.potential.first(t * x);
            d2 += x * x * self.potential.second(t * x);
        }
        (t * q + h * d1, q + h * d2)
    }

    pub fn ray_value(&self, u: &[f64], q: f64, t: f64) -> f64 {
        0.5 * t * t * q + self.grid.spacing() * u.iter().map(|&x| self.potential.value(t * x)).sum::<f64>()
    }

    /// `A'(U)[U]`.
    pub fn nehari_derivative(&self, u: &[f64]) -> f64 {
        self.ray_derivatives(u, self.quadratic(u), 1.0).0
    }
}

/// Constraint functionals `C(U) = hΣc(U)` of the defocusing problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// `c(u) = |u|^p`.
    Power { p: f64 },
    /// `c(u) = G(α u²)`.
    GBranch { branches: CubicBranches, alpha: f64 },
}

impl Constraint {
    pub fn value(&self, grid: &Grid1D, u: &[f64]) -> f64 {
        grid.spacing() * u.iter().map(|&x| self.pointwise(x)).sum::<f64>()
    }

    fn pointwise(&self, u: f64) -> f64 {
        match *self {
            Constraint::Power { p } => u.abs().powf(p),
            Constraint::GBranch { branches, alpha } => branches.negative_antiderivative(alpha * u * u),
        }
    }

    pub fn first(&self, u: f64) -> f64 {
        match *self {
            Constraint::Power { p } => p * u.abs().powf(p - 2.0) * u,
            Constraint::GBranch { branches, alpha } => 2.0 * alpha * u * branches.negative(alpha * u * u),
        }
    }

    pub fn second(&self, u: f64) -> f64 {
        match *self {
            Constraint::Power { p } => p * (p - 1.0) * u.abs().powf(p - 2.0),
            Constraint::GBranch { branches, alpha } => {
                let (g, sg) = branches.negative_with_scaled_derivative(alpha * u * u);
                2.0 * alpha * (g + 2.0 * sg)
            }
        }
    }

    /// Rescales `u` onto `{C = target}`. The power constraint is homogeneous;
    /// `C(sU)` for the branch constraint is strictly decreasing in `s > 0`
    /// from 0 to -∞, so a negative target has exactly one preimage.
    pub fn project(&self, grid: &Grid1D, u: &mut [f64], target: f64) -> Option<f64> {
        let current = self.value(grid, u);
        let s = match *self {
            Constraint::Power { p } => {
                if !(current > 0.0) || !(target > 0.0) {
                    return None;
                }
                (target / current).powf(1.0 / p)
            }
            Constraint::GBranch { branches, alpha } => {
                if !(target < 0.0) || !(current < 0.0) {
                    return None;
                }
                let h = grid.spacing();
                let eval = |s: f64| {
                    let (mut c, mut dc) = (0.0, 0.0);
                    for &x in u.iter() {
                        let sx2 = alpha * s * s * x * x;
                        c += branches.negative_antiderivative(sx2);
                        dc += 2.0 * alpha * s * x * x * branches.negative(sx2);
                    }
                    (h * c - target, h * dc)
                };
                let (mut lo, mut hi) = (1.0, 1.0);
                while eval(lo).0 <= 0.0 {
                    lo *= 0.5;
                    if lo < 1e-300 {
                        return None;
                    }
                }
                while eval(hi).0 >= 0.0 {
                    hi *= 2.0;
                    if hi > 1e300 {
                        return None;
                    }
                }
                let mut s = 0.5 * (lo + hi);
                for _ in 0..200 {
                    let (r, dr) = eval(s);
                    if r == 0.0 {
                        break;
                    }
                    if r > 0.0 {
                        lo = s;
                    } else {
                        hi = s;
                    }
                    let mut next = s - r / dr;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - s).abs() <= 1e-16 * s {
                        s = next;
                        break;
                    }
                    s = next;
                }
                s
            }
        };
        for x in u.iter_mut() {
            *x *= s;
        }
        Some(s)
    }
}

/// Refines a downward crossing of `φ'` inside `[lo, hi]` (`φ'(lo) > 0 > φ'(hi)`).
fn refine_crossing(f: &Functional, u: &[f64], q: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut t = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, t);
    for _ in 0..200 {
        let (d1, d2) = f.ray_derivatives(u, q, t);
        if d1.abs() < best.0 {
            best = (d1.abs(), t);
        }
        if d1 == 0.0 || d1.abs() <= 1e-15 * t * q {
            return t;
        }
        if d1 > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let newton = t - d1 / d2;
        t = if d2 != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    best.1
}

/// Bracket `[lo, hi]` around `start` with `φ'(lo) > 0` and `φ'(hi) < 0`.
fn bracket(f: &Functional, u: &[f64], q: f64, start: f64, factor: f64) -> Option<(f64, f64)> {
    let mut lo = start;
    let mut n = 0;
    while f.ray_derivatives(u, q, lo).0 <= 0.0 {
        lo /= factor;
        n += 1;
        if n > 4000 || lo < 1e-300 {
            return None;
        }
    }
    let mut hi = start.max(lo);
    n = 0;
    while f.ray_derivatives(u, q, hi).0 >= 0.0 {
        hi *= factor;
        n += 1;
        if n > 4000 || !hi.is_finite() {
            return None;
        }
    }
    Some((lo, hi))
}

const SCAN_POINTS: usize = 256;

/// Maximizer `t* > 0` of `t ↦ A(tU)` over its positive critical points:
/// scans a log-uniform grid between a positive and a negative sample of `φ'`
/// for downward crossings and keeps the one with the largest `A(tU)`.
pub fn nehari_scale_global(f: &Functional, u: &[f64]) -> Option<f64> {
    let q = f.quadratic(u);
    if !(q > 0.0) {
        return None;
    }
    let (lo, hi) = bracket(f, u, q, 1.0, 2.0)?;
    let ratio = (hi / lo).ln();
    let mut best: Option<(f64, f64)> = None;
    let mut prev_t = lo;
    let mut prev_d = f.ray_derivatives(u, q, lo).0;
    for k in 1..=SCAN_POINTS {
        let t = if k == SCAN_POINTS { hi } else { lo * (ratio * k as f64 / SCAN_POINTS as f64).exp() };
        let d = f.ray_derivatives(u, q, t).0;
        if prev_d > 0.0 && d <= 0.0 {
            let root = if d == 0.0 { t } else { refine_crossing(f, u, q, prev_t, t) };
            let val = f.ray_value(u, q, root);
            if best.is_none_or(|(_, b)| val > b) {
                best = Some((root, val));
            }
        }
        prev_t = t;
        prev_d = d;
    }
    best.map(|(t, _)| t)
}

/// Nearest downward crossing of `φ'` around `start`.
pub(crate) fn nehari_scale_local(f: &Functional, u: &[f64], start: f64) -> Option<f64> {
    let q = f.quadratic(u);
    if !(q > 0.0) {
        return None;
    }
    let (lo, hi) = bracket(f, u, q, start, 1.25)?;
    Some(refine_crossing(f, u, q, lo, hi))
}
