//! Uniform 1D grids, discrete calculus and the discrete Schwarz symmetrization.
//!
//! Two boundary conventions are supported:
//!
//! * [`Boundary::Periodic`]: nodes `x_j = -L + j h`, `j = 0..N`, with `x_0 = -L`
//!   identified with `L`.
//! * [`Boundary::DecayTruncated`]: cell-centred nodes `x_j = -L + (j + 1/2) h`
//!   and zero extension beyond the last node on either side. The node set is
//!   exactly symmetric about the origin.
//!
//! In both modes `h * N = 2L` and the quadrature rule is `h * sum(f)`, which is
//! the rectangle rule on the torus and the trapezoidal rule of the
//! zero-extended sequence on the line.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("half_length must be positive and finite, got {0}")]
    InvalidHalfLength(f64),
    #[error("n_points must be even and at least 8, got {0}")]
    InvalidPointCount(usize),
    #[error("field has {found} values but the grid has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    DecayTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_length: f64,
    n_points: usize,
    spacing: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(half_length: f64, n_points: usize, boundary: Boundary) -> Result<Self, GridError> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(GridError::InvalidHalfLength(half_length));
        }
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(GridError::InvalidPointCount(n_points));
        }
        Ok(Self {
            half_length,
            n_points,
            spacing: 2.0 * half_length / n_points as f64,
            boundary,
        })
    }

    pub fn periodic(half_length: f64, n_points: usize) -> Result<Self, GridError> {
        Self::new(half_length, n_points, Boundary::Periodic)
    }

    pub fn decay_truncated(half_length: f64, n_points: usize) -> Result<Self, GridError> {
        Self::new(half_length, n_points, Boundary::DecayTruncated)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Coordinate of node `j`.
    pub fn x(&self, j: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => -self.half_length + j as f64 * self.spacing,
            Boundary::DecayTruncated => -self.half_length + (j as f64 + 0.5) * self.spacing,
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Mirror image of node `j` under `x -> -x`.
    pub fn mirror(&self, j: usize) -> usize {
        let n = self.n_points;
        match self.boundary {
            Boundary::Periodic => (n - j) % n,
            Boundary::DecayTruncated => n - 1 - j,
        }
    }

    /// Node indices ordered by increasing `|x|`; among equal `|x|` the node
    /// with `x <= 0` comes first. Computed from integer offsets so pairs tie
    /// exactly.
    pub fn radial_order(&self) -> Vec<usize> {
        let n = self.n_points as i64;
        let mut idx: Vec<usize> = (0..self.n_points).collect();
        let key = |j: usize| -> (i64, i64) {
            let j = j as i64;
            let twice = match self.boundary {
                Boundary::Periodic => 2 * j - n,
                Boundary::DecayTruncated => 2 * j + 1 - n,
            };
            (twice.abs(), twice)
        };
        idx.sort_by_key(|&j| key(j));
        idx
    }

    fn check_len(&self, len: usize) -> Result<(), GridError> {
        if len == self.n_points {
            Ok(())
        } else {
            Err(GridError::LengthMismatch {
                expected: self.n_points,
                found: len,
            })
        }
    }
}

/// Scalar types that can live on a grid.
pub trait GridScalar:
    Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn modulus(self) -> f64;
    fn modulus_sqr(self) -> f64;
}

impl GridScalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn modulus_sqr(self) -> f64 {
        self * self
    }
}

impl GridScalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
}

/// Values sampled at the nodes of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid1D,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: GridScalar> Field<T> {
    pub fn new(grid: Grid1D, values: Vec<T>) -> Result<Self, GridError> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.n_points],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> T) -> Self {
        Self {
            grid,
            values: (0..grid.n_points).map(|j| f(grid.x(j))).collect(),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<S: GridScalar>(&self, f: impl Fn(T) -> S) -> Field<S> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Three-point second difference.
    pub fn second_derivative(&self) -> Self {
        let mut out = vec![T::zero(); self.values.len()];
        laplacian_into(&self.grid, &self.values, &mut out);
        Self {
            grid: self.grid,
            values: out,
        }
    }

    /// Central first difference.
    pub fn first_derivative(&self) -> Self {
        let mut out = vec![T::zero(); self.values.len()];
        central_diff_into(&self.grid, &self.values, &mut out);
        Self {
            grid: self.grid,
            values: out,
        }
    }

    /// `(∫|f|^p)^{1/p}`.
    pub fn norm_lp(&self, p: f64) -> f64 {
        debug_assert!(p >= 1.0);
        let s: f64 = self.values.iter().map(|z| z.modulus().powf(p)).sum();
        (self.grid.spacing * s).powf(1.0 / p)
    }

    pub fn norm_l2(&self) -> f64 {
        self.power_integral_sq().sqrt()
    }

    /// `∫|f|²`.
    pub fn power_integral_sq(&self) -> f64 {
        self.grid.spacing * self.values.iter().map(|z| z.modulus_sqr()).sum::<f64>()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.modulus()))
    }

    /// Discrete Dirichlet form `h Σ |(f_{j+1} - f_j)/h|²`, including the jumps
    /// to the zero extension in `DecayTruncated` mode. It is the exact
    /// summation-by-parts dual of [`Field::second_derivative`].
    pub fn dirichlet_form(&self) -> f64 {
        dirichlet_form(&self.grid, &self.values)
    }

    /// `(∫((f')² + weight·f²))^{1/2}` with the Dirichlet form as gradient term.
    pub fn norm_h1(&self, weight: f64) -> f64 {
        (self.dirichlet_form() + weight * self.power_integral_sq()).sqrt()
    }
}

impl RealField {
    pub fn integrate(&self) -> f64 {
        integrate(&self.grid, &self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn integrate(grid: &Grid1D, values: &[f64]) -> f64 {
    grid.spacing * values.iter().sum::<f64>()
}

#[inline]
fn neighbours<T: GridScalar>(grid: &Grid1D, f: &[T], j: usize) -> (T, T) {
    let n = f.len();
    match grid.boundary {
        Boundary::Periodic => (f[(j + n - 1) % n], f[(j + 1) % n]),
        Boundary::DecayTruncated => (
            if j == 0 { T::zero() } else { f[j - 1] },
            if j + 1 == n { T::zero() } else { f[j + 1] },
        ),
    }
}

pub(crate) fn laplacian_into<T: GridScalar>(grid: &Grid1D, f: &[T], out: &mut [T]) {
    let inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    for j in 0..f.len() {
        let (l, r) = neighbours(grid, f, j);
        out[j] = (l + r - f[j] * 2.0) * inv_h2;
    }
}

pub(crate) fn central_diff_into<T: GridScalar>(grid: &Grid1D, f: &[T], out: &mut [T]) {
    let inv_2h = 0.5 / grid.spacing;
    for j in 0..f.len() {
        let (l, r) = neighbours(grid, f, j);
        out[j] = (r - l) * inv_2h;
    }
}

/// Forward differences `(f_{j+1} - f_j)/h`; in `DecayTruncated` mode the
/// result has `N + 1` entries (leading jump from the zero extension).
pub(crate) fn forward_diffs<T: GridScalar>(grid: &Grid1D, f: &[T]) -> Vec<T> {
    let inv_h = 1.0 / grid.spacing;
    let n = f.len();
    match grid.boundary {
        Boundary::Periodic => (0..n).map(|j| (f[(j + 1) % n] - f[j]) * inv_h).collect(),
        Boundary::DecayTruncated => {
            let mut d = Vec::with_capacity(n + 1);
            d.push(f[0] * inv_h);
            for j in 0..n - 1 {
                d.push((f[j + 1] - f[j]) * inv_h);
            }
            d.push((T::zero() - f[n - 1]) * inv_h);
            d
        }
    }
}

pub(crate) fn dirichlet_form<T: GridScalar>(grid: &Grid1D, f: &[T]) -> f64 {
    grid.spacing
        * forward_diffs(grid, f)
            .into_iter()
            .map(|d| d.modulus_sqr())
            .sum::<f64>()
}

/// Discrete Schwarz symmetrization of `|f|`.
///
/// The magnitudes are sorted in decreasing order and laid out along
/// [`Grid1D::radial_order`], so the output is even and non-increasing in
/// `|x|` (ties broken towards `x <= 0`), has the same multiset of values and
/// hence every `L^p` norm of the input, and never a larger Dirichlet form.
pub fn schwarz_rearrange(f: &RealField) -> RealField {
    let mut mags: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; mags.len()];
    for (pos, m) in f.grid.radial_order().into_iter().zip(mags) {
        out[pos] = m;
    }
    Field {
        grid: f.grid,
        values: out,
    }
}

pub(crate) fn rearrange_values(grid: &Grid1D, order: &[usize], f: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.extend(f.iter().map(|v| v.abs()));
    scratch.sort_by(|a, b| b.total_cmp(a));
    debug_assert_eq!(order.len(), grid.n_points);
    for (&pos, &m) in order.iter().zip(scratch.iter()) {
        f[pos] = m;
    }
}
