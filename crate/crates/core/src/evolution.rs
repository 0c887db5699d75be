//! Time integration of the viscous coupled system
//!
//! ```text
//! e^{-iθ} u_t = u_xx - |u|² u - α g(v) u
//! v_t + (f(v))_x = α (g'(v)|u|²)_x + ε v_xx
//! ```
//!
//! by symmetric Strang splitting `A(dt/2) B(dt/2) C(dt) B(dt/2) A(dt/2)`:
//!
//! * `A`: linear flow `u_t = e^{iθ} D2 u`, exact Fourier multiplier on the
//!   periodic grid, Crank–Nicolson on the truncated grid;
//! * `B`: pointwise ODE `u_t = e^{iθ}(-|u|² - α g(v)) u` with `v` frozen (RK4);
//! * `C`: `v` update with `u` frozen, itself split as diffusion half-step,
//!   SSP-RK2 transport (local Lax–Friedrichs flux plus central coupling
//!   source), diffusion half-step.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use thiserror::Error;

use crate::coupling::{ParamError, SystemParams};
use crate::grid::{Boundary, ComplexField, Grid1D, GridError, RealField};
use crate::monitors::{self, IdentityResiduals, MonitorCarry, MonitorReport};
use crate::tridiag::{CyclicFactor, ThomasFactor};

/// Magnitude above which a field value counts as blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Default lower bound on the wave speed used by [`cfl_dt`].
pub const DEFAULT_SPEED_FLOOR: f64 = 0.1;

const CFL_NUMBER: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub u: ComplexField,
    pub v: RealField,
}

impl FieldState {
    pub fn new(time: f64, u: ComplexField, v: RealField) -> Result<Self, GridError> {
        if u.grid() != v.grid() {
            return Err(GridError::GridMismatch);
        }
        Ok(Self { time, u, v })
    }

    pub fn grid(&self) -> &Grid1D {
        self.u.grid()
    }

    fn first_bad_value(&self) -> Option<String> {
        let check = |x: f64| !x.is_finite() || x.abs() > BLOW_UP_THRESHOLD;
        for (j, z) in self.u.values().iter().enumerate() {
            if check(z.re) || check(z.im) {
                return Some(format!("u[{j}] = {z}"));
            }
        }
        for (j, &x) in self.v.values().iter().enumerate() {
            if check(x) {
                return Some(format!("v[{j}] = {x}"));
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangSplit,
}

#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub params: SystemParams,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub monitor_stride: usize,
    /// Keep every `k`-th state in [`Trajectory::snapshots`]; `None` keeps none.
    pub snapshot_stride: Option<usize>,
    pub speed_floor: f64,
}

impl EvolveConfig {
    pub fn new(params: SystemParams, dt: f64, t_final: f64) -> Self {
        Self {
            params,
            dt,
            t_final,
            scheme: Scheme::StrangSplit,
            monitor_stride: 1,
            snapshot_stride: None,
            speed_floor: DEFAULT_SPEED_FLOOR,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid evolution settings: {0}")]
    Config(String),
    #[error("dt = {dt} exceeds the stability bound {limit} of the initial state")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("blow-up at t = {time}: {reason}")]
    BlowUp {
        time: f64,
        reason: String,
        /// Last state whose values were all finite and below the threshold.
        last_finite: Box<FieldState>,
    },
}

/// Largest stable step for the `v` transport:
/// `0.4 h / max(max_j(|f'(v_j)| + α|g''(v_j)||u_j|²), floor)`.
pub fn cfl_dt(state: &FieldState, params: &SystemParams) -> f64 {
    cfl_dt_with_floor(state, params, DEFAULT_SPEED_FLOOR)
}

pub fn cfl_dt_with_floor(state: &FieldState, params: &SystemParams, floor: f64) -> f64 {
    let speed = state
        .v
        .values()
        .iter()
        .zip(state.u.values())
        .map(|(&v, u)| params.flux_prime(v).abs() + params.alpha * params.g_second(v).abs() * u.norm_sqr())
        .fold(0.0_f64, f64::max);
    CFL_NUMBER * state.grid().spacing() / speed.max(floor)
}

/// Local Lax–Friedrichs divergence `(F_{j+1/2} - F_{j-1/2})/h` of `f(v)`,
/// with zero ghost values on the truncated grid.
pub(crate) fn flux_divergence(grid: &Grid1D, params: &SystemParams, v: &[f64], out: &mut [f64]) {
    let n = v.len();
    let interface = |l: f64, r: f64| {
        let a = params.flux_prime(l).abs().max(params.flux_prime(r).abs());
        0.5 * (params.flux(l) + params.flux(r)) - 0.5 * a * (r - l)
    };
    let inv_h = 1.0 / grid.spacing();
    match grid.boundary() {
        Boundary::Periodic => {
            let mut left = interface(v[n - 1], v[0]);
            for j in 0..n {
                let right = interface(v[j], v[(j + 1) % n]);
                out[j] = (right - left) * inv_h;
                left = right;
            }
        }
        Boundary::DecayTruncated => {
            let mut left = interface(0.0, v[0]);
            for j in 0..n {
                let right = interface(v[j], if j + 1 < n { v[j + 1] } else { 0.0 });
                out[j] = (right - left) * inv_h;
                left = right;
            }
        }
    }
}

/// Central difference of the coupling source `α g'(v)|u|²`.
pub(crate) fn coupling_source(grid: &Grid1D, params: &SystemParams, u_sq: &[f64], v: &[f64], out: &mut [f64]) {
    let phi: Vec<f64> = v
        .iter()
        .zip(u_sq)
        .map(|(&v, &w)| params.alpha * params.g_prime(v) * w)
        .collect();
    crate::grid::central_diff_into(grid, &phi, out);
}

/// Transport rate `-(f(v))_x + α(g'(v)|u|²)_x` of the `v` equation.
pub(crate) fn transport_rate(grid: &Grid1D, params: &SystemParams, u_sq: &[f64], v: &[f64], out: &mut [f64]) {
    let mut src = vec![0.0; v.len()];
    flux_divergence(grid, params, v, out);
    coupling_source(grid, params, u_sq, v, &mut src);
    for (o, s) in out.iter_mut().zip(&src) {
        *o = s - *o;
    }
}

enum LinearFlow {
    Spectral {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        multiplier: Vec<Complex64>,
        scratch: Vec<Complex64>,
    },
    CrankNicolson {
        factor: ThomasFactor<Complex64>,
        /// `(τ/2) e^{iθ} / h²`.
        coef: Complex64,
        rhs: Vec<Complex64>,
    },
}

enum Diffusion {
    Off,
    Periodic { factor: CyclicFactor<f64>, r: f64 },
    Truncated { factor: ThomasFactor<f64>, r: f64 },
}

impl Diffusion {
    /// Crank–Nicolson step of `v_t = ε D2 v` over `τ`.
    fn new(grid: &Grid1D, epsilon: f64, tau: f64) -> Self {
        if epsilon == 0.0 {
            return Diffusion::Off;
        }
        let h = grid.spacing();
        let r = 0.5 * epsilon * tau / (h * h);
        let n = grid.n_points();
        match grid.boundary() {
            Boundary::Periodic => Diffusion::Periodic {
                factor: CyclicFactor::constant(n, -r, 1.0 + 2.0 * r, -r),
                r,
            },
            Boundary::DecayTruncated => Diffusion::Truncated {
                factor: ThomasFactor::constant(n, -r, 1.0 + 2.0 * r, -r),
                r,
            },
        }
    }

    fn apply(&self, v: &mut [f64], tmp: &mut Vec<f64>) {
        let n = v.len();
        let (r, periodic) = match self {
            Diffusion::Off => return,
            Diffusion::Periodic { r, .. } => (*r, true),
            Diffusion::Truncated { r, .. } => (*r, false),
        };
        tmp.clear();
        for j in 0..n {
            let (l, rr) = if periodic {
                (v[(j + n - 1) % n], v[(j + 1) % n])
            } else {
                (
                    if j == 0 { 0.0 } else { v[j - 1] },
                    if j + 1 == n { 0.0 } else { v[j + 1] },
                )
            };
            tmp.push((1.0 - 2.0 * r) * v[j] + r * (l + rr));
        }
        match self {
            Diffusion::Periodic { factor, .. } => factor.solve_in_place(tmp),
            Diffusion::Truncated { factor, .. } => factor.solve_in_place(tmp),
            Diffusion::Off => unreachable!(),
        }
        v.copy_from_slice(tmp);
    }
}

struct StepCache {
    dt: f64,
    linear: LinearFlow,
    diffusion: Diffusion,
}

/// Reusable integrator for one grid and parameter set; caches the FFT plans
/// and the implicit factorizations for the last step size used.
pub struct Stepper {
    grid: Grid1D,
    params: SystemParams,
    cache: Option<StepCache>,
    rate: Vec<f64>,
    stage: Vec<f64>,
    tmp: Vec<f64>,
    u_sq: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: Grid1D, params: SystemParams) -> Result<Self, EvolveError> {
        params.validate()?;
        let n = grid.n_points();
        Ok(Self {
            grid,
            params,
            cache: None,
            rate: vec![0.0; n],
            stage: vec![0.0; n],
            tmp: Vec::with_capacity(n),
            u_sq: vec![0.0; n],
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    fn prepare(&mut self, dt: f64) {
        if self.cache.as_ref().is_some_and(|c| c.dt == dt) {
            return;
        }
        let n = self.grid.n_points();
        let h = self.grid.spacing();
        let rot = Complex64::new(self.params.theta.cos(), self.params.theta.sin());
        let tau = 0.5 * dt;
        let linear = match self.grid.boundary() {
            Boundary::Periodic => {
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(n);
                let inverse = planner.plan_fft_inverse(n);
                let scratch_len = forward
                    .get_inplace_scratch_len()
                    .max(inverse.get_inplace_scratch_len());
                let multiplier = (0..n)
                    .map(|k| {
                        let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
                        let lambda = -4.0 * s * s / (h * h);
                        (rot * (lambda * tau)).exp() / n as f64
                    })
                    .collect();
                LinearFlow::Spectral {
                    forward,
                    inverse,
                    multiplier,
                    scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
                }
            }
            Boundary::DecayTruncated => {
                let coef = rot * (0.5 * tau / (h * h));
                let one = Complex64::new(1.0, 0.0);
                LinearFlow::CrankNicolson {
                    factor: ThomasFactor::constant(n, -coef, one + coef * 2.0, -coef),
                    coef,
                    rhs: vec![Complex64::new(0.0, 0.0); n],
                }
            }
        };
        let diffusion = Diffusion::new(&self.grid, self.params.epsilon, 0.5 * dt);
        self.cache = Some(StepCache { dt, linear, diffusion });
    }

    fn linear_half_step(linear: &mut LinearFlow, u: &mut [Complex64]) {
        match linear {
            LinearFlow::Spectral {
                forward,
                inverse,
                multiplier,
                scratch,
            } => {
                forward.process_with_scratch(u, scratch);
                for (z, m) in u.iter_mut().zip(multiplier.iter()) {
                    *z *= m;
                }
                inverse.process_with_scratch(u, scratch);
            }
            LinearFlow::CrankNicolson { factor, coef, rhs } => {
                let n = u.len();
                for j in 0..n {
                    let l = if j == 0 { Complex64::new(0.0, 0.0) } else { u[j - 1] };
                    let r = if j + 1 == n { Complex64::new(0.0, 0.0) } else { u[j + 1] };
                    rhs[j] = u[j] + *coef * (l + r - u[j] * 2.0);
                }
                factor.solve_in_place(rhs);
                u.copy_from_slice(rhs);
            }
        }
    }

    /// RK4 with two substeps for `u' = e^{iθ}(-|u|² - α g(v)) u`.
    fn local_step(&self, u: &mut [Complex64], v: &[f64], tau: f64) {
        let rot = Complex64::new(self.params.theta.cos(), self.params.theta.sin());
        let h = 0.5 * tau;
        for (z, &vj) in u.iter_mut().zip(v) {
            let pot = self.params.alpha * self.params.g(vj);
            let rhs = |w: Complex64| -rot * (w.norm_sqr() + pot) * w;
            let mut y = *z;
            for _ in 0..2 {
                let k1 = rhs(y);
                let k2 = rhs(y + k1 * (0.5 * h));
                let k3 = rhs(y + k2 * (0.5 * h));
                let k4 = rhs(y + k3 * h);
                y += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
            }
            *z = y;
        }
    }

    /// SSP-RK2 for `v_t = -(f(v))_x + α(g'(v)|u|²)_x` with `u` frozen.
    fn transport_step(&mut self, v: &mut [f64], dt: f64) {
        transport_rate(&self.grid, &self.params, &self.u_sq, v, &mut self.rate);
        for ((s, &x), &r) in self.stage.iter_mut().zip(v.iter()).zip(&self.rate) {
            *s = x + dt * r;
        }
        transport_rate(&self.grid, &self.params, &self.u_sq, &self.stage, &mut self.rate);
        for ((x, &s), &r) in v.iter_mut().zip(&self.stage).zip(&self.rate) {
            *x = 0.5 * (*x + s + dt * r);
        }
    }

    /// Advances `state` by `dt`. Returns a blow-up error when the new state
    /// has a non-finite value or one above [`BLOW_UP_THRESHOLD`].
    pub fn step(&mut self, state: &FieldState, dt: f64) -> Result<FieldState, EvolveError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EvolveError::Config(format!("dt must be positive and finite, got {dt}")));
        }
        if state.grid() != &self.grid || state.v.grid() != &self.grid {
            return Err(GridError::GridMismatch.into());
        }
        self.prepare(dt);
        let mut u = state.u.values().to_vec();
        let mut v = state.v.values().to_vec();
        let mut cache = self.cache.take().expect("prepared");

        Self::linear_half_step(&mut cache.linear, &mut u);
        self.local_step(&mut u, &v, 0.5 * dt);

        for (w, z) in self.u_sq.iter_mut().zip(&u) {
            *w = z.norm_sqr();
        }
        cache.diffusion.apply(&mut v, &mut self.tmp);
        self.transport_step(&mut v, dt);
        cache.diffusion.apply(&mut v, &mut self.tmp);

        self.local_step(&mut u, &v, 0.5 * dt);
        Self::linear_half_step(&mut cache.linear, &mut u);
        self.cache = Some(cache);

        let next = FieldState {
            time: state.time + dt,
            u: ComplexField::new(self.grid, u)?,
            v: RealField::new(self.grid, v)?,
        };
        if let Some(reason) = next.first_bad_value() {
            return Err(EvolveError::BlowUp {
                time: next.time,
                reason,
                last_finite: Box::new(state.clone()),
            });
        }
        Ok(next)
    }
}

/// One step with a freshly built [`Stepper`].
pub fn step(state: &FieldState, params: &SystemParams, dt: f64) -> Result<FieldState, EvolveError> {
    Stepper::new(*state.grid(), params.clone())?.step(state, dt)
}

/// Per-step identity residuals and their running sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRecord {
    pub t: f64,
    pub step: IdentityResiduals,
    pub cumulative: IdentityResiduals,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial_report: MonitorReport,
    pub final_state: FieldState,
    /// Reports after every `monitor_stride`-th step (and after the last one).
    pub reports: Vec<MonitorReport>,
    pub residuals: Vec<ResidualRecord>,
    pub cumulative: IdentityResiduals,
    pub snapshots: Vec<FieldState>,
    pub steps: usize,
    /// Uniform step actually used, `t_final / steps`.
    pub dt: f64,
}

/// Integrates from `initial` to `initial.time + cfg.t_final` with a uniform
/// step no larger than `cfg.dt`.
pub fn run(initial: &FieldState, cfg: &EvolveConfig) -> Result<Trajectory, EvolveError> {
    let params = &cfg.params;
    params.validate()?;
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(EvolveError::Config(format!("dt must be positive and finite, got {}", cfg.dt)));
    }
    if !(cfg.t_final >= 0.0 && cfg.t_final.is_finite()) {
        return Err(EvolveError::Config(format!(
            "t_final must be non-negative and finite, got {}",
            cfg.t_final
        )));
    }
    if cfg.monitor_stride == 0 || cfg.snapshot_stride == Some(0) {
        return Err(EvolveError::Config("strides must be positive".into()));
    }
    if let Some(reason) = initial.first_bad_value() {
        return Err(EvolveError::Config(format!("initial state is not finite: {reason}")));
    }
    let limit = cfl_dt_with_floor(initial, params, cfg.speed_floor);
    if cfg.dt > limit {
        return Err(EvolveError::StepTooLarge { dt: cfg.dt, limit });
    }

    let steps = (cfg.t_final / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { cfg.dt } else { cfg.t_final / steps as f64 };
    let mut carry = MonitorCarry::new(initial, params);
    let initial_report = carry.report(initial, params);
    let mut stepper = Stepper::new(*initial.grid(), params.clone())?;
    let mut state = initial.clone();
    let mut reports = Vec::new();
    let mut residuals = Vec::new();
    let mut snapshots = Vec::new();
    let mut cumulative = IdentityResiduals::default();

    for k in 1..=steps {
        let mut next = stepper.step(&state, dt)?;
        if k == steps {
            next.time = initial.time + cfg.t_final;
        }
        let res = monitors::identity_residuals(&state, &next, params, dt)
            .map_err(|e| EvolveError::Config(e.to_string()))?;
        cumulative = cumulative + res;
        carry.absorb(&state, &next, params);
        if k % cfg.monitor_stride == 0 || k == steps {
            reports.push(carry.report(&next, params));
            residuals.push(ResidualRecord {
                t: next.time,
                step: res,
                cumulative,
            });
        }
        if cfg.snapshot_stride.is_some_and(|s| k % s == 0) {
            snapshots.push(next.clone());
        }
        state = next;
    }

    Ok(Trajectory {
        initial_report,
        final_state: state,
        reports,
        residuals,
        cumulative,
        snapshots,
        steps,
        dt,
    })
}

/// Gaussian test functions `exp(-(x - c)²/2)` with centres `-4, -2, 0, 2, 4`.
pub const MOMENT_CENTRES: [f64; 5] = [-4.0, -2.0, 0.0, 2.0, 4.0];

pub fn weak_moments(v: &RealField) -> [f64; 5] {
    let grid = v.grid();
    MOMENT_CENTRES.map(|c| {
        let w: Vec<f64> = (0..grid.n_points())
            .map(|j| {
                let d = grid.x(j) - c;
                v.values()[j] * (-0.5 * d * d).exp()
            })
            .collect();
        crate::grid::integrate(grid, &w)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub epsilons: Vec<f64>,
    pub moments: Vec<[f64; 5]>,
    /// Euclidean distance between the moment vectors of consecutive runs.
    pub distances: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Runs the same initial data for every `ε` in `epsilons` (in parallel,
/// results in input order) and compares the weak moments of the final `v`.
pub fn viscosity_sweep(initial: &FieldState, cfg: &EvolveConfig, epsilons: &[f64]) -> Result<SweepResult, EvolveError> {
    if epsilons.len() < 2 {
        return Err(EvolveError::Config("a sweep needs at least two epsilon values".into()));
    }
    let finals: Vec<Result<[f64; 5], EvolveError>> = epsilons
        .par_iter()
        .map(|&eps| {
            let mut c = cfg.clone();
            c.params.epsilon = eps;
            c.snapshot_stride = None;
            run(initial, &c).map(|t| weak_moments(&t.final_state.v))
        })
        .collect();
    let moments = finals.into_iter().collect::<Result<Vec<_>, _>>()?;
    let distances: Vec<f64> = moments
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(SweepResult {
        epsilons: epsilons.to_vec(),
        moments,
        distances,
        strictly_decreasing,
    })
}
