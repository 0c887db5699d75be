//! Discrete diagnostics of the evolution: conserved and dissipated
//! quantities, the a-priori bound quantities, and the signed residuals of the
//! mass, energy and cross balance laws over one step.
//!
//! The balance laws are exact identities of the spatially discrete system
//! (summation by parts holds exactly for the forward-difference Dirichlet
//! form, the three-point Laplacian and the central difference). Terms that
//! vanish only in the continuum, such as the work done by the Lax–Friedrichs
//! dissipation, are kept explicitly, so each residual measures the time
//! discretization alone.

use std::ops::Add;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::coupling::SystemParams;
use crate::evolution::{flux_divergence, coupling_source, transport_rate, FieldState};
use crate::grid::{self, Grid1D, GridError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("dt must be positive, got {0}")]
    NonPositiveDt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorReport {
    pub t: f64,
    /// `∫|u|²`.
    pub mass: f64,
    /// Dirichlet form of `u`.
    pub kinetic: f64,
    /// `∫|u|⁴`.
    pub quartic: f64,
    /// `α∫g(v)|u|²`.
    pub coupling_energy: f64,
    /// `∫F(v)`.
    #[serde(rename = "Fv_energy")]
    pub fv_energy: f64,
    /// `∫v²`.
    pub v_l2: f64,
    /// `∫v⁴`.
    pub v_l4: f64,
    /// `½∫v² + sinθ Im∫u ū_x`.
    pub cross_term: f64,
    /// `cross_term` at the initial time.
    #[serde(rename = "M0")]
    pub m0: f64,
    /// `1 + ‖u_x‖² + ∫₀^t‖u_t‖²`.
    pub q_t: f64,
    pub min_v: f64,
    pub kinetic_integral: f64,
    pub quartic_integral: f64,
    pub ut_sq_integral: f64,
    /// `ε∫₀^t‖v_x‖²`.
    pub eps_vx_integral: f64,
}

impl MonitorReport {
    /// The seven quantities of the uniform a-priori estimate: mass, `‖u_x‖²`,
    /// `∫v²`, `∫v⁴`, `∫₀^t‖u_x‖²`, `∫₀^t‖u_t‖²`, `ε∫₀^t‖v_x‖²`.
    pub fn bound_quantities(&self) -> [f64; 7] {
        [
            self.mass,
            self.kinetic,
            self.v_l2,
            self.v_l4,
            self.kinetic_integral,
            self.ut_sq_integral,
            self.eps_vx_integral,
        ]
    }

    /// Left side of the integrated mass inequality,
    /// `∫|u|² + 2cosθ(∫₀^t‖u_x‖² + ∫₀^t∫|u|⁴)`.
    pub fn dissipated_mass(&self, theta: f64) -> f64 {
        self.mass + 2.0 * theta.cos() * (self.kinetic_integral + self.quartic_integral)
    }
}

/// Signed residuals of the three balance laws over one step (or summed over
/// several).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub mass: f64,
    pub energy: f64,
    pub cross: f64,
}

impl Add for IdentityResiduals {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            mass: self.mass + o.mass,
            energy: self.energy + o.energy,
            cross: self.cross + o.cross,
        }
    }
}

/// Instantaneous quantities shared by the report and the residuals.
struct Snapshot {
    mass: f64,
    kinetic: f64,
    quartic: f64,
    coupling_energy: f64,
    fv_energy: f64,
    v_l2: f64,
    v_l4: f64,
    im_u_ux: f64,
    vx_sq: f64,
}

fn snapshot(state: &FieldState, params: &SystemParams) -> Snapshot {
    let g = state.grid();
    let h = g.spacing();
    let u = state.u.values();
    let v = state.v.values();
    let mut ux = vec![Complex64::new(0.0, 0.0); u.len()];
    grid::central_diff_into(g, u, &mut ux);
    let im_u_ux = h * u.iter().zip(&ux).map(|(a, b)| (a * b.conj()).im).sum::<f64>();
    Snapshot {
        mass: state.u.power_integral_sq(),
        kinetic: state.u.dirichlet_form(),
        quartic: h * u.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>(),
        coupling_energy: params.alpha * h * u.iter().zip(v).map(|(z, &x)| params.g(x) * z.norm_sqr()).sum::<f64>(),
        fv_energy: h * v.iter().map(|&x| params.flux_antiderivative(x)).sum::<f64>(),
        v_l2: h * v.iter().map(|x| x * x).sum::<f64>(),
        v_l4: h * v.iter().map(|x| x.powi(4)).sum::<f64>(),
        im_u_ux,
        vx_sq: state.v.dirichlet_form(),
    }
}

/// Time-integrated quantities carried along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorCarry {
    pub m0: f64,
    pub kinetic_integral: f64,
    pub quartic_integral: f64,
    pub ut_sq_integral: f64,
    pub eps_vx_integral: f64,
}

impl MonitorCarry {
    pub fn new(initial: &FieldState, params: &SystemParams) -> Self {
        let s = snapshot(initial, params);
        Self {
            m0: 0.5 * s.v_l2 + params.theta.sin() * s.im_u_ux,
            kinetic_integral: 0.0,
            quartic_integral: 0.0,
            ut_sq_integral: 0.0,
            eps_vx_integral: 0.0,
        }
    }

    /// Accumulates the step `prev -> next` (trapezoidal in time; `u_t` by the
    /// backward difference).
    pub fn absorb(&mut self, prev: &FieldState, next: &FieldState, params: &SystemParams) {
        let dt = next.time - prev.time;
        let a = snapshot(prev, params);
        let b = snapshot(next, params);
        self.kinetic_integral += 0.5 * dt * (a.kinetic + b.kinetic);
        self.quartic_integral += 0.5 * dt * (a.quartic + b.quartic);
        self.eps_vx_integral += 0.5 * dt * params.epsilon * (a.vx_sq + b.vx_sq);
        if dt > 0.0 {
            let du: f64 = prev
                .u
                .values()
                .iter()
                .zip(next.u.values())
                .map(|(p, q)| (q - p).norm_sqr())
                .sum::<f64>()
                * prev.grid().spacing();
            self.ut_sq_integral += du / dt;
        }
    }

    pub fn report(&self, state: &FieldState, params: &SystemParams) -> MonitorReport {
        let s = snapshot(state, params);
        MonitorReport {
            t: state.time,
            mass: s.mass,
            kinetic: s.kinetic,
            quartic: s.quartic,
            coupling_energy: s.coupling_energy,
            fv_energy: s.fv_energy,
            v_l2: s.v_l2,
            v_l4: s.v_l4,
            cross_term: 0.5 * s.v_l2 + params.theta.sin() * s.im_u_ux,
            m0: self.m0,
            q_t: 1.0 + s.kinetic + self.ut_sq_integral,
            min_v: state.v.min(),
            kinetic_integral: self.kinetic_integral,
            quartic_integral: self.quartic_integral,
            ut_sq_integral: self.ut_sq_integral,
            eps_vx_integral: self.eps_vx_integral,
        }
    }
}

/// Report for `state`; with `prev` given, the time integrals cover the
/// single step from `prev` (taken as the initial time) to `state`.
pub fn report(state: &FieldState, params: &SystemParams, prev: Option<&FieldState>) -> Result<MonitorReport, MonitorError> {
    match prev {
        None => Ok(MonitorCarry::new(state, params).report(state, params)),
        Some(p) => {
            if p.grid() != state.grid() {
                return Err(GridError::GridMismatch.into());
            }
            let dt = state.time - p.time;
            if !(dt > 0.0) {
                return Err(MonitorError::NonPositiveDt(dt));
            }
            let mut carry = MonitorCarry::new(p, params);
            carry.absorb(p, state, params);
            Ok(carry.report(state, params))
        }
    }
}

/// Terms of the balance laws that need the right-hand side at one state.
struct Rates {
    /// `K + ∫|u|⁴ + α h Σ g|u|²`.
    mass_rate: f64,
    /// `ε hΣ D+(αg'|u|²) D+v - ε hΣ D+f(v) D+v - W`, `W` the transport work.
    energy_rate: f64,
    /// `ε‖D+v‖² - S`, `S` the cross defect.
    cross_rate: f64,
}

fn rates(state: &FieldState, params: &SystemParams) -> Rates {
    let g = state.grid();
    let h = g.spacing();
    let n = g.n_points();
    let u = state.u.values();
    let v = state.v.values();
    let u_sq: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
    let s = snapshot(state, params);

    let psi: Vec<f64> = v
        .iter()
        .zip(&u_sq)
        .map(|(&x, &w)| params.alpha * params.g_prime(x) * w - params.flux(x))
        .collect();
    let psi_v = dirichlet_pairing(g, &psi, v);
    let mut transport = vec![0.0; n];
    transport_rate(g, params, &u_sq, v, &mut transport);
    let work = h * psi.iter().zip(&transport).map(|(a, b)| a * b).sum::<f64>();

    let mut div = vec![0.0; n];
    let mut src = vec![0.0; n];
    flux_divergence(g, params, v, &mut div);
    coupling_source(g, params, &u_sq, v, &mut src);
    let v_transport = h * v.iter().zip(div.iter().zip(&src)).map(|(x, (d, s))| x * (s - d)).sum::<f64>();
    let mut d2u = vec![Complex64::new(0.0, 0.0); n];
    let mut d0u = vec![Complex64::new(0.0, 0.0); n];
    grid::laplacian_into(g, u, &mut d2u);
    grid::central_diff_into(g, u, &mut d0u);
    let r_dot_ux = h * (0..n)
        .map(|j| {
            let r = d2u[j] - u[j] * (u_sq[j] + params.alpha * params.g(v[j]));
            (r * d0u[j].conj()).re
        })
        .sum::<f64>();
    let defect = v_transport + 2.0 * r_dot_ux;

    Rates {
        mass_rate: s.kinetic + s.quartic + s.coupling_energy,
        energy_rate: params.epsilon * psi_v - work,
        cross_rate: params.epsilon * s.vx_sq - defect,
    }
}

/// `h Σ D+a D+b` over all edges (including the jumps to the zero extension).
fn dirichlet_pairing(g: &Grid1D, a: &[f64], b: &[f64]) -> f64 {
    let da = grid::forward_diffs(g, a);
    let db = grid::forward_diffs(g, b);
    g.spacing() * da.iter().zip(&db).map(|(x, y)| x * y).sum::<f64>()
}

fn energy(s: &Snapshot) -> f64 {
    s.kinetic + 0.5 * s.quartic + s.coupling_energy - s.fv_energy
}

/// Signed residuals of the discrete mass, energy and cross balance laws over
/// the step `prev -> next`, with trapezoidal time quadrature of the rates and
/// `u_t ≈ (u_next - u_prev)/dt`.
pub fn identity_residuals(
    prev: &FieldState,
    next: &FieldState,
    params: &SystemParams,
    dt: f64,
) -> Result<IdentityResiduals, MonitorError> {
    if !(dt > 0.0) {
        return Err(MonitorError::NonPositiveDt(dt));
    }
    if prev.grid() != next.grid() {
        return Err(GridError::GridMismatch.into());
    }
    let g = prev.grid();
    let h = g.spacing();
    let cos = params.theta.cos();
    let (sa, sb) = (snapshot(prev, params), snapshot(next, params));
    let (ra, rb) = (rates(prev, params), rates(next, params));

    let du: Vec<Complex64> = prev
        .u
        .values()
        .iter()
        .zip(next.u.values())
        .map(|(p, q)| (q - p) / dt)
        .collect();
    let ut_sq = h * du.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mid: Vec<Complex64> = prev
        .u
        .values()
        .iter()
        .zip(next.u.values())
        .map(|(p, q)| (p + q) * 0.5)
        .collect();
    let mut mid_x = vec![Complex64::new(0.0, 0.0); mid.len()];
    grid::central_diff_into(g, &mid, &mut mid_x);
    let ut_ux = h * du.iter().zip(&mid_x).map(|(a, b)| (a * b.conj()).re).sum::<f64>();

    let cross = |s: &Snapshot| 0.5 * s.v_l2 + params.theta.sin() * s.im_u_ux;
    Ok(IdentityResiduals {
        mass: sb.mass - sa.mass + dt * 2.0 * cos * 0.5 * (ra.mass_rate + rb.mass_rate),
        energy: energy(&sb) - energy(&sa) + dt * (2.0 * cos * ut_sq + 0.5 * (ra.energy_rate + rb.energy_rate)),
        cross: cross(&sb) - cross(&sa) + dt * (0.5 * (ra.cross_rate + rb.cross_rate) + 2.0 * cos * ut_ux),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{CouplingKind, Sign};
    use crate::grid::{ComplexField, RealField};
    use approx::assert_abs_diff_eq;

    fn affine(alpha: f64, theta: f64) -> SystemParams {
        SystemParams {
            alpha,
            theta,
            rho: 1.0,
            a: 1.0,
            b: 1.0,
            epsilon: 0.1,
            coupling: CouplingKind::Affine { sign: Sign::Plus },
        }
    }

    #[test]
    fn zero_state_reports_only_unit_q() {
        let g = Grid1D::periodic(10.0, 64).unwrap();
        let s = FieldState::new(0.0, ComplexField::zeros(g), RealField::zeros(g)).unwrap();
        let r = report(&s, &affine(0.1, 0.3), None).unwrap();
        assert_eq!(r.q_t, 1.0);
        for q in [r.mass, r.kinetic, r.quartic, r.coupling_energy, r.fv_energy, r.v_l2, r.v_l4, r.cross_term, r.m0, r.min_v] {
            assert_eq!(q, 0.0);
        }
    }

    #[test]
    fn soliton_mass_and_quartic() {
        let m: f64 = 0.15;
        let g = Grid1D::decay_truncated(40.0, 4096).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::new((2.0 * m).sqrt() / (m.sqrt() * x).cosh(), 0.0));
        let s = FieldState::new(0.0, u, RealField::zeros(g)).unwrap();
        let r = report(&s, &affine(1e-12, 0.0), None).unwrap();
        assert_abs_diff_eq!(r.mass, 4.0 * m.sqrt(), epsilon = 1e-8);
        assert_abs_diff_eq!(r.quartic, 16.0 / 3.0 * m.powf(1.5), epsilon = 1e-8);
    }

    #[test]
    fn residuals_vanish_on_constant_state() {
        let g = Grid1D::periodic(10.0, 64).unwrap();
        let a = FieldState::new(0.0, ComplexField::zeros(g), RealField::from_fn(g, |_| 0.4)).unwrap();
        let mut b = a.clone();
        b.time = 0.01;
        let r = identity_residuals(&a, &b, &affine(0.1, 0.3), 0.01).unwrap();
        assert!(r.mass.abs() < 1e-15 && r.energy.abs() < 1e-15 && r.cross.abs() < 1e-15);
        assert!(identity_residuals(&a, &b, &affine(0.1, 0.3), 0.0).is_err());
    }

    #[test]
    fn gagliardo_nirenberg_on_random_fields() {
        // deterministic pseudo-random smooth fields from a linear congruential sequence
        let mut seed: u64 = 0x2545_f491_4f6c_dd1d;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        let g = Grid1D::decay_truncated(20.0, 512).unwrap();
        for _ in 0..50 {
            let modes: Vec<(f64, f64, f64, f64)> = (0..6)
                .map(|_| (next() - 0.5, next() - 0.5, 4.0 * next(), 1.0 + 3.0 * next()))
                .collect();
            let u = ComplexField::from_fn(g, |x| {
                modes.iter().fold(Complex64::new(0.0, 0.0), |acc, &(re, im, k, w)| {
                    acc + Complex64::new(re, im) * Complex64::from_polar(1.0, k * x) * (-(x / w).powi(2)).exp()
                })
            });
            let lhs = u.norm_inf();
            let rhs = u.norm_l2().sqrt() * u.dirichlet_form().sqrt().sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-6), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn cross_term_has_no_rotation_part_at_zero_theta() {
        let g = Grid1D::periodic(10.0, 128).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::from_polar((-x * x).exp(), 2.0 * x));
        let v = RealField::from_fn(g, |x| (-x * x).exp());
        let s = FieldState::new(0.0, u, v).unwrap();
        let r = report(&s, &affine(0.1, 0.0), None).unwrap();
        assert_eq!(r.cross_term, 0.5 * r.v_l2);
        assert_eq!(r.m0, r.cross_term);
    }
}
