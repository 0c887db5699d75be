//! Standing-wave pairs `(U, V)` of the coupled system: even positive
//! profiles `U` with the pointwise relation `a V² - b V³ = α U²`.
//!
//! Defocusing cases minimize `J(U) = ½∫((U')² + αρU²) + ¼∫U⁴` on a constraint
//! manifold and read `(a, b)` off the Lagrange multiplier. Focusing cases
//! minimize an action over its Nehari set. Every solve runs a symmetrized
//! preconditioned descent, hands off to a Newton polish on the even half
//! grid, assembles `V` from the case's branch, and certifies the result.

mod descent;
pub mod functional;
mod newton;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{CubicBranches, ParamError, SystemParams};
use crate::grid::{self, Boundary, Grid1D, GridError, RealField};

pub use functional::{Constraint, Functional, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveCase {
    DefocusM1,
    DefocusM2,
    DefocusM3,
    FocusB,
    FocusAplus,
    FocusAminus,
    #[serde(rename = "FocusAB_neg")]
    FocusAbNeg,
    #[serde(rename = "FocusAB_pos")]
    FocusAbPos,
}

impl WaveCase {
    pub const ALL: [WaveCase; 8] = [
        WaveCase::DefocusM1,
        WaveCase::DefocusM2,
        WaveCase::DefocusM3,
        WaveCase::FocusB,
        WaveCase::FocusAplus,
        WaveCase::FocusAminus,
        WaveCase::FocusAbNeg,
        WaveCase::FocusAbPos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveCase::DefocusM1 => "DefocusM1",
            WaveCase::DefocusM2 => "DefocusM2",
            WaveCase::DefocusM3 => "DefocusM3",
            WaveCase::FocusB => "FocusB",
            WaveCase::FocusAplus => "FocusAplus",
            WaveCase::FocusAminus => "FocusAminus",
            WaveCase::FocusAbNeg => "FocusAB_neg",
            WaveCase::FocusAbPos => "FocusAB_pos",
        }
    }

    pub fn is_defocusing(self) -> bool {
        matches!(self, WaveCase::DefocusM1 | WaveCase::DefocusM2 | WaveCase::DefocusM3)
    }

    /// Sign of `V` where `U` is significant.
    pub fn v_sign(self) -> f64 {
        match self {
            WaveCase::FocusAplus | WaveCase::FocusAbPos => 1.0,
            _ => -1.0,
        }
    }

    /// Required signs of `(a, b)`: `Some(true)` positive, `Some(false)` zero.
    fn flux_pattern(self) -> (bool, bool) {
        match self {
            WaveCase::DefocusM1 | WaveCase::FocusB => (false, true),
            WaveCase::DefocusM2 | WaveCase::FocusAplus | WaveCase::FocusAminus => (true, false),
            WaveCase::DefocusM3 | WaveCase::FocusAbNeg | WaveCase::FocusAbPos => (true, true),
        }
    }
}

impl fmt::Display for WaveCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Certificate {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    fn above(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            bound,
            pass: value > bound,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveDiagnostics {
    pub descent_iterations: usize,
    pub descent_residual: f64,
    pub descent_converged: bool,
    pub newton_iterations: usize,
    pub newton_residual: f64,
    pub converged: bool,
    pub restarts: usize,
    /// Action after every accepted descent step.
    pub action_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StandingWavePair {
    pub case: WaveCase,
    pub u: RealField,
    pub v: RealField,
    /// Lagrange multiplier `λ` of the defocusing problems.
    pub multiplier: Option<f64>,
    pub recovered_ab: Option<(f64, f64)>,
    pub residual_u: f64,
    pub residual_algebraic: f64,
    /// `J(U)` for defocusing cases, `A(U)` for focusing ones.
    pub action_value: f64,
    pub certificates: Vec<Certificate>,
    pub diagnostics: SolveDiagnostics,
}

impl StandingWavePair {
    pub fn pass(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
    }

    pub fn failed_certificates(&self) -> Vec<String> {
        self.certificates.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }

    pub fn certificate(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Pass threshold for `residual_U / (1 + ‖U‖∞)`.
    pub residual_tol: f64,
    /// Descent hands off to Newton once `sup|r| / (c sup|U|)` drops below this,
    /// `c = αρ` and `r` the (constrained) gradient.
    pub descent_tol: f64,
    pub newton_tol: f64,
    pub max_descent_iters: usize,
    pub max_newton_iters: usize,
    /// Switches off the intermediate power of the focusing actions, leaving
    /// the pure cubic problem `-U'' + αρU = U³`.
    pub drop_intermediate: bool,
    pub seed_amplitude: f64,
    /// Points with `U <= tail_threshold · ‖U‖∞` are excluded from sign checks.
    pub tail_threshold: f64,
    pub max_restarts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-6,
            descent_tol: 1e-2,
            newton_tol: 1e-10,
            max_descent_iters: 100_000,
            max_newton_iters: 60,
            drop_intermediate: false,
            seed_amplitude: 1.0,
            tail_threshold: 1e-10,
            max_restarts: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum StandingWaveError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("case {case} is inconsistent with the parameters: {reason}")]
    InvalidCase { case: WaveCase, reason: String },
    #[error("standing waves are computed on a DecayTruncated grid")]
    Boundary,
    #[error("the field is identically zero")]
    ZeroField,
    #[error("the ray t -> A(tU) has no positive critical point")]
    NoNehariPoint,
    #[error("the iteration collapsed to zero after {restarts} restarts")]
    Collapse { restarts: usize },
    #[error("the constraint cannot be met by rescaling the seed")]
    Infeasible,
    #[error("no convergence: residual {residual:e} after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Box<StandingWavePair>,
    },
    #[error("failed certificates: {}{}", failed.join(", "), hint)]
    Certificate {
        failed: Vec<String>,
        hint: String,
        pair: Box<StandingWavePair>,
    },
}

/// Checks the parameter pattern required by `case`.
pub fn validate_case(case: WaveCase, params: &SystemParams) -> Result<(), StandingWaveError> {
    params.validate()?;
    let bad = |reason: String| Err(StandingWaveError::InvalidCase { case, reason });
    if !(params.rho > 0.0) {
        return bad(format!("rho must be positive, got {}", params.rho));
    }
    let (a_pos, b_pos) = case.flux_pattern();
    let describe = |pos: bool| if pos { "positive" } else { "zero" };
    if (params.a > 0.0) != a_pos || (params.b > 0.0) != b_pos {
        return bad(format!(
            "requires a {} and b {}, got a = {}, b = {}",
            describe(a_pos),
            describe(b_pos),
            params.a,
            params.b
        ));
    }
    Ok(())
}

/// `W(x) = √(2m) sech(√m x)`, the positive even solution of `-W'' + mW = W³`.
pub fn reference_soliton(m: f64, grid: &Grid1D) -> RealField {
    let amp = (2.0 * m).sqrt();
    let k = m.sqrt();
    RealField::from_fn(*grid, |x| amp / (k * x).cosh())
}

/// `¼∫W⁴` by quadrature for `W` at `m = 3ρα/2`; an upper bound for the action
/// of the focusing critical points with branch coupling.
pub fn level_bound(params: &SystemParams, grid: &Grid1D) -> f64 {
    let w = reference_soliton(1.5 * params.rho * params.alpha, grid);
    0.25 * grid.spacing() * w.values().iter().map(|x| x.powi(4)).sum::<f64>()
}

/// `max|-U'' + α(V+ρ)U ± U³|`, with `+` for defocusing and `-` for focusing.
pub fn residual_u(u: &RealField, v: &RealField, alpha: f64, rho: f64, focusing: bool) -> f64 {
    let lap = u.second_derivative();
    let sign = if focusing { -1.0 } else { 1.0 };
    u.values()
        .iter()
        .zip(v.values())
        .zip(lap.values())
        .map(|((&x, &y), &d2)| (-d2 + alpha * (y + rho) * x + sign * x * x * x).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub residual_u: f64,
    pub residual_algebraic: f64,
}

/// Residuals of a pair against the standing-wave equations. The algebraic
/// residual uses the recovered `(a, b)` when present, else `params.a, b`.
pub fn residual(pair: &StandingWavePair, params: &SystemParams) -> Residuals {
    let (a, b) = pair.recovered_ab.unwrap_or((params.a, params.b));
    let residual_algebraic = pair
        .u
        .values()
        .iter()
        .zip(pair.v.values())
        .map(|(&x, &y)| (a * y * y - b * y * y * y - params.alpha * x * x).abs())
        .fold(0.0, f64::max);
    Residuals {
        residual_u: residual_u(&pair.u, &pair.v, params.alpha, params.rho, !pair.case.is_defocusing()),
        residual_algebraic,
    }
}

/// The action minimized for a focusing `case`.
pub fn action_functional(
    case: WaveCase,
    params: &SystemParams,
    grid: &Grid1D,
    drop_intermediate: bool,
) -> Result<Functional, StandingWaveError> {
    let alpha = params.alpha;
    let potential = match case {
        _ if drop_intermediate => Potential::Power {
            coef: 0.0,
            p: 3.0,
            quartic: -1.0,
        },
        WaveCase::FocusB => Potential::Power {
            coef: -alpha.powf(4.0 / 3.0) / params.b.cbrt(),
            p: 8.0 / 3.0,
            quartic: -1.0,
        },
        WaveCase::FocusAplus | WaveCase::FocusAminus => {
            let k = alpha.powf(1.5) / params.a.sqrt();
            Potential::Power {
                coef: if case == WaveCase::FocusAplus { k } else { -k },
                p: 3.0,
                quartic: -1.0,
            }
        }
        WaveCase::FocusAbNeg => Potential::NegBranch {
            branches: CubicBranches::new(params.a, params.b)?,
            alpha,
        },
        WaveCase::FocusAbPos => Potential::PosBranch {
            branches: CubicBranches::with_cap(params.a, params.b, params.rho)?,
            alpha,
        },
        _ => {
            return Err(StandingWaveError::InvalidCase {
                case,
                reason: "not a focusing case".into(),
            })
        }
    };
    Ok(Functional {
        grid: *grid,
        c: alpha * params.rho,
        potential,
    })
}

/// Rescales `u` onto the Nehari set of `f`: returns the maximizer `t*` of
/// `t ↦ A(tU)` and `t*·u`.
pub fn nehari_project(u: &RealField, f: &Functional) -> Result<(f64, RealField), StandingWaveError> {
    if u.values().iter().all(|&x| x == 0.0) {
        return Err(StandingWaveError::ZeroField);
    }
    let t = functional::nehari_scale_global(f, u.values()).ok_or(StandingWaveError::NoNehariPoint)?;
    Ok((t, u.map(|x| t * x)))
}

fn require_truncated(grid: &Grid1D) -> Result<(), StandingWaveError> {
    if grid.boundary() == Boundary::DecayTruncated {
        Ok(())
    } else {
        Err(StandingWaveError::Boundary)
    }
}

/// A soliton twice as wide as the one matching the linear part, so no case
/// starts at its own solution.
fn seed(params: &SystemParams, grid: &Grid1D, amplitude: f64) -> Vec<f64> {
    reference_soliton(0.25 * params.alpha * params.rho, grid)
        .into_values()
        .into_iter()
        .map(|x| amplitude * x)
        .collect()
}

fn integral(grid: &Grid1D, u: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    grid::integrate(grid, &u.iter().map(|&x| f(x)).collect::<Vec<_>>())
}

/// Dispatches to the solver of `case`.
pub fn solve(
    case: WaveCase,
    params: &SystemParams,
    grid: &Grid1D,
    opts: &SolveOptions,
) -> Result<StandingWavePair, StandingWaveError> {
    match case {
        WaveCase::DefocusM1 | WaveCase::DefocusM2 | WaveCase::DefocusM3 => minimize_constrained(case, params, grid, opts),
        WaveCase::FocusB | WaveCase::FocusAplus | WaveCase::FocusAminus => solve_focusing(case, params, grid, opts),
        WaveCase::FocusAbNeg | WaveCase::FocusAbPos => solve_focusing_ab(case, params, grid, opts),
    }
}

/// Constrained minimization of `J` for the defocusing cases, with multiplier
/// recovery of `(a, b)`.
pub fn minimize_constrained(
    case: WaveCase,
    params: &SystemParams,
    grid: &Grid1D,
    opts: &SolveOptions,
) -> Result<StandingWavePair, StandingWaveError> {
    if !case.is_defocusing() {
        return Err(StandingWaveError::InvalidCase {
            case,
            reason: "not a defocusing case".into(),
        });
    }
    validate_case(case, params)?;
    require_truncated(grid)?;
    let alpha = params.alpha;
    let f = Functional {
        grid: *grid,
        c: alpha * params.rho,
        potential: Potential::Power {
            coef: 0.0,
            p: 3.0,
            quartic: 1.0,
        },
    };
    let unit = CubicBranches::new(1.0, 1.0)?;
    let (constraint, target) = match case {
        WaveCase::DefocusM1 => (Constraint::Power { p: 8.0 / 3.0 }, 1.0),
        WaveCase::DefocusM2 => (Constraint::Power { p: 3.0 }, 1.0),
        _ => (Constraint::GBranch { branches: unit, alpha }, -1.0),
    };

    let out = descent::constrained_descent(
        &f,
        &constraint,
        target,
        seed(params, grid, opts.seed_amplitude),
        opts.descent_tol,
        opts.max_descent_iters,
    )
    .ok_or(StandingWaveError::Infeasible)?;
    let mut u = out.u;
    let newton = newton::polish(
        &f,
        Some((&constraint, target)),
        &mut u,
        out.mu,
        opts.newton_tol,
        opts.max_newton_iters,
    );
    constraint.project(grid, &mut u, target).ok_or(StandingWaveError::Infeasible)?;

    let q = f.quadratic(&u);
    let quartic = integral(grid, &u, |x| x.powi(4));
    let (lambda, ab, v): (f64, (f64, f64), Vec<f64>) = match case {
        WaveCase::DefocusM1 => {
            let lambda = (q + quartic) / constraint.value(grid, &u);
            let b = alpha.powi(4) / lambda.powi(3);
            let k = (alpha / b).cbrt();
            (lambda, (0.0, b), u.iter().map(|x| -k * x.abs().powf(2.0 / 3.0)).collect())
        }
        WaveCase::DefocusM2 => {
            let lambda = (q + quartic) / constraint.value(grid, &u);
            let a = alpha.powi(3) / (lambda * lambda);
            let k = (alpha / a).sqrt();
            (lambda, (a, 0.0), u.iter().map(|x| -k * x.abs()).collect())
        }
        _ => {
            let weighted = integral(grid, &u, |x| unit.negative(alpha * x * x) * x * x);
            let lambda = -(q + quartic) / (alpha * weighted);
            let ab = (1.0 / (lambda * lambda), 1.0 / lambda.powi(3));
            (lambda, ab, u.iter().map(|&x| lambda * unit.negative(alpha * x * x)).collect())
        }
    };

    let mut pair = StandingWavePair {
        case,
        u: RealField::new(*grid, u)?,
        v: RealField::new(*grid, v)?,
        multiplier: Some(lambda),
        recovered_ab: Some(ab),
        residual_u: 0.0,
        residual_algebraic: 0.0,
        action_value: 0.0,
        certificates: Vec::new(),
        diagnostics: SolveDiagnostics {
            descent_iterations: out.iterations,
            descent_residual: out.residual,
            descent_converged: out.converged,
            newton_iterations: newton.iterations,
            newton_residual: newton.residual,
            converged: newton.converged,
            restarts: 0,
            action_history: out.history,
        },
    };
    pair.action_value = f.value(pair.u.values());
    let constraint_gap = (constraint.value(grid, pair.u.values()) - target).abs();
    finish(pair, params, opts, |pair, certs| {
        certs.push(Certificate::at_most("constraint", constraint_gap, 1e-10 * target.abs()));
        certs.push(Certificate::above("lambda_positive", lambda, 0.0));
        let k = pair.u.dirichlet_form();
        let quartic = integral(grid, pair.u.values(), |x| x.powi(4));
        let coupled = integral(
            grid,
            &pair
                .u
                .values()
                .iter()
                .zip(pair.v.values())
                .map(|(&x, &y)| alpha * (y + params.rho) * x * x)
                .collect::<Vec<_>>(),
            |x| x,
        );
        certs.push(Certificate::at_most(
            "energy_identity",
            (k + coupled + quartic).abs(),
            1e-6 * (k + quartic),
        ));
    })
}

/// Focusing cases with power nonlinearities (or the pure cubic problem when
/// `opts.drop_intermediate`): Nehari minimization of the action.
pub fn solve_focusing(
    case: WaveCase,
    params: &SystemParams,
    grid: &Grid1D,
    opts: &SolveOptions,
) -> Result<StandingWavePair, StandingWaveError> {
    if !matches!(case, WaveCase::FocusB | WaveCase::FocusAplus | WaveCase::FocusAminus) {
        return Err(StandingWaveError::InvalidCase {
            case,
            reason: "not a focusing power case".into(),
        });
    }
    solve_nehari(case, params, grid, opts)
}

/// Focusing cases with the branch coupling `G` or `H`; certifies the level
/// bound and, for the positive branch, the smallness conditions.
pub fn solve_focusing_ab(
    case: WaveCase,
    params: &SystemParams,
    grid: &Grid1D,
    opts: &SolveOptions,
) -> Result<StandingWavePair, StandingWaveError> {
    if !matches!(case, WaveCase::FocusAbNeg | WaveCase::FocusAbPos) {
        return Err(StandingWaveError::InvalidCase {
            case,
            reason: "not a branch-coupled focusing case".into(),
        });
    }
    solve_nehari(case, params, grid, opts)
}

fn solve_nehari(
    case: WaveCase,
    params: &SystemParams,
    grid: &Grid1D,
    opts: &SolveOptions,
) -> Result<StandingWavePair, StandingWaveError> {
    validate_case(case, params)?;
    require_truncated(grid)?;
    let f = action_functional(case, params, grid, opts.drop_intermediate)?;
    let alpha = params.alpha;

    let mut amplitude = opts.seed_amplitude;
    let mut restarts = 0;
    let found = loop {
        let mut u = seed(params, grid, amplitude);
        let collapsed = match functional::nehari_scale_global(&f, &u) {
            Some(t) => {
                u.iter_mut().for_each(|x| *x *= t);
                let out = descent::nehari_descent(&f, u, opts.descent_tol, opts.max_descent_iters);
                match out {
                    Some(o) if o.u.iter().fold(0.0_f64, |m, x| m.max(x.abs())) > 1e-8 => Some(o),
                    _ => None,
                }
            }
            None => None,
        };
        match collapsed {
            Some(o) => break o,
            None if restarts < opts.max_restarts => {
                restarts += 1;
                amplitude *= 2.0;
            }
            None => return Err(StandingWaveError::Collapse { restarts }),
        }
    };
    let mut u = found.u;
    let newton = newton::polish(&f, None, &mut u, 0.0, opts.newton_tol, opts.max_newton_iters);

    let v: Vec<f64> = match f.potential {
        _ if opts.drop_intermediate => vec![0.0; u.len()],
        Potential::NegBranch { branches, .. } => u.iter().map(|&x| branches.negative(alpha * x * x)).collect(),
        Potential::PosBranch { branches, .. } => u.iter().map(|&x| branches.positive(alpha * x * x)).collect(),
        _ => match case {
            WaveCase::FocusB => {
                let k = (alpha / params.b).cbrt();
                u.iter().map(|x| -k * x.abs().powf(2.0 / 3.0)).collect()
            }
            _ => {
                let k = case.v_sign() * (alpha / params.a).sqrt();
                u.iter().map(|x| k * x.abs()).collect()
            }
        },
    };

    let action = f.value(&u);
    let q = f.quadratic(&u);
    let nehari_gap = f.nehari_derivative(&u).abs();
    let pair = StandingWavePair {
        case,
        u: RealField::new(*grid, u)?,
        v: RealField::new(*grid, v)?,
        multiplier: None,
        recovered_ab: None,
        residual_u: 0.0,
        residual_algebraic: 0.0,
        action_value: action,
        certificates: Vec::new(),
        diagnostics: SolveDiagnostics {
            descent_iterations: found.iterations,
            descent_residual: found.residual,
            descent_converged: found.converged,
            newton_iterations: newton.iterations,
            newton_residual: newton.residual,
            converged: newton.converged,
            restarts,
            action_history: found.history,
        },
    };
    let drop = opts.drop_intermediate;
    finish(pair, params, opts, |pair, certs| {
        certs.push(Certificate::at_most("nehari_identity", nehari_gap, 1e-8 * q));
        certs.push(Certificate::above("action_positive", action, 0.0));
        if drop {
            certs.retain(|c| c.name != "residual_algebraic" && c.name != "v_sign");
        }
        if matches!(case, WaveCase::FocusAbNeg | WaveCase::FocusAbPos) {
            let level = level_bound(params, grid);
            certs.push(Certificate::at_most("level_bound", action, level * (1.0 + 1e-6)));
        }
        if case == WaveCase::FocusAbPos {
            let branches = CubicBranches::with_cap(params.a, params.b, params.rho).expect("validated");
            let peak = alpha * pair.u.norm_inf().powi(2);
            certs.push(Certificate::at_most("smallness_peak", peak, branches.peak_level()));
            certs.push(Certificate::at_most(
                "smallness_cap",
                branches.positive_uncapped(peak),
                0.5 * params.rho,
            ));
        }
    })
}

/// Fills residuals and common certificates, then decides between success,
/// certificate failure and non-convergence.
fn finish(
    mut pair: StandingWavePair,
    params: &SystemParams,
    opts: &SolveOptions,
    extra: impl FnOnce(&StandingWavePair, &mut Vec<Certificate>),
) -> Result<StandingWavePair, StandingWaveError> {
    let r = residual(&pair, params);
    pair.residual_u = r.residual_u;
    pair.residual_algebraic = r.residual_algebraic;
    let u_max = pair.u.norm_inf();
    let threshold = opts.tail_threshold * u_max;
    let significant = || {
        pair.u
            .values()
            .iter()
            .zip(pair.v.values())
            .filter(move |(x, _)| x.abs() > threshold)
    };
    let min_u = significant().map(|(&x, _)| x).fold(f64::INFINITY, f64::min);
    let sign = pair.case.v_sign();
    let worst_v = significant().map(|(_, &y)| -sign * y).fold(f64::NEG_INFINITY, f64::max);
    let max_s = params.alpha * u_max * u_max;

    let mut certs = vec![
        Certificate::at_most("residual_U", r.residual_u, opts.residual_tol * (1.0 + u_max)),
        Certificate::at_most("residual_algebraic", r.residual_algebraic, 1e-10 * (1.0 + max_s)),
        Certificate::above("positivity", min_u, 0.0),
        Certificate::at_most("v_sign", worst_v, 0.0),
    ];
    if let Some(c) = certs.last_mut() {
        c.pass = worst_v < 0.0;
    }
    extra(&pair, &mut certs);
    pair.certificates = certs;

    let fatal: Vec<String> = pair
        .certificates
        .iter()
        .filter(|c| !c.pass && (c.name.starts_with("smallness") || c.name == "level_bound"))
        .map(|c| c.name.clone())
        .collect();
    if !fatal.is_empty() {
        let hint = if fatal.iter().any(|n| n.starts_with("smallness")) {
            "; retry with a smaller alpha".to_string()
        } else {
            String::new()
        };
        return Err(StandingWaveError::Certificate {
            failed: pair.failed_certificates(),
            hint,
            pair: Box::new(pair),
        });
    }
    if !pair.diagnostics.converged && !pair.certificate("residual_U").is_some_and(|c| c.pass) {
        return Err(StandingWaveError::NonConvergence {
            iterations: pair.diagnostics.descent_iterations + pair.diagnostics.newton_iterations,
            residual: pair.diagnostics.newton_residual,
            last: Box::new(pair),
        });
    }
    if !pair.pass() {
        return Err(StandingWaveError::Certificate {
            failed: pair.failed_certificates(),
            hint: String::new(),
            pair: Box::new(pair),
        });
    }
    Ok(pair)
}

/// Solves `-U'' + αρU + U³ = λ|U|^{2/3}U` by Newton from `start`, with the
/// multiplier of a `DefocusM1` pair held fixed.
pub fn resolve_with_multiplier(
    pair: &StandingWavePair,
    params: &SystemParams,
    start: &RealField,
    opts: &SolveOptions,
) -> Result<RealField, StandingWaveError> {
    let lambda = match (pair.case, pair.multiplier) {
        (WaveCase::DefocusM1, Some(l)) => l,
        _ => {
            return Err(StandingWaveError::InvalidCase {
                case: pair.case,
                reason: "re-solve needs a DefocusM1 pair".into(),
            })
        }
    };
    let f = Functional {
        grid: *start.grid(),
        c: params.alpha * params.rho,
        potential: Potential::Power {
            coef: -lambda,
            p: 8.0 / 3.0,
            quartic: 1.0,
        },
    };
    let mut u = start.values().to_vec();
    let out = newton::polish(&f, None, &mut u, 0.0, opts.newton_tol, opts.max_newton_iters);
    if !out.converged {
        return Err(StandingWaveError::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
            last: Box::new(pair.clone()),
        });
    }
    Ok(RealField::new(*start.grid(), u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{CouplingKind, Sign};

    fn params(alpha: f64, rho: f64, a: f64, b: f64) -> SystemParams {
        SystemParams {
            alpha,
            theta: 0.0,
            rho,
            a,
            b,
            epsilon: 0.0,
            coupling: CouplingKind::Affine { sign: Sign::Plus },
        }
    }

    #[test]
    fn soliton_samples_and_residual() {
        let m = 0.15;
        let g = Grid1D::decay_truncated(80.0, 8192).unwrap();
        let w = reference_soliton(m, &g);
        assert!((w.norm_inf() - (2.0 * m).sqrt()).abs() < m.powf(1.5) * g.spacing().powi(2));
        let v = RealField::from_fn(g, |_| m / 0.1 - 1.0);
        let r = residual_u(&w, &v, 0.1, 1.0, true);
        let h = g.spacing();
        assert!(r < 1e-3 && r > 0.0);
        let coarse = Grid1D::decay_truncated(80.0, 4096).unwrap();
        let rc = residual_u(&reference_soliton(m, &coarse), &RealField::from_fn(coarse, |_| m / 0.1 - 1.0), 0.1, 1.0, true);
        assert!((3.5..4.5).contains(&(rc / r)), "order ratio {}", rc / r);
        assert!(r <= m.powf(2.5) * h * h);
    }

    #[test]
    fn case_validation() {
        assert!(validate_case(WaveCase::FocusAbPos, &params(0.01, 1.0, 0.0, 1.0)).is_err());
        assert!(validate_case(WaveCase::FocusAbPos, &params(0.01, 1.0, 1.0, 1.0)).is_ok());
        assert!(validate_case(WaveCase::DefocusM2, &params(0.05, 1.0, 1.0, 0.0)).is_ok());
        assert!(validate_case(WaveCase::DefocusM2, &params(0.05, -1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn level_bound_matches_closed_form() {
        let p = params(0.01, 1.0, 1.0, 1.0);
        let g = Grid1D::decay_truncated(300.0, 4096).unwrap();
        let m: f64 = 0.015;
        assert!((level_bound(&p, &g) - 4.0 / 3.0 * m.powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn nehari_projection_of_a_point_on_the_set_is_identity() {
        let p = params(0.1, 1.0, 0.0, 1.0);
        let g = Grid1D::decay_truncated(40.0, 512).unwrap();
        let f = action_functional(WaveCase::FocusB, &p, &g, false).unwrap();
        let w = reference_soliton(0.1, &g).map(|x| 1.7 * x);
        let (_, on) = nehari_project(&w, &f).unwrap();
        let (t, _) = nehari_project(&on, &f).unwrap();
        assert!((t - 1.0).abs() < 1e-10);
        assert!(matches!(nehari_project(&RealField::zeros(g), &f), Err(StandingWaveError::ZeroField)));
    }

    #[test]
    fn nehari_scale_is_at_most_one_when_derivative_is_non_positive() {
        let p = params(0.1, 1.0, 1.0, 0.0);
        let g = Grid1D::decay_truncated(40.0, 512).unwrap();
        let f = action_functional(WaveCase::FocusAminus, &p, &g, false).unwrap();
        for amp in [1.0, 2.0, 5.0] {
            let u = reference_soliton(0.3, &g).map(|x| amp * x);
            let (t, _) = nehari_project(&u, &f).unwrap();
            if f.nehari_derivative(u.values()) <= 0.0 {
                assert!(t <= 1.0);
            } else {
                assert!(t > 1.0);
            }
        }
    }
}
