//! `cglw` command line: JSON configuration with dotted `--set` overrides,
//! dispatch to the solvers, and artifact output.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 configuration error, 3 blow-up,
//! 4 certificate failure, 5 non-convergence.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Parser;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::coupling::{CouplingKind, OneSidedExpCoupling, Sign, SystemParams, TanhCoupling};
use crate::evolution::{self, EvolveConfig, EvolveError, FieldState, MOMENT_CENTRES};
use crate::grid::{Boundary, ComplexField, Grid1D, RealField};
use crate::io;
use crate::standing_waves::{self, SolveOptions, StandingWaveError, StandingWavePair, WaveCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Command {
    Evolve,
    ViscositySweep,
    StandingWave,
    SolitonCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    Affine { sign: Sign },
    Tanh { base: f64, amplitude: f64 },
    OneSidedExp { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub theta: f64,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub coupling: CouplingConfig,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            theta: 0.3,
            rho: 1.0,
            a: 1.0,
            b: 1.0,
            epsilon: 0.1,
            coupling: CouplingConfig::Affine { sign: Sign::Plus },
        }
    }
}

impl ParamsConfig {
    pub fn to_params(&self) -> SystemParams {
        let coupling = match self.coupling {
            CouplingConfig::Affine { sign } => CouplingKind::Affine { sign },
            CouplingConfig::Tanh { base, amplitude } => {
                CouplingKind::BoundedSmooth(Arc::new(TanhCoupling { base, amplitude }))
            }
            CouplingConfig::OneSidedExp { amplitude } => {
                CouplingKind::BoundedSmooth(Arc::new(OneSidedExpCoupling { amplitude }))
            }
        };
        SystemParams {
            alpha: self.alpha,
            theta: self.theta,
            rho: self.rho,
            a: self.a,
            b: self.b,
            epsilon: self.epsilon,
            coupling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub boundary: Boundary,
    pub half_length: f64,
    pub n_points: usize,
}

impl GridConfig {
    fn default_for(command: Command) -> Self {
        match command {
            Command::Evolve | Command::ViscositySweep => Self {
                boundary: Boundary::Periodic,
                half_length: 20.0,
                n_points: 256,
            },
            Command::StandingWave => Self {
                boundary: Boundary::DecayTruncated,
                half_length: 150.0,
                n_points: 4096,
            },
            Command::SolitonCheck => Self {
                boundary: Boundary::DecayTruncated,
                half_length: 40.0,
                n_points: 4096,
            },
        }
    }
}

/// Complex initial profiles; widths enter as `exp(-(x - c)² / (2 w²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComplexProfile {
    Zero,
    /// Gaussian times `exp(i chirp x²)`.
    Gaussian {
        amplitude: f64,
        centre: f64,
        width: f64,
        #[serde(default)]
        chirp: f64,
    },
    /// `amplitude sech((x - centre)/width) exp(i wavenumber x)`.
    Sech {
        amplitude: f64,
        centre: f64,
        width: f64,
        #[serde(default)]
        wavenumber: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RealProfile {
    Zero,
    Constant { value: f64 },
    Gaussian { amplitude: f64, centre: f64, width: f64 },
    /// `amplitude (1 - ((x - centre)/radius)²)³` inside the radius, zero outside.
    CompactBump { amplitude: f64, centre: f64, radius: f64 },
}

fn gaussian(x: f64, centre: f64, width: f64) -> f64 {
    (-(x - centre).powi(2) / (2.0 * width * width)).exp()
}

impl ComplexProfile {
    pub fn sample(&self, x: f64) -> Complex64 {
        match *self {
            ComplexProfile::Zero => Complex64::new(0.0, 0.0),
            ComplexProfile::Gaussian {
                amplitude,
                centre,
                width,
                chirp,
            } => Complex64::from_polar(amplitude * gaussian(x, centre, width), chirp * x * x),
            ComplexProfile::Sech {
                amplitude,
                centre,
                width,
                wavenumber,
            } => Complex64::from_polar(amplitude / ((x - centre) / width).cosh(), wavenumber * x),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match *self {
            ComplexProfile::Gaussian { width, .. } | ComplexProfile::Sech { width, .. } if !(width > 0.0) => {
                Err(format!("u0 width must be positive, got {width}"))
            }
            _ => Ok(()),
        }
    }
}

impl RealProfile {
    pub fn sample(&self, x: f64) -> f64 {
        match *self {
            RealProfile::Zero => 0.0,
            RealProfile::Constant { value } => value,
            RealProfile::Gaussian {
                amplitude,
                centre,
                width,
            } => amplitude * gaussian(x, centre, width),
            RealProfile::CompactBump {
                amplitude,
                centre,
                radius,
            } => {
                let r = (x - centre) / radius;
                if r.abs() < 1.0 {
                    amplitude * (1.0 - r * r).powi(3)
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        match *self {
            RealProfile::Gaussian { width, .. } if !(width > 0.0) => Err(format!("v0 width must be positive, got {width}")),
            RealProfile::CompactBump { radius, .. } if !(radius > 0.0) => {
                Err(format!("v0 radius must be positive, got {radius}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub dt: f64,
    pub t_final: f64,
    pub monitor_stride: usize,
    pub snapshot_stride: Option<usize>,
    pub speed_floor: f64,
    pub u0: ComplexProfile,
    pub v0: RealProfile,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 1.0,
            monitor_stride: 1,
            snapshot_stride: None,
            speed_floor: evolution::DEFAULT_SPEED_FLOOR,
            u0: ComplexProfile::Gaussian {
                amplitude: 1.0,
                centre: 0.0,
                width: 1.0,
                chirp: 0.5,
            },
            v0: RealProfile::Gaussian {
                amplitude: 0.8,
                centre: 1.0,
                width: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.05, 0.025],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandingWaveSection {
    pub case: WaveCase,
    pub residual_tol: f64,
    pub descent_tol: f64,
    pub newton_tol: f64,
    pub max_descent_iters: usize,
    pub max_newton_iters: usize,
    pub drop_intermediate: bool,
    pub seed_amplitude: f64,
    pub tail_threshold: f64,
    pub max_restarts: usize,
}

impl Default for StandingWaveSection {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            case: WaveCase::FocusAbNeg,
            residual_tol: o.residual_tol,
            descent_tol: o.descent_tol,
            newton_tol: o.newton_tol,
            max_descent_iters: o.max_descent_iters,
            max_newton_iters: o.max_newton_iters,
            drop_intermediate: o.drop_intermediate,
            seed_amplitude: o.seed_amplitude,
            tail_threshold: o.tail_threshold,
            max_restarts: o.max_restarts,
        }
    }
}

impl StandingWaveSection {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            residual_tol: self.residual_tol,
            descent_tol: self.descent_tol,
            newton_tol: self.newton_tol,
            max_descent_iters: self.max_descent_iters,
            max_newton_iters: self.max_newton_iters,
            drop_intermediate: self.drop_intermediate,
            seed_amplitude: self.seed_amplitude,
            tail_threshold: self.tail_threshold,
            max_restarts: self.max_restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonSection {
    /// Defaults to `3ρα/2`.
    pub m: Option<f64>,
    pub residual_bound: f64,
    pub profile_bound: f64,
}

impl Default for SolitonSection {
    fn default() -> Self {
        Self {
            m: None,
            residual_bound: 1e-3,
            profile_bound: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub params: ParamsConfig,
    /// Defaults depend on the command; resolved before execution.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub standing_wave: StandingWaveSection,
    #[serde(default)]
    pub soliton: SolitonSection,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid1D, CliError> {
        let g = self.grid.unwrap_or_else(|| GridConfig::default_for(self.command));
        Grid1D::new(g.half_length, g.n_points, g.boundary).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("blow-up: {0}")]
    BlowUp(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::BlowUp(_) => 3,
            CliError::Certificate(_) => 4,
            CliError::NonConvergence(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Config(_) => "config",
            CliError::BlowUp(_) => "blow_up",
            CliError::Certificate(_) => "certificate_failure",
            CliError::NonConvergence(_) => "non_convergence",
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "cglw", about = "Coupled Ginzburg-Landau / conservation-law solver")]
pub struct Cli {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// Override `dotted.key=value`; the value is parsed as JSON, else taken as a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Applies one `dotted.key=value` override to a JSON tree.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` is malformed")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override key `{key}` descends into a non-object")))?;
        node = obj
            .entry(part.to_string())
            .and_modify(|v| {
                if v.is_null() {
                    *v = Value::Object(Default::default());
                }
            })
            .or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("override key `{key}` descends into a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads, overrides, deserializes and validates a configuration. The grid
/// default is filled in, so the result serializes to the resolved config.
pub fn parse_config(
    path: Option<&Path>,
    command: Option<Command>,
    sets: &[String],
) -> Result<RunConfig, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !root.is_object() {
        return Err(CliError::Config("the configuration must be a JSON object".into()));
    }
    for s in sets {
        apply_override(&mut root, s)?;
    }
    if let Some(c) = command {
        root["command"] = serde_json::to_value(c).expect("command serializes");
    }
    let mut cfg: RunConfig = serde_json::from_value(root).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.grid = Some(cfg.grid.unwrap_or_else(|| GridConfig::default_for(cfg.command)));
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let config = |e: String| CliError::Config(e);
    let params = cfg.params.to_params();
    params.validate().map_err(|e| config(e.to_string()))?;
    let grid = cfg.grid()?;
    match cfg.command {
        Command::Evolve | Command::ViscositySweep => {
            let e = &cfg.evolve;
            if !(e.dt > 0.0 && e.dt.is_finite()) {
                return Err(config(format!("evolve.dt must be positive, got {}", e.dt)));
            }
            if !(e.t_final >= 0.0 && e.t_final.is_finite()) {
                return Err(config(format!("evolve.t_final must be non-negative, got {}", e.t_final)));
            }
            if e.monitor_stride == 0 || e.snapshot_stride == Some(0) {
                return Err(config("strides must be positive".into()));
            }
            if !(e.speed_floor > 0.0) {
                return Err(config(format!("evolve.speed_floor must be positive, got {}", e.speed_floor)));
            }
            e.u0.validate().map_err(config)?;
            e.v0.validate().map_err(config)?;
            if cfg.command == Command::ViscositySweep {
                let eps = &cfg.sweep.epsilons;
                if eps.len() < 2 || eps.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(config("sweep.epsilons needs at least two positive values".into()));
                }
            }
        }
        Command::StandingWave => {
            if grid.boundary() != Boundary::DecayTruncated {
                return Err(config("standing waves need a decay_truncated grid".into()));
            }
            standing_waves::validate_case(cfg.standing_wave.case, &params).map_err(|e| config(e.to_string()))?;
        }
        Command::SolitonCheck => {
            if grid.boundary() != Boundary::DecayTruncated {
                return Err(config("soliton_check needs a decay_truncated grid".into()));
            }
            if !(params.alpha > 0.0 && params.rho > 0.0) {
                return Err(config("soliton_check needs alpha > 0 and rho > 0".into()));
            }
            if cfg.soliton.m.is_some_and(|m| !(m > 0.0 && m.is_finite())) {
                return Err(config("soliton.m must be positive".into()));
            }
        }
    }
    Ok(())
}

pub fn initial_state(cfg: &RunConfig) -> Result<FieldState, CliError> {
    let grid = cfg.grid()?;
    let u = ComplexField::from_fn(grid, |x| cfg.evolve.u0.sample(x));
    let v = RealField::from_fn(grid, |x| cfg.evolve.v0.sample(x));
    FieldState::new(0.0, u, v).map_err(|e| CliError::Config(e.to_string()))
}

fn evolve_config(cfg: &RunConfig) -> EvolveConfig {
    let mut ec = EvolveConfig::new(cfg.params.to_params(), cfg.evolve.dt, cfg.evolve.t_final);
    ec.monitor_stride = cfg.evolve.monitor_stride;
    ec.snapshot_stride = cfg.evolve.snapshot_stride;
    ec.speed_floor = cfg.evolve.speed_floor;
    ec
}

struct Out<'a>(&'a Path);

impl Out<'_> {
    fn text(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = self.0.join(name);
        io::write_text(&p, contents).map_err(io_err(&p))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        self.text(name, &io::json_string(value))
    }
}

/// Runs a validated configuration, writing artifacts into `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let out = Out(out);
    out.json("resolved_config.json", cfg)?;
    match cfg.command {
        Command::Evolve => run_evolve(cfg, &out),
        Command::ViscositySweep => run_sweep(cfg, &out),
        Command::StandingWave => run_standing_wave(cfg, &out),
        Command::SolitonCheck => run_soliton_check(cfg, &out),
    }
}

fn evolve_error(e: EvolveError, out: &Out<'_>) -> Result<(), CliError> {
    match e {
        EvolveError::BlowUp {
            time,
            reason,
            last_finite,
        } => {
            out.text("snapshot_last_finite.csv", &io::snapshot_csv(&last_finite))?;
            let message = format!("at t = {time}: {reason}");
            out.json(
                "summary.json",
                &json!({"status": "blow_up", "time": time, "reason": reason, "last_finite_time": last_finite.time}),
            )?;
            Err(CliError::BlowUp(message))
        }
        other => Err(CliError::Config(other.to_string())),
    }
}

fn run_evolve(cfg: &RunConfig, out: &Out<'_>) -> Result<(), CliError> {
    let initial = initial_state(cfg)?;
    let traj = match evolution::run(&initial, &evolve_config(cfg)) {
        Ok(t) => t,
        Err(e) => return evolve_error(e, out),
    };
    let mut reports = vec![traj.initial_report];
    reports.extend_from_slice(&traj.reports);
    out.text("monitors.csv", &io::monitors_csv(&reports))?;
    out.text("residuals.csv", &io::residuals_csv(&traj.residuals))?;
    out.text("snapshot_initial.csv", &io::snapshot_csv(&initial))?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        out.text(&format!("snapshot_{:05}.csv", k + 1), &io::snapshot_csv(s))?;
    }
    out.text("snapshot_final.csv", &io::snapshot_csv(&traj.final_state))?;
    let max_mass_increase = reports
        .windows(2)
        .map(|w| w[1].mass - w[0].mass)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_v = reports.iter().map(|r| r.min_v).fold(f64::INFINITY, f64::min);
    let last = reports.last().expect("initial report present");
    out.json(
        "summary.json",
        &json!({
            "status": "ok",
            "steps": traj.steps,
            "dt": traj.dt,
            "t_final": last.t,
            "cumulative_residuals": traj.cumulative,
            "max_mass_increase": if reports.len() > 1 { Some(max_mass_increase) } else { None },
            "min_v": min_v,
            "final": last,
        }),
    )
}

fn run_sweep(cfg: &RunConfig, out: &Out<'_>) -> Result<(), CliError> {
    let initial = initial_state(cfg)?;
    let result = match evolution::viscosity_sweep(&initial, &evolve_config(cfg), &cfg.sweep.epsilons) {
        Ok(r) => r,
        Err(e) => return evolve_error(e, out),
    };
    out.json(
        "sweep.json",
        &json!({
            "moment_centres": MOMENT_CENTRES,
            "epsilons": result.epsilons,
            "moments": result.moments,
            "distances": result.distances,
            "strictly_decreasing": result.strictly_decreasing,
        }),
    )
}

/// Certificate report of a standing-wave pair.
pub fn certificate_json(pair: &StandingWavePair, status: &str, message: Option<&str>) -> Value {
    let certs: serde_json::Map<String, Value> = pair
        .certificates
        .iter()
        .map(|c| (c.name.clone(), json!({"value": c.value, "bound": c.bound, "pass": c.pass})))
        .collect();
    let d = &pair.diagnostics;
    json!({
        "case": pair.case,
        "status": status,
        "message": message,
        "lambda": pair.multiplier,
        "a_recovered": pair.recovered_ab.map(|ab| ab.0),
        "b_recovered": pair.recovered_ab.map(|ab| ab.1),
        "residual_U": pair.residual_u,
        "residual_algebraic": pair.residual_algebraic,
        "action": pair.action_value,
        "certificates": certs,
        "pass": pair.pass() && status == "ok",
        "diagnostics": {
            "descent_iterations": d.descent_iterations,
            "descent_residual": d.descent_residual,
            "descent_converged": d.descent_converged,
            "newton_iterations": d.newton_iterations,
            "newton_residual": d.newton_residual,
            "converged": d.converged,
            "restarts": d.restarts,
            "u_max": pair.u.norm_inf(),
        },
    })
}

fn run_standing_wave(cfg: &RunConfig, out: &Out<'_>) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let params = cfg.params.to_params();
    let result = standing_waves::solve(cfg.standing_wave.case, &params, &grid, &cfg.standing_wave.options());
    let (pair, status, err) = match result {
        Ok(pair) => (pair, "ok", None),
        Err(e) => {
            let message = e.to_string();
            match e {
                StandingWaveError::Certificate { pair, .. } => {
                    (*pair, "certificate_failure", Some(CliError::Certificate(message)))
                }
                StandingWaveError::NonConvergence { last, .. } => {
                    (*last, "non_convergence", Some(CliError::NonConvergence(message)))
                }
                StandingWaveError::Collapse { .. } | StandingWaveError::NoNehariPoint | StandingWaveError::Infeasible => {
                    out.json("certificate.json", &json!({"case": cfg.standing_wave.case, "status": "non_convergence", "message": message, "pass": false}))?;
                    return Err(CliError::NonConvergence(message));
                }
                _ => return Err(CliError::Config(message)),
            }
        }
    };
    out.text("profile.csv", &io::profile_csv(&pair.u, &pair.v))?;
    let message = err.as_ref().map(|e| e.to_string());
    out.json("certificate.json", &certificate_json(&pair, status, message.as_deref()))?;
    err.map_or(Ok(()), Err)
}

fn run_soliton_check(cfg: &RunConfig, out: &Out<'_>) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let base = cfg.params.to_params();
    let m = cfg.soliton.m.unwrap_or(1.5 * base.rho * base.alpha);
    let w = standing_waves::reference_soliton(m, &grid);
    let zero = RealField::zeros(grid);
    let residual = standing_waves::residual_u(&w, &zero, 1.0, m, true);

    // the cubic problem -U'' + αρ'U = U³ with αρ' = m
    let params = SystemParams {
        rho: m / base.alpha,
        a: 0.0,
        b: 1.0,
        ..base
    };
    let opts = SolveOptions {
        drop_intermediate: true,
        ..cfg.standing_wave.options()
    };
    let solved = standing_waves::solve_focusing(WaveCase::FocusB, &params, &grid, &opts);
    let (profile_error, solve_residual, solver_message) = match &solved {
        Ok(pair) => {
            let err = pair
                .u
                .values()
                .iter()
                .zip(w.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / w.norm_inf();
            (Some(err), Some(pair.residual_u), None)
        }
        Err(e) => (None, None, Some(e.to_string())),
    };
    if let Ok(pair) = &solved {
        out.text("profile.csv", &io::profile_csv(&pair.u, &pair.v))?;
    }
    let residual_pass = residual <= cfg.soliton.residual_bound;
    let profile_pass = profile_error.is_some_and(|e| e <= cfg.soliton.profile_bound);
    let pass = residual_pass && profile_pass;
    out.json(
        "soliton_check.json",
        &json!({
            "m": m,
            "half_length": grid.half_length(),
            "n_points": grid.n_points(),
            "spacing": grid.spacing(),
            "residual_U": residual,
            "residual_bound": cfg.soliton.residual_bound,
            "residual_pass": residual_pass,
            "profile_relative_error": profile_error,
            "profile_bound": cfg.soliton.profile_bound,
            "profile_pass": profile_pass,
            "solver_residual_U": solve_residual,
            "solver_message": solver_message,
            "pass": pass,
        }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Certificate(format!(
            "soliton check failed: residual {residual:e}, profile error {profile_error:?}"
        )))
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = parse_config(cli.config.as_deref(), cli.command, &cli.set).and_then(|cfg| {
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        execute(&cfg, &out)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "exit_code": e.exit_code(), "message": e.to_string()}));
            e.exit_code()
        }
    }
}
