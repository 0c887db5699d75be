use cglw_core::coupling::{CouplingKind, Sign, SystemParams};
use cglw_core::grid::{Grid1D, RealField};
use cglw_core::standing_waves::{self, SolveOptions, StandingWaveError, StandingWavePair, WaveCase};

fn params(alpha: f64, a: f64, b: f64) -> SystemParams {
    SystemParams {
        alpha,
        theta: 0.0,
        rho: 1.0,
        a,
        b,
        epsilon: 0.0,
        coupling: CouplingKind::Affine { sign: Sign::Plus },
    }
}

fn grid() -> Grid1D {
    Grid1D::decay_truncated(150.0, 4096).unwrap()
}

fn solve(case: WaveCase, a: f64, b: f64) -> StandingWavePair {
    standing_waves::solve(case, &params(0.05, a, b), &grid(), &SolveOptions::default()).unwrap()
}

#[test]
fn plus_and_minus_cubic_cases_give_distinct_positive_profiles() {
    let plus = solve(WaveCase::FocusAplus, 1.0, 0.0);
    let minus = solve(WaveCase::FocusAminus, 1.0, 0.0);
    assert!(plus.u.values().iter().all(|&x| x > 0.0));
    assert!(minus.u.values().iter().all(|&x| x > 0.0));
    let diff = plus
        .u
        .values()
        .iter()
        .zip(minus.u.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff > 1e-3, "{diff}");
    // the repulsive middle term needs a taller profile
    assert!(plus.u.norm_inf() > minus.u.norm_inf());
    assert!(plus.v.values().iter().all(|&v| v >= 0.0));
    assert!(minus.v.values().iter().all(|&v| v <= 0.0));
}

#[test]
fn focusing_power_pair_lies_on_the_nehari_set() {
    let b = 1.0;
    let pair = solve(WaveCase::FocusB, 0.0, b);
    let g = pair.u.grid();
    let h = g.spacing();
    let u = pair.u.values();
    let alpha: f64 = 0.05;
    let q = pair.u.dirichlet_form() + alpha * h * u.iter().map(|x| x * x).sum::<f64>();
    let rhs = alpha.powf(4.0 / 3.0) / b.cbrt() * h * u.iter().map(|x| x.abs().powf(8.0 / 3.0)).sum::<f64>()
        + h * u.iter().map(|x| x.powi(4)).sum::<f64>();
    assert!((q - rhs).abs() <= 1e-8 * q);
    assert!(pair.action_value > 0.0);
}

#[test]
fn constrained_minimizers_meet_their_constraints() {
    let g = grid();
    let h = g.spacing();
    let m1 = solve(WaveCase::DefocusM1, 0.0, 1.0);
    let c1 = h * m1.u.values().iter().map(|x| x.abs().powf(8.0 / 3.0)).sum::<f64>();
    assert!((c1 - 1.0).abs() <= 1e-10);
    let m2 = solve(WaveCase::DefocusM2, 1.0, 0.0);
    let c2 = h * m2.u.values().iter().map(|x| x.abs().powi(3)).sum::<f64>();
    assert!((c2 - 1.0).abs() <= 1e-10);
    for pair in [&m1, &m2] {
        assert!(pair.multiplier.unwrap() > 0.0);
        let history = &pair.diagnostics.action_history;
        assert!(history.windows(2).all(|w| w[1] <= w[0]), "descent must be monotone");
    }
    let m3 = solve(WaveCase::DefocusM3, 1.0, 1.0);
    let (a, b) = m3.recovered_ab.unwrap();
    let lambda = m3.multiplier.unwrap();
    assert!(lambda > 0.0);
    assert!((a - lambda.powi(-2)).abs() <= 1e-14 * a && (b - lambda.powi(-3)).abs() <= 1e-14 * b);
    assert!(m3.v.values().iter().all(|&v| v <= 0.0));
}

#[test]
fn residual_detects_perturbations() {
    let pair = solve(WaveCase::FocusB, 0.0, 1.0);
    let p = params(0.05, 0.0, 1.0);
    let base = standing_waves::residual(&pair, &p).residual_u;
    let g = *pair.u.grid();
    let mut bumped = pair.clone();
    bumped.u = RealField::new(
        g,
        pair.u
            .values()
            .iter()
            .zip(g.coordinates())
            .map(|(&u, x)| u + 1e-3 * (-x * x).exp())
            .collect(),
    )
    .unwrap();
    let raised = standing_waves::residual(&bumped, &p).residual_u;
    assert!(raised - base >= 1e-4, "{base:e} -> {raised:e}");
}

#[test]
fn zero_pair_has_zero_residual_but_fails_positivity() {
    let g = grid();
    let zero = RealField::zeros(g);
    assert_eq!(standing_waves::residual_u(&zero, &zero, 0.05, 1.0, true), 0.0);
    let f = standing_waves::action_functional(WaveCase::FocusB, &params(0.05, 0.0, 1.0), &g, false).unwrap();
    assert!(matches!(standing_waves::nehari_project(&zero, &f), Err(StandingWaveError::ZeroField)));
}

#[test]
fn positive_branch_at_large_alpha_fails_with_a_smaller_alpha_hint() {
    let g = Grid1D::decay_truncated(20.0, 1024).unwrap();
    let err = standing_waves::solve(WaveCase::FocusAbPos, &params(10.0, 1.0, 1.0), &g, &SolveOptions::default()).unwrap_err();
    match err {
        StandingWaveError::Certificate { failed, hint, .. } => {
            assert!(failed.iter().any(|n| n == "smallness_peak"));
            assert!(hint.contains("smaller alpha"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn non_truncated_grids_are_rejected() {
    let g = Grid1D::periodic(20.0, 256).unwrap();
    let err = standing_waves::solve(WaveCase::FocusB, &params(0.05, 0.0, 1.0), &g, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, StandingWaveError::Boundary));
}
