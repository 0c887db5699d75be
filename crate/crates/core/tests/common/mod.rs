//! Property checks shared by the `properties` suite and the acceptance gate.
#![allow(dead_code)]

use cglw_core::coupling::CubicBranches;
use cglw_core::grid::{schwarz_rearrange, Grid1D, RealField};
use cglw_core::standing_waves::functional::{nehari_scale_global, Functional, Potential};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const N: usize = 96;

pub fn grid() -> Grid1D {
    Grid1D::decay_truncated(12.0, N).unwrap()
}

/// Random grid values in `[-3, 3]`.
pub fn raw_field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, N)
}

/// Positive smooth bumps `Σ c_k exp(-(x - x_k)²/w_k²)`.
pub fn bump_params() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.1..2.0f64, -4.0..4.0f64, 0.5..3.0f64), 1..4)
}

pub fn bumps(g: &Grid1D, params: &[(f64, f64, f64)]) -> Vec<f64> {
    g.coordinates()
        .iter()
        .map(|&x| params.iter().map(|&(c, x0, w)| c * (-((x - x0) / w).powi(2)).exp()).sum())
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Rearrangement keeps every Lᵖ norm, is non-increasing in |x|,
/// and does not raise the Dirichlet form.
pub fn rearrangement_property(values: Vec<f64>) -> Result<(), TestCaseError> {
    let g = grid();
    let f = RealField::new(g, values).unwrap();
    let r = schwarz_rearrange(&f);
    for p in [1.0, 2.0, 8.0 / 3.0, 3.0, 4.0] {
        prop_assert!(rel_close(f.norm_lp(p), r.norm_lp(p), 1e-13), "p = {}", p);
    }
    prop_assert_eq!(f.norm_inf(), r.norm_inf());
    prop_assert!(r.dirichlet_form() <= f.dirichlet_form() * (1.0 + 1e-13));
    let v = r.values();
    let m = N / 2;
    // pendulum order: x <= 0 side first at equal |x|
    for i in 0..m {
        prop_assert!(v[m - 1 - i] >= v[m + i]);
        if i + 1 < m {
            prop_assert!(v[m + i] >= v[m - 2 - i]);
        }
    }
    let twice = schwarz_rearrange(&r);
    prop_assert_eq!(twice.values(), r.values());
    Ok(())
}

fn focusing_functionals(g: Grid1D) -> [Functional; 3] {
    [
        Functional {
            grid: g,
            c: 0.15,
            potential: Potential::Power {
                coef: -0.4,
                p: 8.0 / 3.0,
                quartic: -1.0,
            },
        },
        Functional {
            grid: g,
            c: 0.05,
            potential: Potential::Power {
                coef: 0.3,
                p: 3.0,
                quartic: -1.0,
            },
        },
        Functional {
            grid: g,
            c: 0.02,
            potential: Potential::NegBranch {
                branches: CubicBranches::new(1.0, 1.0).unwrap(),
                alpha: 0.02,
            },
        },
    ]
}

/// `t*(cU) = t*(U)/c` and the projected field does not depend on `c`.
pub fn nehari_covariance_property(params: Vec<(f64, f64, f64)>, c: f64) -> Result<(), TestCaseError> {
    let g = grid();
    let u = bumps(&g, &params);
    let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
    for f in focusing_functionals(g) {
        let t = nehari_scale_global(&f, &u).expect("positive critical point");
        let tc = nehari_scale_global(&f, &cu).expect("positive critical point");
        prop_assert!(rel_close(tc, t / c, 1e-10), "{} vs {}", tc, t / c);
        let err = u
            .iter()
            .zip(&cu)
            .map(|(a, b)| (t * a - tc * b).abs())
            .fold(0.0, f64::max);
        let scale = u.iter().fold(0.0_f64, |m, x| m.max(x.abs())) * t;
        prop_assert!(err <= 1e-10 * scale);
    }
    Ok(())
}

/// Substitution of the branch inverses back into `aV² - bV³ = s`.
pub fn branch_substitution_property(a: f64, b: f64, s_frac: f64, s_log: f64) -> Result<(), TestCaseError> {
    let br = CubicBranches::new(a, b).unwrap();
    let s = 10f64.powf(s_log);
    let v = br.negative(s);
    prop_assert!(v < 0.0);
    prop_assert!(rel_close(a * v * v - b * v * v * v, s, 1e-12));
    prop_assert!(br.negative(1.5 * s) < v);

    let s_pos = s_frac * br.peak_level();
    let capped = CubicBranches::with_cap(a, b, 1e6).unwrap();
    let w = capped.positive(s_pos);
    prop_assert!(w >= 0.0 && w <= 2.0 * a / (3.0 * b) * (1.0 + 1e-15));
    prop_assert!(rel_close(a * w * w - b * w * w * w, s_pos, 1e-12));

    let tight = CubicBranches::with_cap(a, b, 0.3).unwrap();
    let limit = (2.0 * a / (3.0 * b)).min(0.15);
    for t in [0.5 * s_pos, s_pos, 2.0 * s_pos, s] {
        let h = tight.positive(t);
        prop_assert!((0.0..=limit * (1.0 + 1e-15)).contains(&h));
        prop_assert!(tight.positive(1.1 * t) >= h);
    }
    Ok(())
}

/// Superposition of the difference operators, and second order on smooth
/// periodic data.
pub fn derivative_property(
    coefs: (f64, f64),
    k1: u32,
    k2: u32,
    phase: f64,
) -> Result<(), TestCaseError> {
    let (ca, cb) = coefs;
    let lf = 6.0;
    let wave = |g: Grid1D, k: u32| {
        let w = std::f64::consts::PI * k as f64 / lf;
        RealField::from_fn(g, move |x| (w * x + phase).sin())
    };
    let g = Grid1D::periodic(lf, 128).unwrap();
    let (f, h) = (wave(g, k1), wave(g, k2));
    let combo = RealField::new(
        g,
        f.values().iter().zip(h.values()).map(|(x, y)| ca * x + cb * y).collect(),
    )
    .unwrap();
    let scale = (ca.abs() + cb.abs()) * 1e3;
    for (lhs, fa, fb) in [
        (combo.second_derivative(), f.second_derivative(), h.second_derivative()),
        (combo.first_derivative(), f.first_derivative(), h.first_derivative()),
    ] {
        for j in 0..g.n_points() {
            let rhs = ca * fa.values()[j] + cb * fb.values()[j];
            prop_assert!((lhs.values()[j] - rhs).abs() <= 1e-13 * scale);
        }
    }
    prop_assert!(f.first_derivative().integrate().abs() <= 1e-12);

    let w = std::f64::consts::PI * k1 as f64 / lf;
    let errors: Vec<(f64, f64)> = [64usize, 128]
        .iter()
        .map(|&n| {
            let g = Grid1D::periodic(lf, n).unwrap();
            let f = wave(g, k1);
            let x = g.coordinates();
            let e2 = f
                .second_derivative()
                .values()
                .iter()
                .zip(&x)
                .map(|(d, &x)| (d + w * w * (w * x + phase).sin()).abs())
                .fold(0.0, f64::max);
            let e1 = f
                .first_derivative()
                .values()
                .iter()
                .zip(&x)
                .map(|(d, &x)| (d - w * (w * x + phase).cos()).abs())
                .fold(0.0, f64::max);
            (e1, e2)
        })
        .collect();
    for (coarse, fine) in [(errors[0].0, errors[1].0), (errors[0].1, errors[1].1)] {
        let ratio = coarse / fine;
        prop_assert!((3.5..=4.5).contains(&ratio), "ratio {}", ratio);
    }
    Ok(())
}

pub fn coef_pair() -> impl Strategy<Value = (f64, f64)> {
    (-5.0..5.0f64, -5.0..5.0f64)
}
