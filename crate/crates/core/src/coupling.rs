//! System constants and the pointwise algebra of the coupling: the flux
//! `f(v) = a v² - b v³`, its antiderivative, the coupling function `g`, and
//! the branch inverses of `a V² - b V³ = s` together with their
//! antiderivatives.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("alpha must be positive, got {0}")]
    Alpha(f64),
    #[error("theta must lie in the open interval (-pi/2, pi/2), got {0}")]
    Theta(f64),
    #[error("a and b must be non-negative, got a = {a}, b = {b}")]
    NegativeFlux { a: f64, b: f64 },
    #[error("branch inverses need a > 0 or b > 0, got a = {a}, b = {b}")]
    DegenerateFlux { a: f64, b: f64 },
    #[error("epsilon must be non-negative, got {0}")]
    Epsilon(f64),
    #[error("rho must be positive for the capped positive branch, got {0}")]
    Rho(f64),
    #[error("coupling g must be non-negative, found g({v}) = {value}")]
    NegativeCoupling { v: f64, value: f64 },
    #[error("parameter {name} is not finite")]
    NotFinite { name: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// A smooth coupling supplied with its first two derivatives in closed form.
pub trait CouplingFunction: Send + Sync {
    fn value(&self, v: f64) -> f64;
    fn derivative(&self, v: f64) -> f64;
    fn second_derivative(&self, v: f64) -> f64;
    fn name(&self) -> String {
        "custom".to_string()
    }
}

/// `g(v) = base + amplitude * tanh(v)`; non-negative when `base >= |amplitude|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhCoupling {
    pub base: f64,
    pub amplitude: f64,
}

impl CouplingFunction for TanhCoupling {
    fn value(&self, v: f64) -> f64 {
        self.base + self.amplitude * v.tanh()
    }
    fn derivative(&self, v: f64) -> f64 {
        let s = 1.0 / v.cosh();
        self.amplitude * s * s
    }
    fn second_derivative(&self, v: f64) -> f64 {
        let s = 1.0 / v.cosh();
        -2.0 * self.amplitude * s * s * v.tanh()
    }
    fn name(&self) -> String {
        format!("tanh(base={}, amplitude={})", self.base, self.amplitude)
    }
}

/// `g(v) = amplitude * exp(-1/v)` for `v > 0`, zero otherwise: bounded,
/// smooth, non-negative, and `g'` vanishes identically on `v <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedExpCoupling {
    pub amplitude: f64,
}

/// Below this `exp(-1/v)` and all its derivatives underflow to zero.
const ONE_SIDED_CUTOFF: f64 = 1e-3;

impl CouplingFunction for OneSidedExpCoupling {
    fn value(&self, v: f64) -> f64 {
        if v > ONE_SIDED_CUTOFF {
            self.amplitude * (-1.0 / v).exp()
        } else {
            0.0
        }
    }
    fn derivative(&self, v: f64) -> f64 {
        if v > ONE_SIDED_CUTOFF {
            self.amplitude * (-1.0 / v).exp() / (v * v)
        } else {
            0.0
        }
    }
    fn second_derivative(&self, v: f64) -> f64 {
        if v > ONE_SIDED_CUTOFF {
            let e = (-1.0 / v).exp();
            self.amplitude * e * (1.0 - 2.0 * v) / v.powi(4)
        } else {
            0.0
        }
    }
    fn name(&self) -> String {
        format!("one_sided_exp(amplitude={})", self.amplitude)
    }
}

#[derive(Clone)]
pub enum CouplingKind {
    /// `g(v) = ±v + rho`, with `rho` taken from [`SystemParams::rho`].
    Affine { sign: Sign },
    BoundedSmooth(Arc<dyn CouplingFunction>),
}

impl fmt::Debug for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingKind::Affine { sign } => f.debug_struct("Affine").field("sign", sign).finish(),
            CouplingKind::BoundedSmooth(g) => f.debug_tuple("BoundedSmooth").field(&g.name()).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemParams {
    pub alpha: f64,
    pub theta: f64,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub coupling: CouplingKind,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("theta", self.theta),
            ("rho", self.rho),
            ("a", self.a),
            ("b", self.b),
            ("epsilon", self.epsilon),
        ] {
            if !v.is_finite() {
                return Err(ParamError::NotFinite { name });
            }
        }
        if self.alpha <= 0.0 {
            return Err(ParamError::Alpha(self.alpha));
        }
        if self.theta.abs() >= FRAC_PI_2 {
            return Err(ParamError::Theta(self.theta));
        }
        if self.a < 0.0 || self.b < 0.0 {
            return Err(ParamError::NegativeFlux { a: self.a, b: self.b });
        }
        if self.epsilon < 0.0 {
            return Err(ParamError::Epsilon(self.epsilon));
        }
        Ok(())
    }

    /// Checks `g >= 0` on the given sample points (only meaningful for the
    /// bounded smooth couplings).
    pub fn check_coupling_nonnegative(&self, samples: &[f64]) -> Result<(), ParamError> {
        for &v in samples {
            let value = self.g(v);
            if value < 0.0 {
                return Err(ParamError::NegativeCoupling { v, value });
            }
        }
        Ok(())
    }

    pub fn g(&self, v: f64) -> f64 {
        match &self.coupling {
            CouplingKind::Affine { sign } => sign.value() * v + self.rho,
            CouplingKind::BoundedSmooth(g) => g.value(v),
        }
    }

    pub fn g_prime(&self, v: f64) -> f64 {
        match &self.coupling {
            CouplingKind::Affine { sign } => sign.value(),
            CouplingKind::BoundedSmooth(g) => g.derivative(v),
        }
    }

    pub fn g_second(&self, v: f64) -> f64 {
        match &self.coupling {
            CouplingKind::Affine { .. } => 0.0,
            CouplingKind::BoundedSmooth(g) => g.second_derivative(v),
        }
    }

    pub fn flux(&self, v: f64) -> f64 {
        flux(v, self.a, self.b)
    }

    pub fn flux_prime(&self, v: f64) -> f64 {
        v * (2.0 * self.a - 3.0 * self.b * v)
    }

    pub fn flux_antiderivative(&self, v: f64) -> f64 {
        flux_antiderivative(v, self.a, self.b)
    }
}

pub fn flux(v: f64, a: f64, b: f64) -> f64 {
    v * v * (a - b * v)
}

/// `F(v) = ∫₀^v f = (a/3) v³ - (b/4) v⁴`.
pub fn flux_antiderivative(v: f64, a: f64, b: f64) -> f64 {
    let v3 = v * v * v;
    v3 * (a / 3.0 - 0.25 * b * v)
}

/// Validated coefficients of the cubic `φ(V) = a V² - b V³` with the inverse
/// branches used to assemble `V` from `αU²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicBranches {
    a: f64,
    b: f64,
    /// Cap of the positive branch, `min(2a/3b, rho/2)`; infinite when
    /// neither bound applies.
    cap: f64,
    /// `φ(cap)`.
    cap_level: f64,
}

impl CubicBranches {
    /// Branches without a `rho/2` cap on the positive side.
    pub fn new(a: f64, b: f64) -> Result<Self, ParamError> {
        Self::build(a, b, f64::INFINITY)
    }

    pub fn with_cap(a: f64, b: f64, rho: f64) -> Result<Self, ParamError> {
        if !(rho > 0.0) {
            return Err(ParamError::Rho(rho));
        }
        Self::build(a, b, 0.5 * rho)
    }

    fn build(a: f64, b: f64, half_rho: f64) -> Result<Self, ParamError> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(ParamError::NotFinite { name: "a/b" });
        }
        if a < 0.0 || b < 0.0 {
            return Err(ParamError::NegativeFlux { a, b });
        }
        if a == 0.0 && b == 0.0 {
            return Err(ParamError::DegenerateFlux { a, b });
        }
        let peak = if b > 0.0 { 2.0 * a / (3.0 * b) } else { f64::INFINITY };
        let cap = peak.min(half_rho);
        let cap_level = if cap.is_finite() { flux(cap, a, b) } else { f64::INFINITY };
        Ok(Self { a, b, cap, cap_level })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Location `2a/3b` of the local maximum of the cubic on `V > 0`.
    pub fn peak(&self) -> f64 {
        if self.b > 0.0 {
            2.0 * self.a / (3.0 * self.b)
        } else {
            f64::INFINITY
        }
    }

    /// `4a³/27b²`, the value of the cubic at [`CubicBranches::peak`].
    pub fn peak_level(&self) -> f64 {
        if self.b > 0.0 {
            4.0 * self.a.powi(3) / (27.0 * self.b * self.b)
        } else {
            f64::INFINITY
        }
    }

    fn cubic_prime(&self, v: f64) -> f64 {
        v * (2.0 * self.a - 3.0 * self.b * v)
    }

    /// The unique `V < 0` with `a V² - b V³ = s` for `s > 0`; zero for `s <= 0`.
    pub fn negative(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        let (a, b) = (self.a, self.b);
        if b == 0.0 {
            return -(s / a).sqrt();
        }
        if a == 0.0 {
            return -(s / b).cbrt();
        }
        // w = -V solves a w² + b w³ = s, convex and increasing in w > 0
        let hi_bound = (s / a).sqrt().min((s / b).cbrt());
        let lo_bound = (0.5 * s / a).sqrt().min((0.5 * s / b).cbrt());
        let (mut lo, mut hi) = (lo_bound, hi_bound);
        let mut w = hi_bound;
        for _ in 0..100 {
            let r = w * w * (a + b * w) - s;
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let dr = w * (2.0 * a + 3.0 * b * w);
            let mut next = w - r / dr;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - w).abs() <= 1e-16 * w {
                w = next;
                break;
            }
            w = next;
        }
        -w
    }

    /// `(V, s·dV/ds)` on the negative branch; the second entry stays finite
    /// as `s -> 0⁺`.
    pub fn negative_with_scaled_derivative(&self, s: f64) -> (f64, f64) {
        let v = self.negative(s);
        if v == 0.0 {
            return (0.0, 0.0);
        }
        (v, s / self.cubic_prime(v))
    }

    /// Uncapped positive branch: inverse of the cubic on `[0, 2a/3b]`,
    /// saturating at `2a/3b` above `4a³/27b²`.
    pub fn positive_uncapped(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        let (a, b) = (self.a, self.b);
        if a == 0.0 {
            // the cubic is non-positive on V >= 0
            return 0.0;
        }
        if b == 0.0 {
            return (s / a).sqrt();
        }
        let peak = self.peak();
        if s >= self.peak_level() {
            return peak;
        }
        let (mut lo, mut hi) = (0.0, peak);
        let mut w = (s / a).sqrt().min(peak);
        for _ in 0..200 {
            let r = w * w * (a - b * w) - s;
            if r == 0.0 {
                break;
            }
            if r < 0.0 {
                lo = w;
            } else {
                hi = w;
            }
            let dr = self.cubic_prime(w);
            let mut next = if dr > 0.0 { w - r / dr } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - w).abs() <= 1e-16 * w.max(f64::MIN_POSITIVE) {
                w = next;
                break;
            }
            w = next;
        }
        w
    }

    /// Capped positive branch `min(positive_uncapped(s), rho/2)`.
    pub fn positive(&self, s: f64) -> f64 {
        if s >= self.cap_level {
            return self.cap;
        }
        self.positive_uncapped(s).min(self.cap)
    }

    /// `(h(s), s·h'(s))`, zero derivative on the saturated part.
    pub fn positive_with_scaled_derivative(&self, s: f64) -> (f64, f64) {
        if !(s > 0.0) {
            return (0.0, 0.0);
        }
        if s >= self.cap_level {
            return (self.cap, 0.0);
        }
        let v = self.positive_uncapped(s);
        let d = self.cubic_prime(v);
        if v >= self.cap || d <= 0.0 {
            return (v.min(self.cap), 0.0);
        }
        (v, s / d)
    }

    /// `G(s) = ∫₀^s g`, via the substitution `ξ = aV² - bV³`:
    /// `G(s) = (2a/3) V³ - (3b/4) V⁴` with `V = g(s)`.
    pub fn negative_antiderivative(&self, s: f64) -> f64 {
        let v = self.negative(s);
        self.substitution_integral(v)
    }

    fn substitution_integral(&self, v: f64) -> f64 {
        let v3 = v * v * v;
        v3 * (2.0 * self.a / 3.0 - 0.75 * self.b * v)
    }

    /// `H(s) = ∫₀^s h`: substitution integral below the cap, linear above it.
    pub fn positive_antiderivative(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        if s <= self.cap_level {
            self.substitution_integral(self.positive(s))
        } else {
            self.substitution_integral(self.cap) + self.cap * (s - self.cap_level)
        }
    }

    /// Upper bound of the capped positive branch.
    pub fn cap(&self) -> f64 {
        self.cap
    }
}

pub fn negative_branch(s: f64, a: f64, b: f64) -> Result<f64, ParamError> {
    Ok(CubicBranches::new(a, b)?.negative(s))
}

pub fn positive_branch(s: f64, a: f64, b: f64, rho: f64) -> Result<f64, ParamError> {
    Ok(CubicBranches::with_cap(a, b, rho)?.positive(s))
}

pub fn g_antiderivative(s: f64, a: f64, b: f64) -> Result<f64, ParamError> {
    Ok(CubicBranches::new(a, b)?.negative_antiderivative(s))
}

pub fn h_antiderivative(s: f64, a: f64, b: f64, rho: f64) -> Result<f64, ParamError> {
    Ok(CubicBranches::with_cap(a, b, rho)?.positive_antiderivative(s))
}

/// Smallest constants with `|g(s)| <= c₁(s^{1/2} + s^{1/3})` and
/// `|G(s)| <= c₂(s^{3/2} + s^{4/3})` over the sample points.
pub fn fit_growth_constants(branches: &CubicBranches, samples: &[f64]) -> (f64, f64) {
    samples.iter().filter(|&&s| s > 0.0).fold((0.0_f64, 0.0_f64), |(c1, c2), &s| {
        let g = branches.negative(s).abs();
        let big_g = branches.negative_antiderivative(s).abs();
        (
            c1.max(g / (s.sqrt() + s.cbrt())),
            c2.max(big_g / (s.powf(1.5) + s.powf(4.0 / 3.0))),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Composite Gauss–Legendre (5 points) on `[lo, hi]` after the smoothstep
    /// substitution, which clusters nodes at both ends where the branches
    /// have square-root behaviour.
    fn quad_between(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let len = hi - lo;
        let mut total = 0.0;
        for p in 0..panels {
            let t0 = p as f64 / panels as f64;
            let t1 = (p + 1) as f64 / panels as f64;
            let half = 0.5 * (t1 - t0);
            let mid = 0.5 * (t1 + t0);
            for (x, w) in X.iter().zip(W) {
                let t = mid + half * x;
                let s = lo + len * t * t * (3.0 - 2.0 * t);
                let ds = len * 6.0 * t * (1.0 - t);
                total += half * w * f(s) * ds;
            }
        }
        total
    }

    fn quad(f: impl Fn(f64) -> f64, s: f64, panels: usize) -> f64 {
        quad_between(&f, 0.0, s, panels)
    }

    #[test]
    fn flux_values() {
        assert_eq!(flux(0.0, 1.0, 1.0), 0.0);
        assert_eq!(flux_antiderivative(0.0, 1.0, 1.0), 0.0);
        assert_relative_eq!(flux(2.0 / 3.0, 1.0, 1.0), 4.0 / 27.0, max_relative = 1e-15);
    }

    #[test]
    fn antiderivative_matches_finite_differences() {
        let (a, b) = (1.3, 0.7);
        for v in [-1.0, 0.3, 2.0] {
            let h = 1e-5;
            let fd = (flux_antiderivative(v + h, a, b) - flux_antiderivative(v - h, a, b)) / (2.0 * h);
            assert_relative_eq!(fd, flux(v, a, b), max_relative = 1e-8);
        }
    }

    #[test]
    fn negative_branch_examples() {
        assert_eq!(negative_branch(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(negative_branch(-3.0, 1.0, 1.0).unwrap(), 0.0);
        let v = negative_branch(2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, -1.0, max_relative = 1e-14);
        let s: f64 = 0.37;
        assert_relative_eq!(negative_branch(s, 0.0, 2.0).unwrap(), -(s / 2.0).cbrt(), max_relative = 1e-15);
        assert!(negative_branch(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn negative_branch_asymptotics() {
        let br = CubicBranches::new(2.0, 5.0).unwrap();
        let s = 1e-12;
        assert_relative_eq!(br.negative(s) / s.sqrt(), -1.0 / 2.0_f64.sqrt(), max_relative = 1e-4);
        let s = 1e15;
        assert_relative_eq!(br.negative(s) / s.cbrt(), -1.0 / 5.0_f64.cbrt(), max_relative = 1e-4);
    }

    #[test]
    fn positive_branch_examples() {
        assert_eq!(positive_branch(-1.0, 1.0, 1.0, 10.0).unwrap(), 0.0);
        assert_relative_eq!(positive_branch(4.0 / 27.0, 1.0, 1.0, 10.0).unwrap(), 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(positive_branch(5.0, 1.0, 1.0, 10.0).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        // cap at rho/2 = 0.25 engages above f(0.25)
        let br = CubicBranches::with_cap(1.0, 1.0, 0.5).unwrap();
        let s_cap = flux(0.25, 1.0, 1.0);
        assert!(br.positive(0.9 * s_cap) < 0.25);
        assert_eq!(br.positive(1.01 * s_cap), 0.25);
        assert_eq!(br.positive(0.1), 0.25);
        assert!(positive_branch(0.1, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn g_antiderivative_closed_form_against_quadrature() {
        let br = CubicBranches::new(1.0, 1.0).unwrap();
        assert_eq!(br.negative_antiderivative(0.0), 0.0);
        let closed = br.negative_antiderivative(2.0);
        assert_relative_eq!(closed, -17.0 / 12.0, max_relative = 1e-14);
        let q = quad(|x| br.negative(x), 2.0, 400);
        assert!((q - closed).abs() <= 1e-10, "quadrature {q} vs {closed}");

        let br = CubicBranches::new(0.6, 2.5).unwrap();
        for s in [0.01, 0.7, 30.0] {
            let q = quad(|x| br.negative(x), s, 400);
            assert!((q - br.negative_antiderivative(s)).abs() <= 1e-10 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn h_antiderivative_against_quadrature() {
        for (a, b, rho) in [(1.0, 1.0, 10.0), (1.0, 1.0, 0.5), (0.8, 2.0, 3.0)] {
            let br = CubicBranches::with_cap(a, b, rho).unwrap();
            assert_eq!(br.positive_antiderivative(0.0), 0.0);
            for s in [0.01, 0.1, 0.5, 2.0] {
                let h = |x: f64| br.positive(x);
                let knee = flux(br.cap(), a, b).min(s);
                let q = quad_between(&h, 0.0, knee, 400) + quad_between(&h, knee, s, 10);
                let closed = br.positive_antiderivative(s);
                assert!((q - closed).abs() <= 1e-10, "a={a} b={b} rho={rho} s={s}: {q} vs {closed}");
            }
        }
    }

    #[test]
    fn antiderivative_asymptotics() {
        let br = CubicBranches::new(1.0, 1.0).unwrap();
        let s: f64 = 1e-8;
        assert_relative_eq!(br.negative_antiderivative(s) / s.powf(1.5), -2.0 / 3.0, max_relative = 1e-2);
        let s: f64 = 1e18;
        assert_relative_eq!(br.negative_antiderivative(s) / s.powf(4.0 / 3.0), -0.75, max_relative = 1e-2);
    }

    #[test]
    fn growth_constants_are_finite() {
        let br = CubicBranches::new(1.0, 1.0).unwrap();
        let samples: Vec<f64> = (0..200).map(|k| 10f64.powf(-8.0 + 14.0 * k as f64 / 199.0)).collect();
        let (c1, c2) = fit_growth_constants(&br, &samples);
        assert!(c1.is_finite() && c1 > 0.0 && c1 <= 1.0);
        assert!(c2.is_finite() && c2 > 0.0 && c2 <= 1.0);
    }

    #[test]
    fn theta_outside_range_is_rejected() {
        let p = SystemParams {
            alpha: 0.1,
            theta: 1.6,
            rho: 1.0,
            a: 1.0,
            b: 1.0,
            epsilon: 0.1,
            coupling: CouplingKind::Affine { sign: Sign::Plus },
        };
        assert_eq!(p.validate(), Err(ParamError::Theta(1.6)));
        let q = SystemParams { theta: 0.3, ..p };
        assert!(q.validate().is_ok());
    }

    #[test]
    fn smooth_couplings_have_consistent_derivatives() {
        let gs: Vec<Arc<dyn CouplingFunction>> = vec![
            Arc::new(TanhCoupling { base: 1.0, amplitude: 0.5 }),
            Arc::new(OneSidedExpCoupling { amplitude: 1.0 }),
        ];
        for g in gs {
            for v in [-0.7, 0.2, 0.9, 1.7] {
                let h = 1e-5;
                let d1 = (g.value(v + h) - g.value(v - h)) / (2.0 * h);
                let d2 = (g.derivative(v + h) - g.derivative(v - h)) / (2.0 * h);
                assert!((d1 - g.derivative(v)).abs() < 1e-8);
                assert!((d2 - g.second_derivative(v)).abs() < 1e-7);
            }
        }
        let one_sided = OneSidedExpCoupling { amplitude: 1.0 };
        assert_eq!(one_sided.derivative(-0.5), 0.0);
        assert_eq!(one_sided.value(0.0), 0.0);
    }
}
