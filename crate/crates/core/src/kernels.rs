//! Convolution kernels: the singular power kernel `(t-s)^{-α}`, the
//! fractional heat kernel `p^θ_t(x) = c_θ t^{-1/(2+θ)} exp(-|x|^{2+θ}/(2t))`,
//! and smooth positive kernels `κ(s, t)`.
//!
//! `p^θ_t(0) = c_θ t^{-α}` with `α = 1/(2+θ)`, which is how the heat kernel
//! and the singular power kernel meet.

use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

use crate::error::{domain_err, param_err, Result};
use crate::quadrature::{integrate_doubling, integrate_singular_left, GaussLegendre};

/// Smooth deterministic kernel `κ(s, t)` for `0 <= s <= t`.
pub type KappaFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SmoothKernel {
    pub kappa: KappaFn,
    pub kappa_min: f64,
    /// Declared bound on the first derivatives of `κ`.
    pub derivative_bound: f64,
}

impl SmoothKernel {
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.kappa)(s, t)
    }

    /// Checks `κ(s, t) >= kappa_min` on the triangle `0 <= s <= t <= t_end`
    /// sampled at `n + 1` points per axis.
    pub fn audit(&self, t_end: f64, n: usize) -> Result<()> {
        let n = n.max(1);
        for j in 0..=n {
            let t = t_end * j as f64 / n as f64;
            for i in 0..=j {
                let s = t_end * i as f64 / n as f64;
                let v = self.eval(s, t);
                if !(v >= self.kappa_min) {
                    return Err(param_err!(
                        "smooth kernel κ({s}, {t}) = {v} falls below kappa_min = {}",
                        self.kappa_min
                    ));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SmoothKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothKernel")
            .field("kappa_min", &self.kappa_min)
            .field("derivative_bound", &self.derivative_bound)
            .finish_non_exhaustive()
    }
}

/// The kernel family driving a stochastic Volterra equation.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// `k(t, s) = (t - s)^{-alpha}`, `0 < alpha < 1/2`.
    SingularPower {
        alpha: f64,
    },
    /// Origin row of the fractional heat kernel: `k(t, s) = c_θ (t - s)^{-α}`
    /// with `α = 1/(2+θ)`.
    FractionalHeat {
        theta: f64,
    },
    Smooth(SmoothKernel),
}

impl KernelSpec {
    pub fn singular_power(alpha: f64) -> Result<Self> {
        check_sie_alpha(alpha)?;
        Ok(KernelSpec::SingularPower { alpha })
    }

    pub fn fractional_heat(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(param_err!("theta must be positive and finite for an SIE kernel, got {theta}"));
        }
        Ok(KernelSpec::FractionalHeat { theta })
    }

    pub fn smooth(kappa: KappaFn, kappa_min: f64, derivative_bound: f64) -> Result<Self> {
        if !(kappa_min > 0.0) {
            return Err(param_err!("kappa_min must be positive, got {kappa_min}"));
        }
        Ok(KernelSpec::Smooth(SmoothKernel { kappa, kappa_min, derivative_bound }))
    }

    /// Singularity exponent, `None` for smooth kernels.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            KernelSpec::SingularPower { alpha } => Some(*alpha),
            KernelSpec::FractionalHeat { theta } => Some(1.0 / (2.0 + theta)),
            KernelSpec::Smooth(_) => None,
        }
    }

    /// Constant multiplying `(t-s)^{-α}` in the stochastic term.
    pub fn noise_scale(&self) -> f64 {
        match self {
            KernelSpec::FractionalHeat { theta } => c_theta(*theta).unwrap_or(f64::NAN),
            _ => 1.0,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            KernelSpec::SingularPower { alpha } => alloc::format!("power(alpha={alpha})"),
            KernelSpec::FractionalHeat { theta } => alloc::format!("frac-heat(theta={theta})"),
            KernelSpec::Smooth(k) => alloc::format!("smooth(kappa_min={})", k.kappa_min),
        }
    }
}

/// Guard for the SIE range `0 < alpha < 1/2`.
pub fn check_sie_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(param_err!("alpha must lie in the open interval (0, 0.5), got {alpha}"))
    }
}

/// `(t - s)^{-alpha}`.
pub fn power_kernel_eval(alpha: f64, t: f64, s: f64) -> Result<f64> {
    check_sie_alpha(alpha)?;
    if !(s >= 0.0 && s < t) {
        return Err(domain_err!("power kernel needs 0 <= s < t, got s = {s}, t = {t}"));
    }
    Ok(libm::pow(t - s, -alpha))
}

/// ∫_a^b (t - s)^{-p} ds for `p < 1`, `a <= b <= t`.
#[inline]
pub fn power_moment(p: f64, t: f64, a: f64, b: f64) -> f64 {
    let q = 1.0 - p;
    (libm::pow(t - a, q) - libm::pow(t - b, q)) / q
}

/// ∫_a^b (t - s)^{-2α} ds, the exact `L²` mass of the kernel on `[a, b]`.
pub fn kernel_l2_partial(alpha: f64, t: f64, a: f64, b: f64) -> Result<f64> {
    check_sie_alpha(alpha)?;
    if !(a >= 0.0 && a <= b) {
        return Err(domain_err!("need 0 <= a <= b, got a = {a}, b = {b}"));
    }
    if b > t {
        return Err(domain_err!("upper limit b = {b} exceeds t = {t}"));
    }
    if a == b {
        return Ok(0.0);
    }
    Ok(power_moment(2.0 * alpha, t, a, b))
}

/// Normalizing constant of `p^θ_t`.
///
/// Substituting `x = (2t)^{1/q} y`, `q = 2+θ`, gives
/// `∫ exp(-|x|^q/(2t)) dx = 2 (2t)^{1/q} Γ(1 + 1/q)`, hence
/// `c_θ = 1 / (2^{1+1/q} Γ(1 + 1/q))`. `θ = 0` gives `1/√(2π)`.
pub fn c_theta(theta: f64) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(param_err!("theta must be non-negative and finite, got {theta}"));
    }
    let inv_q = 1.0 / (2.0 + theta);
    Ok(1.0 / (libm::pow(2.0, 1.0 + inv_q) * libm::tgamma(1.0 + inv_q)))
}

/// `p^θ_t(x)`.
pub fn frac_heat_kernel_eval(theta: f64, t: f64, x: f64) -> Result<f64> {
    FracHeatKernel::new(theta)?.eval(t, x)
}

/// Fractional heat kernel with its normalizing constant computed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracHeatKernel {
    theta: f64,
    alpha: f64,
    c_theta: f64,
}

impl FracHeatKernel {
    pub fn new(theta: f64) -> Result<Self> {
        let c = c_theta(theta)?;
        Ok(Self { theta, alpha: 1.0 / (2.0 + theta), c_theta: c })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_theta(&self) -> f64 {
        self.c_theta
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(domain_err!("heat kernel needs t > 0, got {t}"));
        }
        Ok(self.eval_unchecked(t, x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64, x: f64) -> f64 {
        let q = 2.0 + self.theta;
        self.c_theta * libm::pow(t, -self.alpha) * libm::exp(-libm::pow(x.abs(), q) / (2.0 * t))
    }

    /// `S_t φ(0) = ∫ p^θ_t(y) φ(y) dy`.
    pub fn semigroup_at_origin(&self, t: f64, phi: &TestFunction) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain_err!("semigroup time must be non-negative, got {t}"));
        }
        if t == 0.0 {
            return Ok(phi.eval(0.0));
        }
        let rule = GaussLegendre::new(16);
        let (a, b) = phi.support();
        let f = |y: f64| self.eval_unchecked(t, y) * phi.eval(y);
        // |y|^{2+θ} is not smooth at 0 for fractional θ: split there.
        let pieces: [(f64, f64); 2] = if a < 0.0 && b > 0.0 { [(a, 0.0), (0.0, b)] } else { [(a, b), (b, b)] };
        let scale = self.eval_unchecked(t, 0.0) * phi.sup_norm_hint() * (b - a);
        let mut total = 0.0;
        for (lo, hi) in pieces {
            if hi > lo {
                total += integrate_doubling(&rule, lo, hi, 1e-12, scale * 1e-4, 1 << 16, f)?.value;
            }
        }
        Ok(total)
    }

    /// `∫_0^t (p_{t+δ-s}(x) - p_{t-s}(x))² ds`.
    pub fn temporal_increment_l2(&self, t: f64, delta: f64, x: f64) -> Result<f64> {
        if !(t > 0.0 && delta >= 0.0) {
            return Err(domain_err!("need t > 0 and delta >= 0, got t = {t}, delta = {delta}"));
        }
        Ok(self.increment_integral(t, 1e-3 * delta.max(f64::MIN_POSITIVE), |u| {
            let d = self.eval_unchecked(u + delta, x) - self.eval_unchecked(u, x);
            d * d
        }))
    }

    /// `∫_0^t (p_{t-s}(x) - p_{t-s}(y))² ds`.
    pub fn spatial_increment_l2(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(domain_err!("need t > 0, got {t}"));
        }
        let q = 2.0 + self.theta;
        let (ex, ey) = (libm::pow(x.abs(), q), libm::pow(y.abs(), q));
        // the difference lives on times u ~ max(|x|,|y|)^q
        let floor = 1e-3 * ex.max(ey);
        if floor == 0.0 {
            return Ok(0.0);
        }
        Ok(self.increment_integral(t, floor, |u| {
            let (a, b) = (ex / (2.0 * u), ey / (2.0 * u));
            let d = self.c_theta * libm::pow(u, -self.alpha) * libm::exp(-a.min(b)) * libm::expm1(-(a - b).abs());
            d * d
        }))
    }

    /// `∫_0^t f(u) du` for `f(u) = O(u^{-2α})` at 0, graded toward 0.
    fn increment_integral<F: FnMut(f64) -> f64>(&self, t: f64, floor: f64, f: F) -> f64 {
        let rule = GaussLegendre::new(20);
        integrate_singular_left(&rule, 0.0, t, 2.0 * self.alpha, (t * 1e-12).min(floor), f)
    }
}

/// `S_t φ(0)` for the fractional heat semigroup.
pub fn semigroup_at_origin(theta: f64, t: f64, phi: &TestFunction) -> Result<f64> {
    FracHeatKernel::new(theta)?.semigroup_at_origin(t, phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    AlphaToTheta,
    ThetaToAlpha,
}

/// `θ = 1/α - 2` or `α = 1/(2+θ)`. `θ = 0` maps to the excluded boundary `α = 1/2`.
pub fn alpha_theta_convert(value: f64, direction: Conversion) -> Result<f64> {
    match direction {
        Conversion::AlphaToTheta => {
            check_sie_alpha(value)?;
            Ok(1.0 / value - 2.0)
        }
        Conversion::ThetaToAlpha => {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(param_err!("theta must be non-negative and finite, got {value}"));
            }
            Ok(1.0 / (2.0 + value))
        }
    }
}

pub type PhiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Non-negative test function with compact support `[a, b]`.
#[derive(Clone)]
pub struct TestFunction {
    phi: PhiFn,
    support: (f64, f64),
    sup_hint: f64,
    name: String,
}

impl TestFunction {
    /// Wraps `phi`; it is evaluated as 0 outside `[a, b]`. Non-negativity is
    /// audited on a sample grid.
    pub fn new(name: &str, a: f64, b: f64, phi: PhiFn) -> Result<Self> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(param_err!("test function support [{a}, {b}] must be a finite interval"));
        }
        let mut sup: f64 = 0.0;
        let n = 1000;
        for i in 0..=n {
            let x = a + (b - a) * i as f64 / n as f64;
            let v = phi(x);
            if !(v >= 0.0) {
                return Err(param_err!("test function {name} is negative ({v}) at x = {x}"));
            }
            sup = sup.max(v);
        }
        Ok(Self { phi, support: (a, b), sup_hint: sup.max(f64::MIN_POSITIVE), name: name.into() })
    }

    /// `height · (1 - u²)^4` with `u` mapping `[a, b]` onto `[-1, 1]`; a C³ bump.
    pub fn bump(a: f64, b: f64, height: f64) -> Result<Self> {
        if !(height >= 0.0) {
            return Err(param_err!("bump height must be non-negative, got {height}"));
        }
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let f: PhiFn = Arc::new(move |x: f64| {
            let u = (x - mid) / half;
            if u.abs() >= 1.0 {
                0.0
            } else {
                let v = 1.0 - u * u;
                let v2 = v * v;
                height * v2 * v2
            }
        });
        Self::new(&alloc::format!("bump[{a},{b}]x{height}"), a, b, f)
    }

    /// Bump on `[a, b]` with unit mass. `∫_{-1}^{1} (1-u²)^4 du = 256/315`.
    pub fn unit_bump(a: f64, b: f64) -> Result<Self> {
        let height = 315.0 / (256.0 * 0.5 * (b - a));
        let mut f = Self::bump(a, b, height)?;
        f.name = alloc::format!("unit-bump[{a},{b}]");
        Ok(f)
    }

    pub fn zero(a: f64, b: f64) -> Result<Self> {
        Self::new("zero", a, b, Arc::new(|_| 0.0))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            0.0
        } else {
            (self.phi)(x)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub(crate) fn sup_norm_hint(&self) -> f64 {
        self.sup_hint
    }

    /// `⟨1, φ⟩`.
    pub fn mass(&self) -> f64 {
        let rule = GaussLegendre::new(16);
        let (a, b) = self.support;
        integrate_doubling(&rule, a, b, 1e-13, self.sup_hint * (b - a) * 1e-6, 1 << 14, |x| self.eval(x))
            .map(|r| r.value)
            .unwrap_or_else(|_| rule.integrate_panels(a, b, 1 << 14, |x| self.eval(x)))
    }
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).field("support", &self.support).finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    /// ∫_ℝ p^θ_t by panel-doubling quadrature on `[-R, R]`, `R` past the
    /// point where the Gaussian-type tail drops below e^{-60}.
    fn kernel_mass(theta: f64, t: f64) -> f64 {
        let k = FracHeatKernel::new(theta).unwrap();
        let r = libm::pow(120.0 * t, 1.0 / (2.0 + theta));
        let rule = GaussLegendre::new(16);
        let half = integrate_doubling(&rule, 0.0, r, 1e-14, 1e-300, 1 << 16, |x| k.eval_unchecked(t, x)).unwrap();
        2.0 * half.value
    }

    #[test]
    fn power_kernel_examples() {
        assert_eq!(power_kernel_eval(0.25, 1.0, 0.0).unwrap(), 1.0);
        assert!((power_kernel_eval(0.25, 2.0, 1.9375).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(power_kernel_eval(0.6, 1.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(power_kernel_eval(0.25, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(power_kernel_eval(0.25, 1.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn c_theta_gaussian_limit() {
        let c0 = c_theta(0.0).unwrap();
        assert!((c0 - 1.0 / libm::sqrt(2.0 * core::f64::consts::PI)).abs() < 1e-12);
        assert!(c_theta(-0.1).is_err());
        // θ = 0 kernel is the N(0, t) density
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            for &t in &[0.3, 1.0, 4.0] {
                let g = libm::exp(-x * x / (2.0 * t)) / libm::sqrt(2.0 * core::f64::consts::PI * t);
                assert!((frac_heat_kernel_eval(0.0, t, x).unwrap() - g).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kernel_is_normalized() {
        for &theta in &[0.0, 0.5, 1.0, 2.0, 5.0] {
            for &t in &[0.1, 1.0, 10.0] {
                let m = kernel_mass(theta, t);
                assert!((m - 1.0).abs() < 1e-8, "theta={theta} t={t}: mass {m}");
            }
        }
    }

    #[test]
    fn kernel_values() {
        let c2 = c_theta(2.0).unwrap();
        assert_eq!(frac_heat_kernel_eval(2.0, 1.0, 0.0).unwrap(), c2);
        for &(theta, t, x) in &[(0.5, 0.2, 0.3), (2.0, 1.0, 1.7), (5.0, 3.0, 0.01)] {
            assert_eq!(frac_heat_kernel_eval(theta, t, x).unwrap(), frac_heat_kernel_eval(theta, t, -x).unwrap());
        }
        assert!(frac_heat_kernel_eval(1.0, 0.0, 0.0).is_err());
        // origin row equals c_θ (t - s)^{-α}
        let k = FracHeatKernel::new(2.0).unwrap();
        assert!((k.eval(0.3, 0.0).unwrap() - c2 * libm::pow(0.3, -0.25)).abs() < 1e-15);
    }

    #[test]
    fn alpha_theta_conversion() {
        assert_eq!(alpha_theta_convert(0.25, Conversion::AlphaToTheta).unwrap(), 2.0);
        assert_eq!(alpha_theta_convert(0.0, Conversion::ThetaToAlpha).unwrap(), 0.5);
        let th = alpha_theta_convert(0.3, Conversion::AlphaToTheta).unwrap();
        let back = alpha_theta_convert(th, Conversion::ThetaToAlpha).unwrap();
        assert!((back - 0.3).abs() < 1e-15);
        assert!(alpha_theta_convert(0.5, Conversion::AlphaToTheta).is_err());
        assert!(alpha_theta_convert(-1.0, Conversion::ThetaToAlpha).is_err());
    }

    #[test]
    fn l2_partial_integrals() {
        assert!((kernel_l2_partial(0.25, 1.0, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(kernel_l2_partial(0.25, 1.0, 0.3, 0.3).unwrap(), 0.0);
        assert!(kernel_l2_partial(0.25, 1.0, 0.0, 1.5).is_err());
        let t = 1.7;
        let n = 97;
        let sum: f64 = (0..n)
            .map(|i| kernel_l2_partial(0.4, t, t * i as f64 / n as f64, t * (i + 1) as f64 / n as f64).unwrap())
            .sum();
        assert!((sum - kernel_l2_partial(0.4, t, 0.0, t).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn semigroup_trivial_cases() {
        let zero = TestFunction::zero(-1.0, 1.0).unwrap();
        assert_eq!(semigroup_at_origin(2.0, 0.7, &zero).unwrap(), 0.0);
        let bump = TestFunction::unit_bump(-1.0, 1.0).unwrap();
        assert_eq!(semigroup_at_origin(2.0, 0.0, &bump).unwrap(), bump.eval(0.0));
        // the kernel spreads: S_t φ(0) decays like p_t(0)·⟨1,φ⟩ ∝ t^{-α}
        let narrow = TestFunction::unit_bump(-0.25, 0.25).unwrap();
        for &theta in &[0.0, 0.5] {
            let far = semigroup_at_origin(theta, 1e3, &narrow).unwrap();
            assert!(far > 0.0 && far < 1e-2 * narrow.eval(0.0), "theta={theta}: S_1000 φ(0) = {far}");
        }
        let k = FracHeatKernel::new(2.0).unwrap();
        let mut prev = f64::INFINITY;
        for &t in &[1.0, 10.0, 100.0, 1e3] {
            let v = k.semigroup_at_origin(t, &bump).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!((prev / k.eval(1e3, 0.0).unwrap() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn semigroup_matches_gaussian_convolution() {
        use statrs::distribution::{Continuous, Normal};
        let bump = TestFunction::bump(-0.7, 1.3, 2.0).unwrap();
        for &t in &[0.01, 0.2, 1.0, 5.0] {
            let normal = Normal::new(0.0, libm::sqrt(t)).unwrap();
            // composite Simpson on 200k intervals
            let (a, b) = bump.support();
            let n = 200_000;
            let h = (b - a) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let y = a + h * i as f64;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * normal.pdf(y) * bump.eval(y);
            }
            let oracle = acc * h / 3.0;
            let v = semigroup_at_origin(0.0, t, &bump).unwrap();
            assert!((v - oracle).abs() < 1e-8, "t={t}: {v} vs {oracle}");
        }
    }

    #[test]
    fn test_function_guards() {
        assert!(TestFunction::new("neg", 0.0, 1.0, Arc::new(|x| x - 0.5)).is_err());
        assert!(TestFunction::bump(1.0, 0.0, 1.0).is_err());
        let b = TestFunction::unit_bump(-1.0, 1.0).unwrap();
        assert!((b.mass() - 1.0).abs() < 1e-13);
        assert_eq!(b.eval(1.5), 0.0);
        assert_eq!(b.eval(-1.0), 0.0);
    }

    #[test]
    fn smooth_kernel_audit() {
        let k = KernelSpec::smooth(Arc::new(|s, t| 2.0 + libm::sin(s + t)), 1.5, 1.0).unwrap();
        if let KernelSpec::Smooth(sk) = &k {
            assert!(sk.audit(1.0, 32).is_ok());
            assert!(sk.audit(5.0, 64).is_err());
        }
        assert!(k.alpha().is_none());
        assert!(KernelSpec::smooth(Arc::new(|_, _| 1.0), 0.0, 0.0).is_err());
        assert_eq!(KernelSpec::fractional_heat(2.0).unwrap().alpha(), Some(0.25));
        assert!(KernelSpec::fractional_heat(0.0).is_err());
    }
}
