//! Yamada–Watanabe approximations of `|x|`.
//!
//! For an admissible `ρ` (with `ρ(x) ≥ √x` on `(0, 1]`) the levels
//! `1 = a_0 > a_1 > ...` satisfy `∫_{a_n}^{a_{n-1}} ρ^{-2} = n`. On each level
//! interval `ψ_n = ρ^{-2} S(u/n) / Z_n` where `u(x) = ∫_{a_n}^x ρ^{-2}` and
//! `S` is a polynomial smoothstep plateau with ramps of relative width
//! `edge_fraction` at both ends. In the `u` coordinate the normalization is
//! exact: `Z_n = n(1 - edge_fraction)`, so `ψ_n ≤ 2ρ^{-2}/n` exactly when
//! `edge_fraction ≤ 1/2`.
//!
//! `φ_n(x) = ∫_0^{|x|} ∫_0^y ψ_n`; its derivative is closed-form in `u` and
//! `φ_n` itself is read from a cumulative table uniform in `ln x`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{param_err, Error, Result};
use crate::quadrature::{integrate_doubling, GaussLegendre};
use crate::sie::ScalarFn;

/// Table intervals per level.
pub const TABLE_INTERVALS: usize = 10_000;
/// Levels beyond this underflow `a_n` for `ρ = √x`.
pub const MAX_LEVEL: usize = 36;

/// Smallest log-level searched for a general `ρ`.
const LOG_FLOOR: f64 = -700.0;

#[derive(Clone)]
pub enum Rho {
    Sqrt,
    Custom { label: String, f: ScalarFn },
}

impl Rho {
    pub fn custom(label: &str, f: ScalarFn) -> Self {
        Rho::Custom { label: String::from(label), f }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Rho::Sqrt => libm::sqrt(x),
            Rho::Custom { f, .. } => f(x),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Rho::Sqrt => "sqrt",
            Rho::Custom { label, .. } => label,
        }
    }

    /// `ρ(e^y)^{-2} e^y`, the density of `u` in `y = ln x`.
    fn log_density(&self, y: f64) -> f64 {
        match self {
            Rho::Sqrt => 1.0,
            Rho::Custom { f, .. } => {
                let x = libm::exp(y);
                let r = f(x);
                x / (r * r)
            }
        }
    }

    /// Checks `ρ(x) ≥ √x` on a log-spaced sample of `(0, 1]`.
    pub fn audit(&self) -> Result<()> {
        for i in 0..=400 {
            let x = libm::exp(LOG_FLOOR * i as f64 / 400.0);
            let r = self.eval(x);
            if !(r.is_finite() && r > 0.0) {
                return Err(param_err!("rho {} is not positive and finite at x = {x:e}", self.label()));
            }
            if r < libm::sqrt(x) * (1.0 - 1e-12) {
                return Err(param_err!("rho {} violates rho(x) >= sqrt(x) at x = {x:e}", self.label()));
            }
        }
        Ok(())
    }
}

impl core::fmt::Debug for Rho {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

fn log_mass(rho: &Rho, rule: &GaussLegendre, y_lo: f64, y_hi: f64) -> Result<f64> {
    match rho {
        Rho::Sqrt => Ok(y_hi - y_lo),
        _ => Ok(integrate_doubling(rule, y_lo, y_hi, 1e-13, 1e-300, 1 << 16, |y| rho.log_density(y))?.value),
    }
}

/// `a_0, ..., a_{n_max}`. Closed form `e^{-n(n+1)/2}` for `ρ = √x`,
/// otherwise bisection in `ln a_n` on the defining integral.
pub fn a_sequence(n_max: usize, rho: &Rho) -> Result<Vec<f64>> {
    log_levels(n_max, rho).map(|v| v.into_iter().map(libm::exp).collect())
}

fn log_levels(n_max: usize, rho: &Rho) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(param_err!("n_max must be at least 1"));
    }
    rho.audit()?;
    let mut out = alloc::vec![0.0];
    if let Rho::Sqrt = rho {
        if n_max > MAX_LEVEL {
            return Err(Error::Construction(format!(
                "a_n underflows beyond n = {MAX_LEVEL} for rho = sqrt, got n_max = {n_max}"
            )));
        }
        out.extend((1..=n_max).map(|n| -((n * (n + 1)) as f64) / 2.0));
        return Ok(out);
    }
    let rule = GaussLegendre::new(16);
    for n in 1..=n_max {
        let hi = out[n - 1];
        let target = n as f64;
        let mut width = 1.0;
        let mut lo = hi - width;
        while log_mass(rho, &rule, lo, hi)? < target {
            width *= 2.0;
            lo = hi - width;
            if lo < LOG_FLOOR {
                return Err(Error::Construction(format!(
                    "no level a_{n}: the integral of rho^-2 below a_{} stays under {n}",
                    n - 1
                )));
            }
        }
        let mut top = hi - 0.5 * width;
        while top - lo > 1e-12 * lo.abs().max(1.0) {
            let mid = 0.5 * (lo + top);
            if log_mass(rho, &rule, mid, hi)? < target {
                top = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + top));
    }
    Ok(out)
}

/// Polynomial ramp from 0 to 1 on `[0, 1]` with `order` matching
/// derivatives at both ends, and its antiderivative.
fn ramp(order: u8, r: f64) -> (f64, f64) {
    let r = r.clamp(0.0, 1.0);
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r3 * r;
    match order {
        1 => (3.0 * r2 - 2.0 * r3, r3 - 0.5 * r4),
        2 => (r3 * (10.0 - 15.0 * r + 6.0 * r2), r4 * (2.5 - 3.0 * r + r2)),
        _ => (r4 * (35.0 - 84.0 * r + 70.0 * r2 - 20.0 * r3), r4 * r * (7.0 - 14.0 * r + 10.0 * r2 - 2.5 * r3)),
    }
}

#[derive(Debug, Clone)]
struct Level {
    /// `ln a_n`, `ln a_{n-1}`.
    y_lo: f64,
    y_hi: f64,
    hy: f64,
    /// `u` and `du/dy` at the table nodes (empty for `ρ = √x`).
    u: Vec<f64>,
    du: Vec<f64>,
    /// `φ_n` and `dφ_n/dy` at the table nodes.
    phi: Vec<f64>,
    dphi: Vec<f64>,
}

fn hermite(h: f64, t: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * f1 + (t3 - t2) * h * d1
}

impl Level {
    fn locate(&self, y: f64) -> (usize, f64) {
        let s = ((y - self.y_lo) / self.hy).clamp(0.0, TABLE_INTERVALS as f64);
        let j = (s as usize).min(TABLE_INTERVALS - 1);
        (j, s - j as f64)
    }
}

#[derive(Clone, Debug)]
pub struct MollifierFamily {
    rho: Rho,
    a: Vec<f64>,
    n_max: usize,
    edge_fraction: f64,
    smoothness: u8,
    levels: Vec<Level>,
}

impl MollifierFamily {
    /// `ρ = √x`, edge fraction 0.1, C² ramps.
    pub fn new(n_max: usize) -> Result<Self> {
        Self::with_options(Rho::Sqrt, n_max, 0.1, 2)
    }

    pub fn with_rho(rho: Rho, n_max: usize) -> Result<Self> {
        Self::with_options(rho, n_max, 0.1, 2)
    }

    /// `smoothness` ∈ {1, 2, 3} is the number of derivatives of the ramp that
    /// vanish at its ends.
    pub fn with_options(rho: Rho, n_max: usize, edge_fraction: f64, smoothness: u8) -> Result<Self> {
        if !(edge_fraction > 0.0 && edge_fraction < 1.0) {
            return Err(param_err!("edge_fraction must lie in (0, 1), got {edge_fraction}"));
        }
        if !(1..=3).contains(&smoothness) {
            return Err(param_err!("smoothness must be 1, 2 or 3, got {smoothness}"));
        }
        // n / Z_n
        let ratio = 1.0 / (1.0 - edge_fraction);
        if ratio > 2.0 {
            return Err(Error::Construction(format!(
                "edge_fraction {edge_fraction} gives n/Z_n = {ratio:.3} > 2, so psi_n would exceed 2 rho^-2 / n; use a smaller edge_fraction"
            )));
        }
        let ys = log_levels(n_max, &rho)?;
        let mut fam = Self {
            rho,
            a: ys.iter().map(|y| libm::exp(*y)).collect(),
            n_max,
            edge_fraction,
            smoothness,
            levels: Vec::with_capacity(n_max),
        };
        for n in 1..=n_max {
            let level = fam.build_level(n, ys[n], ys[n - 1]);
            fam.levels.push(level);
        }
        Ok(fam)
    }

    fn build_level(&self, n: usize, y_lo: f64, y_hi: f64) -> Level {
        let m = TABLE_INTERVALS;
        let hy = (y_hi - y_lo) / m as f64;
        let node = |j: usize| if j == m { y_hi } else { y_lo + j as f64 * hy };
        let rule = GaussLegendre::new(8);
        let mut level = Level { y_lo, y_hi, hy, u: Vec::new(), du: Vec::new(), phi: Vec::new(), dphi: Vec::new() };
        if let Rho::Custom { .. } = self.rho {
            let mut acc = 0.0;
            level.u.push(0.0);
            level.du.push(self.rho.log_density(y_lo));
            for j in 0..m {
                acc += rule.integrate(node(j), node(j + 1), |y| self.rho.log_density(y));
                level.u.push(acc);
                level.du.push(self.rho.log_density(node(j + 1)));
            }
            // the defining integral pins the end value
            let scale = n as f64 / acc;
            level.u.iter_mut().for_each(|v| *v *= scale);
        }
        let dphi = |lv: &Level, y: f64| self.big_psi(n, lv, y) * libm::exp(y);
        let mut acc = 0.0;
        level.phi.push(0.0);
        level.dphi.push(0.0);
        for j in 0..m {
            acc += rule.integrate(node(j), node(j + 1), |y| dphi(&level, y));
            let d = dphi(&level, node(j + 1));
            level.phi.push(acc);
            level.dphi.push(d);
        }
        level
    }

    fn u_of(&self, n: usize, lv: &Level, y: f64) -> f64 {
        match self.rho {
            Rho::Sqrt => y + ((n * (n + 1)) as f64) / 2.0,
            Rho::Custom { .. } => {
                if y <= lv.y_lo {
                    return 0.0;
                }
                if y >= lv.y_hi {
                    return n as f64;
                }
                let (j, t) = lv.locate(y);
                hermite(lv.hy, t, lv.u[j], lv.u[j + 1], lv.du[j], lv.du[j + 1])
            }
        }
    }

    /// Plateau profile and its antiderivative at `v = u/n ∈ [0, 1]`.
    fn profile(&self, v: f64) -> (f64, f64) {
        let e = self.edge_fraction;
        let v = v.clamp(0.0, 1.0);
        if v < e {
            let (s, a) = ramp(self.smoothness, v / e);
            (s, e * a)
        } else if v > 1.0 - e {
            let (s, a) = ramp(self.smoothness, (1.0 - v) / e);
            (s, 1.0 - e - e * a)
        } else {
            (1.0, v - 0.5 * e)
        }
    }

    /// `φ_n'(x)` for `x > 0`, at `y = ln x`.
    fn big_psi(&self, n: usize, lv: &Level, y: f64) -> f64 {
        if y <= lv.y_lo {
            return 0.0;
        }
        if y >= lv.y_hi {
            return 1.0;
        }
        let v = self.u_of(n, lv, y) / n as f64;
        (self.profile(v).1 / (1.0 - self.edge_fraction)).min(1.0)
    }

    fn check_n(&self, n: usize) -> Result<&Level> {
        if n == 0 || n > self.n_max {
            return Err(param_err!("level n must lie in 1..={}, got {n}", self.n_max));
        }
        Ok(&self.levels[n - 1])
    }

    pub fn rho(&self) -> &Rho {
        &self.rho
    }

    /// `a_0 .. a_{n_max}`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn edge_fraction(&self) -> f64 {
        self.edge_fraction
    }

    pub fn smoothness(&self) -> u8 {
        self.smoothness
    }

    /// `Z_n = n(1 - edge_fraction)`.
    pub fn normalizer(&self, n: usize) -> f64 {
        n as f64 * (1.0 - self.edge_fraction)
    }

    pub fn psi(&self, n: usize, x: f64) -> Result<f64> {
        let lv = self.check_n(n)?;
        if !(x > self.a[n] && x < self.a[n - 1]) {
            return Ok(0.0);
        }
        let y = libm::log(x);
        let v = self.u_of(n, lv, y) / n as f64;
        let r = self.rho.eval(x);
        Ok(self.profile(v).0 / (r * r * self.normalizer(n)))
    }

    pub fn phi_prime(&self, n: usize, x: f64) -> Result<f64> {
        let lv = self.check_n(n)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let d = self.big_psi(n, lv, libm::log(x.abs()));
        Ok(if x < 0.0 { -d } else { d })
    }

    pub fn phi(&self, n: usize, x: f64) -> Result<f64> {
        let lv = self.check_n(n)?;
        let ax = x.abs();
        if ax <= self.a[n] {
            return Ok(0.0);
        }
        if ax >= self.a[n - 1] {
            return Ok(lv.phi[TABLE_INTERVALS] + (ax - self.a[n - 1]));
        }
        let (j, t) = lv.locate(libm::log(ax));
        Ok(hermite(lv.hy, t, lv.phi[j], lv.phi[j + 1], lv.dphi[j], lv.dphi[j + 1]).max(0.0))
    }
}

pub fn psi_n_eval(family: &MollifierFamily, n: usize, x: f64) -> Result<f64> {
    family.psi(n, x)
}

pub fn phi_n_eval(family: &MollifierFamily, n: usize, x: f64) -> Result<f64> {
    family.phi(n, x)
}

pub fn phi_n_prime(family: &MollifierFamily, n: usize, x: f64) -> Result<f64> {
    family.phi_prime(n, x)
}

/// One audited property; `slack` is the margin to the threshold (negative
/// when it fails).
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub n: usize,
    pub passed: bool,
    pub slack: f64,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub checks: Vec<PropertyCheck>,
}

impl FamilyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Points per level used by the sampled audits.
pub const AUDIT_POINTS: usize = 10_000;

/// `value ≤ limit` as a check.
fn at_most(name: &'static str, n: usize, value: f64, limit: f64) -> PropertyCheck {
    PropertyCheck { name, n, passed: value <= limit, slack: limit - value, measured: value }
}

/// Runs every property audit for levels `1..=n_check`.
pub fn verify_family(family: &MollifierFamily, n_check: usize) -> Result<FamilyReport> {
    if n_check == 0 || n_check > family.n_max {
        return Err(param_err!("n_check must lie in 1..={}, got {n_check}", family.n_max));
    }
    let rule = GaussLegendre::new(16);
    let mut checks = Vec::new();
    let a = family.a();
    checks.push(at_most("a_0 = 1", 0, (a[0] - 1.0).abs(), 0.0));
    for n in 1..=n_check {
        let (lo, hi) = (a[n], a[n - 1]);
        checks.push(at_most("a strictly decreasing", n, lo - hi, -f64::MIN_POSITIVE));
        if let Rho::Sqrt = family.rho {
            let exact = libm::exp(-((n * (n + 1)) as f64) / 2.0);
            checks.push(at_most("a_n closed form", n, (lo - exact).abs() / exact, 1e-15));
            let ratio = hi / lo / libm::exp(n as f64);
            checks.push(at_most("a_(n-1)/a_n = e^n", n, (ratio - 1.0).abs(), 1e-12));
        }
        // level mass by quadrature in x over geometric panels
        let mass = geometric_integral(&rule, lo, hi, |x| {
            let r = family.rho.eval(x);
            1.0 / (r * r)
        });
        checks.push(at_most("level mass = n", n, (mass - n as f64).abs(), 1e-8));

        let psi_int = geometric_integral(&rule, lo, hi, |x| family.psi(n, x).unwrap_or(f64::NAN));
        checks.push(at_most("psi_n integrates to 1", n, (psi_int - 1.0).abs(), 1e-6));

        // sample grid uniform in ln x over [a_n/2, 2 a_{n-1}]
        let y0 = libm::log(lo) - core::f64::consts::LN_2;
        let y1 = libm::log(hi) + core::f64::consts::LN_2;
        let xs: Vec<f64> =
            (0..AUDIT_POINTS).map(|i| libm::exp(y0 + (y1 - y0) * i as f64 / (AUDIT_POINTS - 1) as f64)).collect();

        let mut support_violation: f64 = 0.0;
        let mut bound: f64 = 0.0;
        let mut dphi_max: f64 = 0.0;
        let mut odd_even: f64 = 0.0;
        let mut dominated: f64 = f64::NEG_INFINITY;
        let mut gap_max: f64 = 0.0;
        let mut fd_max: f64 = 0.0;
        let mut inner_zero: f64 = 0.0;
        let mut monotone: f64 = f64::NEG_INFINITY;
        for &x in &xs {
            let p = family.psi(n, x)?;
            if p < 0.0 || (!(x > lo && x < hi) && p != 0.0) {
                support_violation = support_violation.max(p.abs());
            }
            let r = family.rho.eval(x);
            bound = bound.max(p * n as f64 * r * r);
            let d = family.phi_prime(n, x)?;
            dphi_max = dphi_max.max(d.abs());
            let f = family.phi(n, x)?;
            odd_even = odd_even.max((family.phi_prime(n, -x)? + d).abs()).max((family.phi(n, -x)? - f).abs() / x);
            dominated = dominated.max((f - x) / x);
            gap_max = gap_max.max(x - f);
            if x <= lo {
                inner_zero = inner_zero.max(f.abs()).max(family.phi(n, -x)?.abs());
            }
            if x > lo * (1.0 + 1e-4) && x < hi * (1.0 - 1e-4) {
                let h = 1e-5 * x;
                let fd = (family.phi_prime(n, x + h)? - family.phi_prime(n, x - h)?) / (2.0 * h);
                // scale-free: ψ_n ~ 1/(n x) spans hundreds of decades
                fd_max = fd_max.max(x * (fd - p).abs());
            }
            if n < family.n_max {
                monotone = monotone.max((f - family.phi(n + 1, x)?) / x);
            }
        }
        checks.push(at_most("psi_n supported in (a_n, a_(n-1)), non-negative", n, support_violation, 0.0));
        checks.push(at_most("psi_n <= 2 rho^-2 / n", n, bound, 2.0 + 1e-9));
        checks.push(at_most("|phi_n'| <= 1", n, dphi_max, 1.0));
        checks.push(at_most("phi_n even, phi_n' odd", n, odd_even, 1e-12));
        checks.push(at_most("phi_n(x) <= |x|", n, dominated, 1e-12));
        checks.push(at_most("|x| - phi_n(x) <= a_(n-1)", n, gap_max, hi));
        checks.push(at_most("phi_n = 0 on [-a_n, a_n]", n, inner_zero, 0.0));
        checks.push(at_most("phi_n'' = psi_n (finite difference, x-scaled)", n, fd_max, 1e-5));
        if n < family.n_max {
            checks.push(at_most("phi_n <= phi_(n+1)", n, monotone, 1e-12));
        }
    }
    Ok(FamilyReport { checks })
}

/// `∫_lo^hi f` over panels `[lo·r^k, lo·r^{k+1}]` with doubling refinement.
fn geometric_integral<F: Fn(f64) -> f64>(rule: &GaussLegendre, lo: f64, hi: f64, f: F) -> f64 {
    let decades = libm::log(hi / lo);
    let panels = (decades.ceil() as usize * 4).max(8);
    let ratio = libm::exp(decades / panels as f64);
    let mut acc = 0.0;
    let mut a = lo;
    for k in 0..panels {
        let b = if k + 1 == panels { hi } else { a * ratio };
        acc += integrate_doubling(rule, a, b, 1e-13, 1e-300, 1 << 12, &f).map(|r| r.value).unwrap_or(f64::NAN);
        a = b;
    }
    acc
}

/// Default ρ as a shared closure, handy for building custom variants.
pub fn sqrt_rho_fn() -> ScalarFn {
    Arc::new(libm::sqrt)
}
