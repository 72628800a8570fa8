//! Gauss–Legendre quadrature: fixed rules, composite panels, panel doubling,
//! and a graded rule for integrands with an integrable endpoint singularity.

use alloc::vec::Vec;

use crate::error::{param_err, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_a^b f.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for j in 0..panels {
            let lo = a + j as f64 * h;
            let hi = if j + 1 == panels { b } else { lo + h };
            acc += self.integrate(lo, hi, &mut f);
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Outcome of a panel-doubling integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    pub panels: usize,
    /// Last observed change between successive doublings.
    pub change: f64,
}

/// Doubles the number of equal panels until two successive results differ by
/// less than `rel_tol · max(|I|, abs_floor)`.
pub fn integrate_doubling<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
    max_panels: usize,
    mut f: F,
) -> Result<AdaptiveResult> {
    if a == b {
        return Ok(AdaptiveResult { value: 0.0, panels: 0, change: 0.0 });
    }
    let mut panels = 2;
    let mut prev = rule.integrate_panels(a, b, panels, &mut f);
    loop {
        panels *= 2;
        let cur = rule.integrate_panels(a, b, panels, &mut f);
        let change = (cur - prev).abs();
        if change <= rel_tol * cur.abs().max(abs_floor) {
            return Ok(AdaptiveResult { value: cur, panels, change });
        }
        if panels >= max_panels {
            return Err(param_err!(
                "quadrature did not stabilise on [{a}, {b}] within {max_panels} panels (change {change:e})"
            ));
        }
        prev = cur;
    }
}

/// ∫_a^b g(s) ds for an integrand behaving like `(b - s)^{-p}` near `b`,
/// `0 <= p < 1`. The closure receives the distance `u = b - s` to the
/// singular endpoint, so callers never lose it to cancellation.
///
/// Panels are graded geometrically toward `b` down to `min_width`; the last
/// piece `u ∈ [0, min_width]` is mapped through `u = w·v^m`, `m = 1/(1-p)`,
/// which removes the singularity.
pub fn integrate_singular_right<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    p: f64,
    min_width: f64,
    f: F,
) -> f64 {
    integrate_near_zero(rule, b - a, p, min_width, f)
}

/// Same as [`integrate_singular_right`] with the singularity at `a`; the
/// closure receives `u = s - a`.
pub fn integrate_singular_left<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    p: f64,
    min_width: f64,
    f: F,
) -> f64 {
    integrate_near_zero(rule, b - a, p, min_width, f)
}

/// ∫_0^len f(u) du with `f(u) ~ u^{-p}` at 0.
fn integrate_near_zero<F: FnMut(f64) -> f64>(rule: &GaussLegendre, len: f64, p: f64, min_width: f64, mut f: F) -> f64 {
    debug_assert!((0.0..1.0).contains(&p));
    if len <= 0.0 {
        return 0.0;
    }
    let min_width = min_width.min(len);
    let mut acc = 0.0;
    let mut width = len;
    while width > 2.0 * min_width {
        acc += rule.integrate(0.5 * width, width, &mut f);
        width *= 0.5;
    }
    let m = 1.0 / (1.0 - p);
    acc += rule.integrate(0.0, 1.0, |v| {
        if v <= 0.0 {
            return 0.0;
        }
        f(width * libm::pow(v, m)) * width * m * libm::pow(v, m - 1.0)
    });
    acc
}
