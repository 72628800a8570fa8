//! Pathwise solvers for `X_t = h(t) + ∫_0^t k(t,s) σ(X_s) dB_s`.
//!
//! Both solvers use left-point weights. For the power kernels the weight of
//! increment `i` at node `k` is the root-mean-square of the kernel over
//! `[t_i, t_{i+1}]`,
//!
//! ```text
//! w_{k,i} = sqrt( ∫_{t_i}^{t_{i+1}} (t_k - s)^{-2α} ds / dt ),
//! ```
//!
//! so with `σ ≡ 1` the discrete stochastic convolution has exactly the
//! variance of the continuous one. On a uniform grid the weights depend only
//! on `k - i`, and the convolution is accumulated as a sequence of `axpy`
//! updates once `σ(X_i)ΔB_i` is known.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{param_err, Error, Result};
use crate::kernels::{check_sie_alpha, power_moment, KernelSpec, SmoothKernel};
use crate::noise::{BrownianPath, TimeGrid};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Diffusion coefficient `σ` with its declared regularity constants:
/// `|σ(x) - σ(y)| <= holder_l·|x - y|^gamma` and `|σ(x)| <= growth_c·(1 + |x|)`.
#[derive(Clone)]
pub struct DiffusionCoefficient {
    sigma: ScalarFn,
    gamma: f64,
    holder_l: f64,
    growth_c: f64,
    label: String,
}

impl DiffusionCoefficient {
    pub fn new(label: &str, sigma: ScalarFn, gamma: f64, holder_l: f64, growth_c: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(param_err!("Hölder exponent gamma must lie in (0, 1], got {gamma}"));
        }
        if !(holder_l >= 0.0 && growth_c >= 0.0) {
            return Err(param_err!("Hölder and growth constants must be non-negative"));
        }
        Ok(Self { sigma, gamma, holder_l, growth_c, label: label.into() })
    }

    pub fn zero() -> Self {
        Self { sigma: Arc::new(|_| 0.0), gamma: 1.0, holder_l: 0.0, growth_c: 0.0, label: "zero".into() }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            sigma: Arc::new(move |_| c),
            gamma: 1.0,
            holder_l: 0.0,
            growth_c: c.abs(),
            label: alloc::format!("const:{c}"),
        }
    }

    /// `σ(x) = x`.
    pub fn linear() -> Self {
        Self { sigma: Arc::new(|x| x), gamma: 1.0, holder_l: 1.0, growth_c: 1.0, label: "linear".into() }
    }

    /// `σ(x) = min(|x|^γ, growth_c·(1 + |x|))`.
    ///
    /// With `growth_c >= 1` the cap never binds and `σ` is `γ`-Hölder with
    /// constant 1.
    pub fn holder_capped(gamma: f64, growth_c: f64) -> Result<Self> {
        if !(growth_c >= 1.0) {
            return Err(param_err!("growth constant of the Hölder preset must be >= 1, got {growth_c}"));
        }
        Self::new(
            &alloc::format!("holder:{gamma}"),
            Arc::new(move |x: f64| libm::pow(x.abs(), gamma).min(growth_c * (1.0 + x.abs()))),
            gamma,
            1.0,
            growth_c,
        )
    }

    /// `σ(x) = √(x⁺)`.
    pub fn sqrt_positive() -> Self {
        Self {
            sigma: Arc::new(|x: f64| libm::sqrt(x.max(0.0))),
            gamma: 0.5,
            holder_l: 1.0,
            growth_c: 1.0,
            label: "sqrt".into(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.sigma)(x)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn holder_l(&self) -> f64 {
        self.holder_l
    }

    pub fn growth_c(&self) -> f64 {
        self.growth_c
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_lipschitz(&self) -> bool {
        self.gamma >= 1.0
    }

    /// Randomized audit of the declared constants on `[-10, 10]`.
    pub fn audit(&self, n_samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_samples {
            let x: f64 = rng.random_range(-10.0..10.0);
            let y: f64 = rng.random_range(-10.0..10.0);
            let (sx, sy) = (self.eval(x), self.eval(y));
            let bound = self.holder_l * libm::pow((x - y).abs(), self.gamma);
            if (sx - sy).abs() > bound * (1.0 + 1e-12) + 1e-12 {
                return Err(param_err!(
                    "σ = {} violates the declared Hölder bound at ({x}, {y}): {} > {bound}",
                    self.label,
                    (sx - sy).abs()
                ));
            }
            if sx.abs() > self.growth_c * (1.0 + x.abs()) * (1.0 + 1e-12) + 1e-12 {
                return Err(param_err!("σ = {} violates the linear growth bound at {x}", self.label));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for DiffusionCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionCoefficient")
            .field("label", &self.label)
            .field("gamma", &self.gamma)
            .field("holder_l", &self.holder_l)
            .field("growth_c", &self.growth_c)
            .finish_non_exhaustive()
    }
}

/// How `h(t)` is defined.
#[derive(Clone)]
pub enum Forcing {
    /// `h(t) = x0 + ∫_0^t k(t,s) g(s) ds` (`g = None` means `g ≡ 0`).
    Catalytic { x0: f64, g: Option<ScalarFn> },
    /// An explicit `h(t)`.
    Explicit(ScalarFn),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Catalytic { x0, g } => {
                f.debug_struct("Catalytic").field("x0", x0).field("g", &g.as_ref().map(|_| "fn")).finish()
            }
            Forcing::Explicit(_) => f.write_str("Explicit(fn)"),
        }
    }
}

/// One equation instance.
///
/// With a [`KernelSpec::FractionalHeat`] kernel the stochastic term carries
/// the factor `c_θ` while the forcing integral uses plain `(t-s)^{-α}`; this
/// is the equation satisfied by the origin value of the corresponding SPDE.
#[derive(Clone, Debug)]
pub struct SieProblem {
    pub kernel: KernelSpec,
    pub sigma: DiffusionCoefficient,
    pub forcing: Forcing,
    /// Multiplies `σ` in the stochastic term.
    pub lambda_scale: f64,
    forcing_label: String,
}

impl SieProblem {
    pub fn new(kernel: KernelSpec, sigma: DiffusionCoefficient, x0: f64) -> Self {
        Self {
            kernel,
            sigma,
            forcing: Forcing::Catalytic { x0, g: None },
            lambda_scale: 1.0,
            forcing_label: alloc::format!("x0={x0}"),
        }
    }

    /// Adds a bounded forcing `g` to the `(x0, g)` form of `h`.
    pub fn with_g(mut self, label: &str, g: ScalarFn) -> Self {
        if let Forcing::Catalytic { x0, .. } = self.forcing {
            self.forcing = Forcing::Catalytic { x0, g: Some(g) };
            self.forcing_label = alloc::format!("x0={x0},g={label}");
        }
        self
    }

    /// Replaces `h` by an explicit function.
    pub fn with_h(mut self, label: &str, h: ScalarFn) -> Self {
        self.forcing = Forcing::Explicit(h);
        self.forcing_label = alloc::format!("h={label}");
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda_scale = lambda;
        self
    }

    pub fn describe(&self) -> String {
        alloc::format!(
            "{};sigma={};{};lambda={}",
            self.kernel.describe(),
            self.sigma.label(),
            self.forcing_label,
            self.lambda_scale
        )
    }

    /// FNV-1a hash of [`Self::describe`].
    pub fn id(&self) -> u64 {
        self.describe().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
    }

    /// `h(t_k)` for every node.
    pub fn h_values(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        let n = grid.n_steps();
        let dt = grid.dt();
        let out: Vec<f64> = match &self.forcing {
            Forcing::Explicit(h) => grid.nodes().map(|t| h(t)).collect(),
            Forcing::Catalytic { x0, g: None } => alloc::vec![*x0; n + 1],
            Forcing::Catalytic { x0, g: Some(g) } => {
                let gv: Vec<f64> = (0..n).map(|i| g(grid.node(i))).collect();
                if let Some(i) = gv.iter().position(|v| !v.is_finite()) {
                    return Err(param_err!("forcing g is not finite at t = {}", grid.node(i)));
                }
                match &self.kernel {
                    KernelSpec::Smooth(k) => (0..=n)
                        .map(|j| {
                            let t = grid.node(j);
                            x0 + (0..j).map(|i| k.eval(grid.node(i), t) * gv[i] * dt).sum::<f64>()
                        })
                        .collect(),
                    spec => {
                        let alpha = spec.alpha().unwrap_or(0.0);
                        // ∫ over [t_i, t_{i+1}] of (t_k - s)^{-α} depends only on k - i
                        let m: Vec<f64> = (0..=n)
                            .map(|j| {
                                if j == 0 {
                                    0.0
                                } else {
                                    libm::pow(dt, 1.0 - alpha) * power_moment(alpha, j as f64, 0.0, 1.0)
                                }
                            })
                            .collect();
                        (0..=n).map(|k| x0 + (0..k).map(|i| gv[i] * m[k - i]).sum::<f64>()).collect()
                    }
                }
            }
        };
        Ok(out)
    }
}

/// Solution values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SiePath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub seed: u64,
    pub problem_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    pub path: SiePath,
    pub n_iterations: usize,
    /// `sup_k |X^{n+1}(t_k) - X^n(t_k)|` per iteration.
    pub sup_gaps: Vec<f64>,
    pub converged: bool,
    /// Set when `σ` is not Lipschitz: the contraction argument does not apply
    /// and the result is only a heuristic fixed point.
    pub heuristic: bool,
}

#[derive(Clone)]
enum Weights {
    /// `w[j]` for `j = k - i`; `w[0]` is unused.
    Toeplitz(Vec<f64>),
    Smooth(SmoothKernel, f64),
}

/// Precomputed `h` and weights for one problem on one grid; reusable across
/// Monte Carlo paths.
#[derive(Clone)]
pub struct SieScheme {
    grid: TimeGrid,
    sigma: DiffusionCoefficient,
    h: Vec<f64>,
    weights: Weights,
    problem_id: u64,
}

impl fmt::Debug for SieScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SieScheme").field("grid", &self.grid).field("sigma", &self.sigma).finish_non_exhaustive()
    }
}

/// Variance-matched weights `sqrt(∫_{(j-1)dt}^{j dt} s^{-2α} ds / dt)` for `j = 0..=n`.
pub fn variance_matched_weights(alpha: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    check_sie_alpha(alpha)?;
    let n = grid.n_steps();
    let q = 1.0 - 2.0 * alpha;
    let scale = libm::pow(grid.dt(), -alpha);
    Ok((0..=n)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                let j = j as f64;
                scale * libm::sqrt((libm::pow(j, q) - libm::pow(j - 1.0, q)) / q)
            }
        })
        .collect())
}

impl SieScheme {
    pub fn new(problem: &SieProblem, grid: TimeGrid) -> Result<Self> {
        let noise = problem.lambda_scale;
        if !noise.is_finite() {
            return Err(param_err!("lambda must be finite, got {noise}"));
        }
        let weights = match &problem.kernel {
            KernelSpec::Smooth(k) => {
                k.audit(grid.t_end(), grid.n_steps().min(64))?;
                Weights::Smooth(k.clone(), noise)
            }
            KernelSpec::SingularPower { alpha } => {
                let mut w = variance_matched_weights(*alpha, &grid)?;
                w.iter_mut().for_each(|v| *v *= noise);
                Weights::Toeplitz(w)
            }
            KernelSpec::FractionalHeat { theta } => {
                let alpha = 1.0 / (2.0 + theta);
                let c = crate::kernels::c_theta(*theta)?;
                let mut w = variance_matched_weights(alpha, &grid)?;
                w.iter_mut().for_each(|v| *v *= c * noise);
                Weights::Toeplitz(w)
            }
        };
        Ok(Self { grid, sigma: problem.sigma.clone(), h: problem.h_values(&grid)?, weights, problem_id: problem.id() })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Weight sequence for power kernels (index `k - i`).
    pub fn toeplitz_weights(&self) -> Option<&[f64]> {
        match &self.weights {
            Weights::Toeplitz(w) => Some(w),
            Weights::Smooth(..) => None,
        }
    }

    fn check_path(&self, path: &BrownianPath) -> Result<()> {
        if path.grid() != &self.grid {
            return Err(param_err!(
                "Brownian path grid ({} steps, t_end {}) does not match the scheme grid ({} steps, t_end {})",
                path.grid().n_steps(),
                path.grid().t_end(),
                self.grid.n_steps(),
                self.grid.t_end()
            ));
        }
        Ok(())
    }

    /// Adds `Σ_{i<j} w_{j,i} s_i` to `acc[j]` for `j > k`, given `s_k`.
    #[inline]
    fn push_contribution(&self, acc: &mut [f64], k: usize, s: f64) {
        if s == 0.0 {
            return;
        }
        match &self.weights {
            Weights::Toeplitz(w) => {
                for (a, wj) in acc[k + 1..].iter_mut().zip(&w[1..]) {
                    *a += wj * s;
                }
            }
            Weights::Smooth(kernel, scale) => {
                let tk = self.grid.node(k);
                for (j, a) in acc.iter_mut().enumerate().skip(k + 1) {
                    *a += scale * kernel.eval(tk, self.grid.node(j)) * s;
                }
            }
        }
    }

    /// Explicit scheme: `X(t_k) = h(t_k) + Σ_{i<k} w_{k,i} σ(X(t_i)) ΔB_i`.
    pub fn euler(&self, path: &BrownianPath) -> Result<SiePath> {
        self.check_path(path)?;
        let db = path.increments();
        let n = self.grid.n_steps();
        let mut acc = self.h.clone();
        for k in 0..=n {
            let x = acc[k];
            if !x.is_finite() {
                return Err(Error::Diverged { seed: path.seed(), step: k });
            }
            if k < n {
                let s = self.sigma.eval(x) * db[k];
                if !s.is_finite() {
                    return Err(Error::Diverged { seed: path.seed(), step: k });
                }
                self.push_contribution(&mut acc, k, s);
            }
        }
        Ok(SiePath { grid: self.grid, values: acc, seed: path.seed(), problem_id: self.problem_id })
    }

    /// One Picard map `X ↦ h + Σ w σ(X) ΔB` on the fixed increments.
    fn picard_map(&self, path: &BrownianPath, prev: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let db = path.increments();
        out.clear();
        out.extend_from_slice(&self.h);
        for (k, &d) in db.iter().enumerate() {
            let s = self.sigma.eval(prev[k]) * d;
            if !s.is_finite() {
                return Err(Error::Diverged { seed: path.seed(), step: k });
            }
            self.push_contribution(out, k, s);
        }
        if let Some(step) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged { seed: path.seed(), step });
        }
        Ok(())
    }

    /// Picard iteration from `initial` (default `h`), every iterate driven by
    /// the same increments. Stops once the sup-norm gap drops below `tol`.
    pub fn picard(
        &self,
        path: &BrownianPath,
        max_iter: usize,
        tol: f64,
        initial: Option<&[f64]>,
    ) -> Result<PicardResult> {
        self.check_path(path)?;
        let n = self.grid.n_steps();
        let mut cur: Vec<f64> = match initial {
            Some(x) if x.len() != n + 1 => {
                return Err(param_err!("initial iterate has {} values, expected {}", x.len(), n + 1))
            }
            Some(x) => x.to_vec(),
            None => self.h.clone(),
        };
        let mut next = Vec::with_capacity(n + 1);
        let mut sup_gaps = Vec::new();
        let mut converged = false;
        for _ in 0..max_iter {
            self.picard_map(path, &cur, &mut next)?;
            let gap = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            sup_gaps.push(gap);
            core::mem::swap(&mut cur, &mut next);
            if gap < tol {
                converged = true;
                break;
            }
        }
        Ok(PicardResult {
            path: SiePath { grid: self.grid, values: cur, seed: path.seed(), problem_id: self.problem_id },
            n_iterations: sup_gaps.len(),
            sup_gaps,
            converged,
            heuristic: !self.sigma.is_lipschitz(),
        })
    }
}

pub fn euler_solve(problem: &SieProblem, path: &BrownianPath) -> Result<SiePath> {
    SieScheme::new(problem, *path.grid())?.euler(path)
}

pub fn picard_solve(problem: &SieProblem, path: &BrownianPath, max_iter: usize, tol: f64) -> Result<PicardResult> {
    SieScheme::new(problem, *path.grid())?.picard(path, max_iter, tol, None)
}

/// Exact integrals `∫_{(j-1)dt}^{j dt} s^{α-1} ds = dt^α (j^α - (j-1)^α)/α`.
fn transform_weights(alpha: f64, grid: &TimeGrid) -> Vec<f64> {
    let scale = libm::pow(grid.dt(), alpha) / alpha;
    (0..=grid.n_steps())
        .map(|j| if j == 0 { 0.0 } else { scale * (libm::pow(j as f64, alpha) - libm::pow((j - 1) as f64, alpha)) })
        .collect()
}

/// `Y(t_k) = ∫_0^{t_k} (t_k - s)^{α-1} X(s) ds` for `X` piecewise constant
/// (left-point values), integrated exactly.
pub fn transform_forward(x: &SiePath, alpha: f64) -> Result<Vec<f64>> {
    check_sie_alpha(alpha)?;
    let n = x.grid.n_steps();
    if x.values.len() != n + 1 {
        return Err(param_err!("path has {} values for {} steps", x.values.len(), n));
    }
    let v = transform_weights(alpha, &x.grid);
    Ok((0..=n).map(|k| (0..k).map(|i| x.values[i] * v[k - i]).sum()).collect())
}

/// Inverse of [`transform_forward`]: the piecewise-constant `X` whose
/// forward transform matches `y` at every node, found by forward
/// substitution in the lower-triangular Toeplitz system. `y[0]` is ignored
/// (the transform vanishes at 0); the last node copies the last interval.
///
/// In the continuum this is `X_t = c_α^{-1} d/dt ∫_0^t (t-s)^{-α} Y_s ds`.
pub fn transform_inverse(y: &[f64], alpha: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    check_sie_alpha(alpha)?;
    let n = grid.n_steps();
    if y.len() != n + 1 {
        return Err(param_err!("transform has {} values for {} steps", y.len(), n));
    }
    let v = transform_weights(alpha, grid);
    let mut x = alloc::vec![0.0; n + 1];
    for k in 0..n {
        let mut rhs = y[k + 1];
        for i in 0..k {
            rhs -= x[i] * v[k + 1 - i];
        }
        x[k] = rhs / v[1];
    }
    x[n] = x[n - 1];
    Ok(x)
}

/// `c_α = ∫_0^1 (1-r)^{α-1} r^{-α} dr = B(α, 1-α) = π / sin(πα)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(param_err!("c_alpha needs alpha in (0, 1), got {alpha}"));
    }
    Ok(core::f64::consts::PI / libm::sin(core::f64::consts::PI * alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_l2_partial;
    use crate::noise::sample_brownian_increments;
    use crate::quadrature::{integrate_singular_left, integrate_singular_right, GaussLegendre};

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn weights_reproduce_kernel_mass() {
        let g = grid(64);
        let w = variance_matched_weights(0.3, &g).unwrap();
        for k in 1..=64 {
            let t = g.node(k);
            let discrete: f64 = (0..k).map(|i| w[k - i] * w[k - i] * g.dt()).sum();
            let exact = kernel_l2_partial(0.3, t, 0.0, t).unwrap();
            assert!((discrete - exact).abs() < 1e-12 * exact, "k={k}");
        }
    }

    #[test]
    fn zero_sigma_returns_h() {
        let g = grid(128);
        let p = SieProblem::new(KernelSpec::singular_power(0.25).unwrap(), DiffusionCoefficient::zero(), 0.7)
            .with_g("one", Arc::new(|_| 1.0));
        let path = sample_brownian_increments(g, 1);
        let x = euler_solve(&p, &path).unwrap();
        assert_eq!(x.values, p.h_values(&g).unwrap());
        assert_eq!(x.values[0], 0.7);
        let r = picard_solve(&p, &path, 10, 1e-12).unwrap();
        assert_eq!(r.n_iterations, 1);
        assert_eq!(r.sup_gaps, [0.0]);
        assert!(r.converged);
    }

    #[test]
    fn forcing_uses_exact_kernel_moments() {
        // g ≡ 1: h(t) = x0 + t^{1-α}/(1-α) exactly at nodes
        let g = grid(50);
        let p = SieProblem::new(KernelSpec::singular_power(0.2).unwrap(), DiffusionCoefficient::zero(), 1.0)
            .with_g("one", Arc::new(|_| 1.0));
        let h = p.h_values(&g).unwrap();
        for (k, t) in g.nodes().enumerate() {
            let exact = 1.0 + libm::pow(t, 0.8) / 0.8;
            assert!((h[k] - exact).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn picard_contracts_for_lipschitz_sigma() {
        let g = grid(512);
        let p = SieProblem::new(KernelSpec::singular_power(0.25).unwrap(), DiffusionCoefficient::linear(), 1.0);
        let path = sample_brownian_increments(g, 99);
        let r = picard_solve(&p, &path, 60, 1e-10).unwrap();
        assert!(r.converged, "gaps {:?}", r.sup_gaps);
        assert!(!r.heuristic);
        let scheme = SieScheme::new(&p, g).unwrap();
        let shifted: Vec<f64> = scheme.h().iter().map(|v| v + 1.0).collect();
        let r2 = scheme.picard(&path, 60, 1e-10, Some(&shifted)).unwrap();
        let gap = r.path.values.iter().zip(&r2.path.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-9, "gap {gap}");
        let e = scheme.euler(&path).unwrap();
        let gap = r.path.values.iter().zip(&e.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-9, "euler gap {gap}");
    }

    #[test]
    fn holder_sigma_flags_heuristic() {
        let g = grid(64);
        let p = SieProblem::new(
            KernelSpec::singular_power(0.25).unwrap(),
            DiffusionCoefficient::holder_capped(0.8, 1.0).unwrap(),
            1.0,
        );
        let r = picard_solve(&p, &sample_brownian_increments(g, 5), 100, 1e-12).unwrap();
        assert!(r.heuristic);
    }

    #[test]
    fn divergence_is_reported_with_seed() {
        let g = grid(32);
        let sigma =
            DiffusionCoefficient::new("explode", Arc::new(|x: f64| libm::exp(x * x)), 1.0, 1e300, 1e300).unwrap();
        let p = SieProblem::new(KernelSpec::singular_power(0.25).unwrap(), sigma, 30.0);
        let path = BrownianPath::from_increments(g, alloc::vec![1.0; 32], 77).unwrap();
        match euler_solve(&p, &path) {
            Err(Error::Diverged { seed, .. }) => assert_eq!(seed, 77),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_grid_rejected() {
        let p = SieProblem::new(KernelSpec::singular_power(0.25).unwrap(), DiffusionCoefficient::linear(), 1.0);
        let path = sample_brownian_increments(grid(16), 1);
        let scheme = SieScheme::new(&p, grid(32)).unwrap();
        assert!(scheme.euler(&path).is_err());
    }

    #[test]
    fn smooth_kernel_weights() {
        let g = grid(16);
        let k = KernelSpec::smooth(Arc::new(|s, t| 2.0 + libm::sin(s + t)), 1.0, 1.0).unwrap();
        let p = SieProblem::new(k, DiffusionCoefficient::constant(1.0), 0.0);
        let path = sample_brownian_increments(g, 4);
        let x = euler_solve(&p, &path).unwrap();
        let db = path.increments();
        for kk in 0..=16 {
            let t = g.node(kk);
            let expect: f64 = (0..kk).map(|i| (2.0 + libm::sin(g.node(i) + t)) * db[i]).sum();
            assert!((x.values[kk] - expect).abs() < 1e-12);
        }
        let bad = KernelSpec::smooth(Arc::new(|s, _| 1.0 - s), 0.5, 1.0).unwrap();
        let p = SieProblem::new(bad, DiffusionCoefficient::constant(1.0), 0.0);
        assert!(SieScheme::new(&p, g).is_err());
    }

    #[test]
    fn sigma_audit() {
        assert!(DiffusionCoefficient::linear().audit(1000, 1).is_ok());
        assert!(DiffusionCoefficient::holder_capped(0.6, 1.0).unwrap().audit(1000, 1).is_ok());
        assert!(DiffusionCoefficient::sqrt_positive().audit(1000, 1).is_ok());
        let lying = DiffusionCoefficient::new("x^2", Arc::new(|x| x * x), 1.0, 1.0, 1.0).unwrap();
        assert!(lying.audit(1000, 1).is_err());
    }

    #[test]
    fn forward_transform_of_constant_is_exact() {
        let g = grid(1024);
        let ones = SiePath { grid: g, values: alloc::vec![1.0; 1025], seed: 0, problem_id: 0 };
        let y = transform_forward(&ones, 0.25).unwrap();
        for (k, t) in g.nodes().enumerate() {
            let exact = libm::pow(t, 0.25) / 0.25;
            assert!((y[k] - exact).abs() <= 1e-12 * exact.max(1.0), "k={k}");
        }
        let zeros = SiePath { grid: g, values: alloc::vec![0.0; 1025], seed: 0, problem_id: 0 };
        assert!(transform_forward(&zeros, 0.25).unwrap().iter().all(|v| *v == 0.0));
        assert!(transform_inverse(&alloc::vec![0.0; 1025], 0.25, &g).unwrap().iter().all(|v| *v == 0.0));
    }

    /// `∫_0^t (t-s)^{α-1} f(s) ds` by graded quadrature.
    fn forward_oracle(alpha: f64, t: f64, f: impl Fn(f64) -> f64) -> f64 {
        let rule = GaussLegendre::new(20);
        integrate_singular_right(&rule, 0.0, t, 1.0 - alpha, 1e-6 * t, |u| libm::pow(u, alpha - 1.0) * f(t - u))
    }

    #[test]
    fn forward_transform_of_ramp_matches_quadrature() {
        // X(t) = t sampled at left points: the oracle integrates the kernel
        // over each interval by quadrature and weights it by the step value.
        let g = grid(1024);
        let alpha = 0.25;
        let vals: Vec<f64> = g.nodes().collect();
        let x = SiePath { grid: g, values: vals.clone(), seed: 0, problem_id: 0 };
        let y = transform_forward(&x, alpha).unwrap();
        let rule = GaussLegendre::new(20);
        for &k in &[1usize, 7, 100, 513, 1024] {
            let t = g.node(k);
            let oracle: f64 = (0..k)
                .map(|i| {
                    let (a, b) = (g.node(i), g.node(i + 1));
                    let m = if i + 1 == k {
                        integrate_singular_right(&rule, a, b, 1.0 - alpha, 1e-3 * (b - a), |u| {
                            libm::pow(u, alpha - 1.0)
                        })
                    } else {
                        rule.integrate(a, b, |s| libm::pow(t - s, alpha - 1.0))
                    };
                    vals[i] * m
                })
                .sum();
            assert!((y[k] - oracle).abs() <= 1e-6 * oracle.abs().max(1e-300), "k={k}: {} vs {oracle}", y[k]);
            // and within O(dt) of the continuous ramp transform
            let smooth = libm::pow(t, 1.25) / (0.25 * 1.25);
            assert!((y[k] - smooth).abs() <= 2.0 * g.dt() * libm::pow(t, 0.25) / 0.25, "k={k}");
        }
    }

    #[test]
    fn inverse_round_trip_is_exact_for_discrete_transform() {
        for &n in &[256usize, 1024] {
            let g = grid(n);
            let x: Vec<f64> = g.nodes().map(|t| libm::sin(3.0 * t) + 2.0).collect();
            let path = SiePath { grid: g, values: x.clone(), seed: 0, problem_id: 0 };
            let y = transform_forward(&path, 0.3).unwrap();
            let back = transform_inverse(&y, 0.3, &g).unwrap();
            let err = (0..n).map(|k| (back[k] - x[k]).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n}: {err}");
        }
    }

    #[test]
    fn inverse_of_continuous_transform_converges_first_order() {
        // Y sampled from the exact continuous transform of sin; the discrete
        // inverse recovers sin at nodes with O(dt) error.
        let alpha = 0.25;
        let mut prev = f64::INFINITY;
        for &n in &[64usize, 128, 256] {
            let g = grid(n);
            let y: Vec<f64> =
                g.nodes().map(|t| if t == 0.0 { 0.0 } else { forward_oracle(alpha, t, libm::sin) }).collect();
            let x = transform_inverse(&y, alpha, &g).unwrap();
            let err = (0..n).map(|k| (x[k] - libm::sin(g.node(k))).abs()).fold(0.0, f64::max);
            assert!(err < 0.6 * prev, "n={n}: err {err}, previous {prev}");
            prev = err;
        }
    }

    #[test]
    fn c_alpha_against_quadrature() {
        let rule = GaussLegendre::new(30);
        for &alpha in &[0.1, 0.25, 0.3, 0.5, 0.7] {
            let q = integrate_singular_left(&rule, 0.0, 0.5, alpha, 1e-3, |r| {
                libm::pow(1.0 - r, alpha - 1.0) * libm::pow(r, -alpha)
            }) + integrate_singular_right(&rule, 0.5, 1.0, 1.0 - alpha, 1e-3, |u| {
                libm::pow(u, alpha - 1.0) * libm::pow(1.0 - u, -alpha)
            });
            let c = c_alpha(alpha).unwrap();
            assert!((q - c).abs() < 1e-9, "alpha={alpha}: {q} vs {c}");
            assert!((c - c_alpha(1.0 - alpha).unwrap()).abs() < 1e-12);
        }
        assert!((c_alpha(0.25).unwrap() - core::f64::consts::PI * core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(c_alpha(1.0).is_err());
    }

    #[test]
    fn continuum_inverse_formula_holds_for_constants() {
        // X ≡ 1 ⇒ Y = t^α/α and ∫_0^t (t-s)^{-α} Y_s ds = c_α t
        let rule = GaussLegendre::new(30);
        let alpha = 0.25;
        for &t in &[0.5, 1.0, 2.0] {
            let f = |s: f64| libm::pow(t - s, -alpha) * libm::pow(s, alpha) / alpha;
            let v = integrate_singular_left(&rule, 0.0, 0.5 * t, 0.0, 1e-6, f)
                + integrate_singular_right(&rule, 0.5 * t, t, alpha, 1e-6, |u| f(t - u));
            assert!((v - c_alpha(alpha).unwrap() * t).abs() < 1e-9 * t, "t={t}");
        }
    }
}
