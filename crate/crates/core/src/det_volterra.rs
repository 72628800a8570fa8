//! Deterministic weakly singular Volterra equations solved by explicit
//! product integration: the kernel is integrated exactly over each step
//! against the left-point value of the unknown.
//!
//! Two equations live here. The second-moment equation of the linear SIE,
//!
//! ```text
//! m(t) = h(t)² + ∫_0^t (t-s)^{-2α} m(s) ds,
//! ```
//!
//! which is the deterministic oracle for `E[X_t²]` when `σ(x) = x`, and the
//! log-Laplace equation evaluated at the origin,
//!
//! ```text
//! u(t,0) = S_t φ(0) - (c_θ/2) ∫_0^t (t-s)^{-α} u(s,0)² ds,
//! ⟨1, U_t⟩ = ⟨1, φ⟩ - ½ ∫_0^t u(s,0)² ds.
//! ```

use alloc::vec::Vec;

use crate::error::{param_err, Result};
use crate::kernels::{check_sie_alpha, power_moment, FracHeatKernel, KernelSpec, TestFunction};
use crate::noise::TimeGrid;
use crate::sie::SieProblem;
use crate::stats::pairwise_sum;

/// `m(t_k) = E[X(t_k)²]` for the linear equation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentOracle {
    pub grid: TimeGrid,
    pub m: Vec<f64>,
    pub alpha: f64,
}

/// Exact step moments `∫_{(j-1)dt}^{j dt} s^{-p} ds`, `j = 0..=n` (`j = 0` is 0).
pub(crate) fn step_moments(p: f64, grid: &TimeGrid) -> Vec<f64> {
    let scale = libm::pow(grid.dt(), 1.0 - p);
    (0..=grid.n_steps()).map(|j| if j == 0 { 0.0 } else { scale * power_moment(p, j as f64, 0.0, 1.0) }).collect()
}

/// Second moment of the solution with `σ(x) = x` (times `λ` and the kernel's
/// noise constant) by product integration of
/// `m(t) = h(t)² + ∫_0^t k(t,s)² m(s) ds`.
pub fn solve_linear_moment(problem: &SieProblem, grid: TimeGrid) -> Result<MomentOracle> {
    let alpha = match problem.kernel {
        KernelSpec::Smooth(_) => return Err(param_err!("the moment oracle needs a power-type kernel")),
        ref k => k.alpha().unwrap_or(f64::NAN),
    };
    check_sie_alpha(alpha)?;
    for &x in &[-2.0, -0.5, 0.0, 1.0, 3.7] {
        if problem.sigma.eval(x) != x {
            return Err(param_err!("the moment oracle needs σ(x) = x, got σ = {}", problem.sigma.label()));
        }
    }
    let coef = problem.kernel.noise_scale() * problem.lambda_scale;
    let weights: Vec<f64> = step_moments(2.0 * alpha, &grid).into_iter().map(|w| w * coef * coef).collect();
    let h = problem.h_values(&grid)?;
    let n = grid.n_steps();
    let mut m = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let conv: f64 = (0..k).map(|i| m[i] * weights[k - i]).sum();
        m.push(h[k] * h[k] + conv);
    }
    Ok(MomentOracle { grid, m, alpha })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogLaplaceOptions {
    /// Include the `-u²/2` branching term. Without it the solver returns the
    /// free evolution `S_t φ(0)`.
    pub nonlinear: bool,
    /// Re-evaluate the last step with the average of the left value and the
    /// explicit prediction.
    pub diagonal_sweep: bool,
}

impl Default for LogLaplaceOptions {
    fn default() -> Self {
        Self { nonlinear: true, diagonal_sweep: false }
    }
}

/// Log-Laplace solution at the origin with its total mass.
#[derive(Debug, Clone)]
pub struct LogLaplaceSolution {
    pub grid: TimeGrid,
    /// `u(t_k, 0)`.
    pub u0: Vec<f64>,
    /// `⟨1, U_{t_k}⟩`.
    pub mass: Vec<f64>,
    /// `S_{t_k} φ(0)`.
    pub semigroup: Vec<f64>,
    pub theta: f64,
    pub phi: TestFunction,
    pub phi_mass: f64,
    /// Steps where the explicit update went negative and was clamped to 0.
    pub clamp_count: usize,
}

impl LogLaplaceSolution {
    /// `⟨1, U_T⟩` recomputed from the final `u0` trajectory with the closed
    /// form of the trapezoidal rule.
    pub fn mass_recomputed(&self) -> f64 {
        let sq: Vec<f64> = self.u0.iter().map(|u| u * u).collect();
        let n = sq.len() - 1;
        let interior = pairwise_sum(&sq) - 0.5 * (sq[0] + sq[n]);
        self.phi_mass - 0.5 * self.grid.dt() * interior
    }

    pub fn final_mass(&self) -> f64 {
        *self.mass.last().unwrap_or(&self.phi_mass)
    }

    /// `∫_0^T f(s) u(T - s, 0) ds` by the trapezoidal rule; `f` is sampled at
    /// the grid nodes.
    pub fn reversed_integral(&self, f: &[f64]) -> f64 {
        let n = self.grid.n_steps();
        let terms: Vec<f64> = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * f[k] * self.u0[n - k]
            })
            .collect();
        pairwise_sum(&terms) * self.grid.dt()
    }
}

pub fn solve_log_laplace(theta: f64, phi: &TestFunction, grid: TimeGrid) -> Result<LogLaplaceSolution> {
    solve_log_laplace_with(theta, phi, grid, LogLaplaceOptions::default())
}

pub fn solve_log_laplace_with(
    theta: f64,
    phi: &TestFunction,
    grid: TimeGrid,
    opts: LogLaplaceOptions,
) -> Result<LogLaplaceSolution> {
    if !(theta > 0.0) {
        return Err(param_err!("log-Laplace solver needs theta > 0, got {theta}"));
    }
    let kernel = FracHeatKernel::new(theta)?;
    let n = grid.n_steps();
    let dt = grid.dt();
    let semigroup = grid.nodes().map(|t| kernel.semigroup_at_origin(t, phi)).collect::<Result<Vec<f64>>>()?;
    let moments = step_moments(kernel.alpha(), &grid);
    let half_c = 0.5 * kernel.c_theta();
    let phi_mass = phi.mass();

    let mut u0: Vec<f64> = Vec::with_capacity(n + 1);
    let mut sq: Vec<f64> = Vec::with_capacity(n + 1);
    let mut clamp_count = 0;
    for k in 0..=n {
        let mut u = semigroup[k];
        if opts.nonlinear && k > 0 {
            let history: f64 = (0..k - 1).map(|i| sq[i] * moments[k - i]).sum();
            u -= half_c * (history + sq[k - 1] * moments[1]);
            if opts.diagonal_sweep {
                let pred = u.max(0.0);
                u = semigroup[k] - half_c * (history + 0.5 * (sq[k - 1] + pred * pred) * moments[1]);
            }
        }
        if u < 0.0 {
            clamp_count += 1;
            u = 0.0;
        }
        u0.push(u);
        sq.push(u * u);
    }

    let mut mass = Vec::with_capacity(n + 1);
    let mut acc = phi_mass;
    mass.push(acc);
    for k in 0..n {
        if opts.nonlinear {
            acc -= 0.25 * (sq[k] + sq[k + 1]) * dt;
        }
        mass.push(acc);
    }

    Ok(LogLaplaceSolution { grid, u0, mass, semigroup, theta, phi: phi.clone(), phi_mass, clamp_count })
}
