//! Monte Carlo check of the Laplace-functional duality for the catalytic
//! square-root equation.
//!
//! The left side simulates `V = X(·, 0)` from
//! `V_t = x0 + ∫_0^t (t-s)^{-α} g(s) ds + ∫_0^t c_θ (t-s)^{-α} √(V_s⁺) dB_s`
//! and averages `exp(-⟨X_T, φ⟩)` with
//!
//! ```text
//! ⟨X_T, φ⟩ = x0⟨1,φ⟩ + ∫_0^T S_{T-s}φ(0) g(s)/c_θ ds + ∫_0^T S_{T-s}φ(0) √(V_s⁺) dB_s.
//! ```
//!
//! The right side is `exp(-x0⟨1,U_T⟩ - ∫_0^T g(s)/c_θ · u(T-s, 0) ds)` from
//! the log-Laplace solver. The scaling constant `λ` is fixed to 1.

use alloc::string::String;
use alloc::vec::Vec;

use crate::det_volterra::solve_log_laplace;
use crate::error::{param_err, Error, Result};
use crate::kernels::{FracHeatKernel, KernelSpec, TestFunction};
use crate::noise::{derive_path_seed, sample_brownian_increments, TimeGrid};
use crate::sie::{DiffusionCoefficient, ScalarFn, SieProblem, SieScheme};
use crate::stats::{pairwise_sum, MeanEstimate, PathRunner};

/// Largest tolerated fraction of diverged paths.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;

#[derive(Clone)]
pub struct DualityConfig {
    pub theta: f64,
    pub x0: f64,
    /// Catalyst intensity `g`; `None` means `g ≡ 0`.
    pub g: Option<(String, ScalarFn)>,
    pub phi: TestFunction,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Relative discretization allowance added to the `3·stderr` band.
    pub allowance_rel: f64,
}

impl core::fmt::Debug for DualityConfig {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DualityConfig")
            .field("theta", &self.theta)
            .field("x0", &self.x0)
            .field("g", &self.g.as_ref().map(|(l, _)| l))
            .field("phi", &self.phi)
            .field("grid", &self.grid)
            .field("n_paths", &self.n_paths)
            .field("master_seed", &self.master_seed)
            .finish()
    }
}

impl DualityConfig {
    pub fn new(theta: f64, x0: f64, phi: TestFunction, grid: TimeGrid, n_paths: usize, master_seed: u64) -> Self {
        Self { theta, x0, g: None, phi, grid, n_paths, master_seed, allowance_rel: 0.01 }
    }

    pub fn with_g(mut self, label: &str, g: ScalarFn) -> Self {
        self.g = Some((String::from(label), g));
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(param_err!("theta must be positive, got {}", self.theta));
        }
        if !(self.x0 >= 0.0 && self.x0.is_finite()) {
            return Err(param_err!("x0 must be non-negative, got {}", self.x0));
        }
        if self.n_paths == 0 {
            return Err(param_err!("n_paths must be positive"));
        }
        if let Some((label, g)) = &self.g {
            for t in self.grid.nodes() {
                let v = g(t);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(param_err!("catalyst {label} must be non-negative and finite, got {v} at t = {t}"));
                }
            }
        }
        Ok(())
    }

    fn g_at(&self, t: f64) -> f64 {
        self.g.as_ref().map_or(0.0, |(_, g)| g(t))
    }

    /// The origin equation driven by the catalyst.
    pub fn problem(&self) -> Result<SieProblem> {
        let p =
            SieProblem::new(KernelSpec::fractional_heat(self.theta)?, DiffusionCoefficient::sqrt_positive(), self.x0);
        Ok(match &self.g {
            Some((label, g)) => p.with_g(label, g.clone()),
            None => p,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhsEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Evaluations of `√(V⁺)` at a negative `V`.
    pub clamp_count: usize,
    /// Evaluations of `√(V⁺)` in total over retained paths.
    pub evaluations: usize,
    /// Paths dropped after diverging.
    pub excluded: usize,
}

/// `E[exp(-⟨X_T, φ⟩)]` by Monte Carlo.
pub fn laplace_lhs_mc<R: PathRunner>(config: &DualityConfig, runner: &R) -> Result<LhsEstimate> {
    config.validate()?;
    let grid = config.grid;
    let n = grid.n_steps();
    let kernel = FracHeatKernel::new(config.theta)?;
    let c = kernel.c_theta();
    // S_{T - t_k} φ(0) for k < n
    let weights =
        (0..n).map(|k| kernel.semigroup_at_origin(grid.node(n - k), &config.phi)).collect::<Result<Vec<f64>>>()?;
    let drift_terms: Vec<f64> = (0..n).map(|k| weights[k] * config.g_at(grid.node(k)) / c * grid.dt()).collect();
    let deterministic = config.x0 * config.phi.mass() + pairwise_sum(&drift_terms);
    let scheme = SieScheme::new(&config.problem()?, grid)?;

    let results = runner.map_paths(config.n_paths, |i| {
        let path = sample_brownian_increments(grid, derive_path_seed(config.master_seed, i as u64));
        let v = match scheme.euler(&path) {
            Ok(v) => v,
            Err(e) => return Err(e),
        };
        let mut clamps = 0;
        let terms: Vec<f64> = (0..n)
            .map(|k| {
                let x = v.values[k];
                if x < 0.0 {
                    clamps += 1;
                }
                weights[k] * libm::sqrt(x.max(0.0)) * path.increments()[k]
            })
            .collect();
        let g = deterministic + pairwise_sum(&terms);
        Ok((libm::exp(-g), clamps))
    });

    let mut samples = Vec::with_capacity(results.len());
    let mut clamp_count = 0;
    let mut excluded = 0;
    for r in results {
        match r {
            Ok((s, cl)) => {
                samples.push(s);
                clamp_count += cl;
            }
            Err(Error::Diverged { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if excluded as f64 > MAX_EXCLUDED_FRACTION * config.n_paths as f64 {
        return Err(Error::ExclusionThreshold { excluded, total: config.n_paths });
    }
    let est = MeanEstimate::from_samples(&samples);
    Ok(LhsEstimate { mean: est.mean, stderr: est.stderr, clamp_count, evaluations: samples.len() * n, excluded })
}

/// `exp(-x0⟨1,U_T⟩ - ∫_0^T g(s)/c_θ · u(T-s, 0) ds)`.
pub fn laplace_rhs(config: &DualityConfig) -> Result<f64> {
    config.validate()?;
    let sol = solve_log_laplace(config.theta, &config.phi, config.grid)?;
    let c = FracHeatKernel::new(config.theta)?.c_theta();
    let g: Vec<f64> = config.grid.nodes().map(|t| config.g_at(t) / c).collect();
    Ok(libm::exp(-config.x0 * sol.final_mass() - sol.reversed_integral(&g)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub n_paths: usize,
    pub t_end: f64,
    pub n_steps: usize,
    pub clamp_count: usize,
    pub clamp_fraction: f64,
    pub excluded: usize,
    pub z_score: f64,
    /// `3·stderr + allowance_rel·rhs`.
    pub allowance: f64,
    pub within_band: bool,
}

pub fn duality_report<R: PathRunner>(config: &DualityConfig, runner: &R) -> Result<DualityReport> {
    let lhs = laplace_lhs_mc(config, runner)?;
    let rhs = laplace_rhs(config)?;
    let est = MeanEstimate { mean: lhs.mean, stderr: lhs.stderr, count: config.n_paths - lhs.excluded };
    let allowance = 3.0 * lhs.stderr + config.allowance_rel * rhs;
    Ok(DualityReport {
        lhs_mean: lhs.mean,
        lhs_stderr: lhs.stderr,
        rhs,
        n_paths: config.n_paths,
        t_end: config.grid.t_end(),
        n_steps: config.grid.n_steps(),
        clamp_count: lhs.clamp_count,
        clamp_fraction: if lhs.evaluations == 0 { 0.0 } else { lhs.clamp_count as f64 / lhs.evaluations as f64 },
        excluded: lhs.excluded,
        z_score: est.z_score(rhs),
        allowance,
        within_band: (lhs.mean - rhs).abs() < allowance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Sequential;
    use alloc::sync::Arc;

    fn base(x0: f64, n_paths: usize) -> DualityConfig {
        DualityConfig::new(
            2.0,
            x0,
            TestFunction::unit_bump(-1.0, 1.0).unwrap(),
            TimeGrid::new(0.5, 64).unwrap(),
            n_paths,
            11,
        )
    }

    #[test]
    fn trivial_configs_are_exact() {
        let r = duality_report(&base(0.0, 50), &Sequential).unwrap();
        assert_eq!(r.lhs_mean, 1.0);
        assert_eq!(r.lhs_stderr, 0.0);
        assert_eq!(r.rhs, 1.0);
        assert_eq!(r.z_score, 0.0);
        let mut cfg = base(1.0, 50);
        cfg.phi = TestFunction::zero(-1.0, 1.0).unwrap();
        let r = duality_report(&cfg, &Sequential).unwrap();
        assert_eq!((r.lhs_mean, r.rhs), (1.0, 1.0));
    }

    #[test]
    fn rhs_decreases_in_x0() {
        let v: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&x| laplace_rhs(&base(x, 1)).unwrap()).collect();
        assert!(v[0] > v[1] && v[1] > v[2] && v[2] > 0.0 && v[0] < 1.0, "{v:?}");
    }

    #[test]
    fn catalyst_lowers_rhs() {
        let plain = laplace_rhs(&base(1.0, 1)).unwrap();
        let cat = laplace_rhs(&base(1.0, 1).with_g("const:1", Arc::new(|_| 1.0))).unwrap();
        assert!(cat < plain);
    }

    #[test]
    fn small_run_in_unit_interval_and_reproducible() {
        let cfg = base(1.0, 400).with_g("const:0.5", Arc::new(|_| 0.5));
        let a = duality_report(&cfg, &Sequential).unwrap();
        let b = duality_report(&cfg, &Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.lhs_mean > 0.0 && a.lhs_mean <= 1.0);
        assert!((a.lhs_mean - a.rhs).abs() < 5.0 * a.lhs_stderr + 0.02, "{a:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(laplace_rhs(&base(-1.0, 1)).is_err());
        let cfg = base(1.0, 1).with_g("neg", Arc::new(|_| -1.0));
        assert!(laplace_lhs_mc(&cfg, &Sequential).is_err());
        assert!(matches!(laplace_lhs_mc(&base(1.0, 0), &Sequential), Err(Error::Parameter(_))));
    }
}
