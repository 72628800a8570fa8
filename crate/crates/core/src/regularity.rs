//! Empirical path regularity and Hölder-exponent bookkeeping.
//!
//! Variogram estimates: `γ(ℓ) = mean_k (X(t_{k+ℓ}) - X(t_k))²` over a
//! geometric set of lags, regressed in log-log coordinates against `ℓ·dt`;
//! the Hölder exponent is half the slope.

use alloc::vec::Vec;

use crate::error::{param_err, Error, Result};
use crate::kernels::check_sie_alpha;
use crate::noise::{derive_path_seed, sample_brownian_increments, TimeGrid};
use crate::sie::{SieProblem, SieScheme};
use crate::stats::{linear_fit, pairwise_sum, PathRunner};

/// Exponents within this distance of 0 or 1 are flagged as boundary values.
pub const BOUNDARY_MARGIN: f64 = 0.05;
/// Lags in a default geometric ladder.
pub const DEFAULT_LAG_COUNT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub r_squared: f64,
    /// Smallest and largest lag, in time units.
    pub lag_range: (f64, f64),
    pub n_lags: usize,
    /// Exponent within [`BOUNDARY_MARGIN`] of 0 or 1, where the variogram
    /// cannot resolve roughness (smooth or trend-dominated paths).
    pub boundary: bool,
    /// `(lag in steps, variogram)`.
    pub points: Vec<(usize, f64)>,
}

/// Distinct integer lags spaced geometrically from `lag_min` to `lag_max`.
pub fn geometric_lags(lag_min: usize, lag_max: usize, count: usize) -> Vec<usize> {
    let count = count.max(2);
    let ratio = lag_max as f64 / lag_min as f64;
    let mut out: Vec<usize> = (0..count)
        .map(|i| libm::round(lag_min as f64 * libm::pow(ratio, i as f64 / (count - 1) as f64)) as usize)
        .collect();
    out.dedup();
    out
}

fn check_lags(n_steps: usize, lag_min: usize, lag_max: usize) -> Result<()> {
    if lag_min == 0 || lag_min >= lag_max {
        return Err(param_err!("need 1 <= lag_min < lag_max, got {lag_min} and {lag_max}"));
    }
    if lag_max > n_steps / 4 {
        return Err(param_err!("lag_max {lag_max} exceeds a quarter of the {n_steps} steps"));
    }
    Ok(())
}

/// `mean_k |X(t_{k+ℓ}) - X(t_k)|^p` for each lag.
pub fn increment_moments(values: &[f64], lags: &[usize], p: u32) -> Vec<f64> {
    lags.iter()
        .map(|&l| {
            let terms: Vec<f64> = values.windows(l + 1).map(|w| powi_abs(w[l] - w[0], p)).collect();
            pairwise_sum(&terms) / terms.len() as f64
        })
        .collect()
}

fn powi_abs(x: f64, p: u32) -> f64 {
    let mut acc = 1.0;
    let a = x.abs();
    for _ in 0..p {
        acc *= a;
    }
    acc
}

/// Fits `log m(ℓ) = c + slope·log(ℓ dt)`; `None` if any moment vanishes.
fn fit_loglog(lags: &[usize], moments: &[f64], dt: f64) -> Option<crate::stats::LinearFit> {
    if moments.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return None;
    }
    let x: Vec<f64> = lags.iter().map(|&l| libm::log(l as f64 * dt)).collect();
    let y: Vec<f64> = moments.iter().map(|m| libm::log(*m)).collect();
    linear_fit(&x, &y)
}

fn estimate_from_variogram(lags: Vec<usize>, gammas: Vec<f64>, dt: f64) -> Result<HolderEstimate> {
    let fit = fit_loglog(&lags, &gammas, dt)
        .ok_or_else(|| Error::UndefinedEstimate("variogram vanishes at some lag (constant path?)".into()))?;
    let exponent = 0.5 * fit.slope;
    Ok(HolderEstimate {
        exponent,
        r_squared: fit.r_squared,
        lag_range: (lags[0] as f64 * dt, lags[lags.len() - 1] as f64 * dt),
        n_lags: lags.len(),
        boundary: exponent <= BOUNDARY_MARGIN || exponent >= 1.0 - BOUNDARY_MARGIN,
        points: lags.into_iter().zip(gammas).collect(),
    })
}

/// Variogram regression on one path.
pub fn holder_estimate(values: &[f64], grid: &TimeGrid, lag_min: usize, lag_max: usize) -> Result<HolderEstimate> {
    holder_estimate_paths(&[values], grid, lag_min, lag_max)
}

/// Variogram averaged over several paths on the same grid, then regressed.
pub fn holder_estimate_paths<V: AsRef<[f64]>>(
    paths: &[V],
    grid: &TimeGrid,
    lag_min: usize,
    lag_max: usize,
) -> Result<HolderEstimate> {
    check_lags(grid.n_steps(), lag_min, lag_max)?;
    if paths.is_empty() {
        return Err(param_err!("no paths supplied"));
    }
    for p in paths {
        let v = p.as_ref();
        if v.len() != grid.n_steps() + 1 {
            return Err(param_err!("path has {} values for a grid of {} steps", v.len(), grid.n_steps()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(param_err!("path contains non-finite values"));
        }
    }
    let lags = geometric_lags(lag_min, lag_max, DEFAULT_LAG_COUNT);
    let per_path: Vec<Vec<f64>> = paths.iter().map(|p| increment_moments(p.as_ref(), &lags, 2)).collect();
    let gammas = average_columns(&per_path, lags.len());
    estimate_from_variogram(lags, gammas, grid.dt())
}

fn average_columns(rows: &[Vec<f64>], width: usize) -> Vec<f64> {
    (0..width)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            pairwise_sum(&col) / col.len() as f64
        })
        .collect()
}

/// Decay fit of `E|Z(t') - Z(t)|^p` for the stochastic-convolution part.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementFit {
    pub p: u32,
    /// Fitted log-log slope of the `p`-th moment against the lag.
    pub exponent: f64,
    /// `(1/2 - α)p - 0.1`.
    pub threshold: f64,
    pub passed: bool,
    /// All increments vanished (e.g. `σ ≡ 0`); the check passes trivially.
    pub degenerate: bool,
    pub r_squared: f64,
    pub lags: Vec<usize>,
    pub moments: Vec<f64>,
}

/// Monte Carlo `E|Z(t_{k+ℓ}) - Z(t_k)|^p` on a lag ladder, `Z = X - h`,
/// averaged over `k` and paths; the fitted exponent must reach
/// `(1/2 - α)p - 0.1`.
pub fn moment_increment_check<R: PathRunner>(
    problem: &SieProblem,
    grid: TimeGrid,
    p: u32,
    n_paths: usize,
    master_seed: u64,
    runner: &R,
) -> Result<IncrementFit> {
    if p != 2 && p != 4 {
        return Err(param_err!("moment order p must be 2 or 4, got {p}"));
    }
    let alpha = problem.kernel.alpha().ok_or_else(|| param_err!("increment check needs a power-type kernel"))?;
    check_sie_alpha(alpha)?;
    if n_paths == 0 {
        return Err(param_err!("n_paths must be positive"));
    }
    let n = grid.n_steps();
    let lag_max = n / 8;
    if lag_max < 4 {
        return Err(param_err!("grid too coarse for the lag ladder: {n} steps"));
    }
    let lags = geometric_lags(2, lag_max, DEFAULT_LAG_COUNT);
    let scheme = SieScheme::new(problem, grid)?;
    let rows = runner.map_paths(n_paths, |i| -> Result<Vec<f64>> {
        let path = sample_brownian_increments(grid, derive_path_seed(master_seed, i as u64));
        let x = scheme.euler(&path)?;
        let z: Vec<f64> = x.values.iter().zip(scheme.h()).map(|(a, b)| a - b).collect();
        Ok(increment_moments(&z, &lags, p))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let moments = average_columns(&rows, lags.len());
    let threshold = (0.5 - alpha) * p as f64 - 0.1;
    if moments.iter().all(|m| *m == 0.0) {
        return Ok(IncrementFit {
            p,
            exponent: f64::INFINITY,
            threshold,
            passed: true,
            degenerate: true,
            r_squared: 1.0,
            lags,
            moments,
        });
    }
    let fit = fit_loglog(&lags, &moments, grid.dt())
        .ok_or_else(|| Error::UndefinedEstimate("increment moments vanish at some lags but not all".into()))?;
    Ok(IncrementFit {
        p,
        exponent: fit.slope,
        threshold,
        passed: fit.slope >= threshold,
        degenerate: false,
        r_squared: fit.r_squared,
        lags,
        moments,
    })
}

/// `1/(2(1-α))`, the smallest Hölder exponent of `σ` for pathwise uniqueness.
pub fn gamma_threshold(alpha: f64) -> f64 {
    1.0 / (2.0 * (1.0 - alpha))
}

/// `(1/2 - α)/(1 - γ) ∧ 1`, equal to 1 at `γ = 1`.
pub fn xi_limit(alpha: f64, gamma: f64) -> f64 {
    if gamma >= 1.0 {
        1.0
    } else {
        ((0.5 - alpha) / (1.0 - gamma)).min(1.0)
    }
}

/// Open window `(α/(2γ-1), (1/2-α)/(1-γ) ∧ 1)` of Hölder exponents `ξ`
/// from which the bootstrap argument starts.
pub fn xi_admissible_range(alpha: f64, gamma: f64) -> Result<(f64, f64)> {
    check_sie_alpha(alpha)?;
    if !(gamma <= 1.0) {
        return Err(param_err!("gamma must not exceed 1, got {gamma}"));
    }
    let thr = gamma_threshold(alpha);
    if !(gamma > thr) {
        return Err(param_err!("gamma = {gamma} violates gamma > 1/(2(1-alpha)) = {thr}"));
    }
    let lower = alpha / (2.0 * gamma - 1.0);
    let upper = xi_limit(alpha, gamma);
    if !(lower < upper) {
        return Err(param_err!("empty window ({lower}, {upper}) for alpha = {alpha}, gamma = {gamma}"));
    }
    Ok((lower, upper))
}

/// `ξ_{n+1} = [(ξ_n γ + 1/2 - α) ∧ 1](1 - 1/(n+3))`.
pub fn xi_improvement(xi: f64, alpha: f64, gamma: f64, n: usize) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(param_err!("xi must lie in (0, 1), got {xi}"));
    }
    check_sie_alpha(alpha)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(param_err!("gamma must lie in (0, 1], got {gamma}"));
    }
    Ok((xi * gamma + 0.5 - alpha).min(1.0) * (1.0 - 1.0 / (n as f64 + 3.0)))
}

/// `ξ_0 = (α/2)(1/2 - α)` followed by `steps` improvements.
pub fn xi_sequence(alpha: f64, gamma: f64, steps: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut xi = 0.5 * alpha * (0.5 - alpha);
    out.push(xi);
    for n in 0..steps {
        xi = xi_improvement(xi, alpha, gamma, n)?;
        out.push(xi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::sie::DiffusionCoefficient;
    use crate::stats::Sequential;

    #[test]
    fn lag_ladder() {
        let l = geometric_lags(1, 1024, 12);
        assert_eq!(l[0], 1);
        assert_eq!(*l.last().unwrap(), 1024);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(geometric_lags(2, 4, 12), [2, 3, 4]);
    }

    #[test]
    fn ramp_is_boundary() {
        let g = TimeGrid::new(1.0, 1024).unwrap();
        let v: Vec<f64> = g.nodes().collect();
        let e = holder_estimate(&v, &g, 1, 256).unwrap();
        assert!((e.exponent - 1.0).abs() < 1e-9);
        assert!(e.boundary);
        assert!((e.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_path_undefined() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let e = holder_estimate(&[3.0; 65], &g, 1, 16);
        assert!(matches!(e, Err(Error::UndefinedEstimate(_))));
        assert!(holder_estimate(&[3.0; 65], &g, 1, 17).is_err());
        assert!(holder_estimate(&[3.0; 64], &g, 1, 16).is_err());
    }

    #[test]
    fn brownian_variogram() {
        let g = TimeGrid::new(1.0, 1 << 14).unwrap();
        let paths: Vec<Vec<f64>> = (0..20).map(|i| sample_brownian_increments(g, 90 + i).cumulative()).collect();
        let e = holder_estimate_paths(&paths, &g, 1, 1 << 10).unwrap();
        assert!((e.exponent - 0.5).abs() < 0.05, "{e:?}");
        assert!(!e.boundary);
    }

    #[test]
    fn zero_sigma_increments_degenerate() {
        let p = SieProblem::new(KernelSpec::singular_power(0.25).unwrap(), DiffusionCoefficient::zero(), 1.0);
        let f = moment_increment_check(&p, TimeGrid::new(1.0, 256).unwrap(), 2, 4, 1, &Sequential).unwrap();
        assert!(f.degenerate && f.passed);
        assert!(moment_increment_check(&p, TimeGrid::new(1.0, 256).unwrap(), 3, 4, 1, &Sequential).is_err());
    }

    #[test]
    fn xi_window_examples() {
        let (lo, hi) = xi_admissible_range(0.25, 0.8).unwrap();
        assert!((lo - 0.25 / 0.6).abs() < 1e-15);
        assert_eq!(hi, 1.0);
        assert!(xi_admissible_range(0.25, 2.0 / 3.0).is_err());
        assert!(xi_admissible_range(0.25, 1.01).is_err());
        assert!(xi_admissible_range(0.5, 0.9).is_err());
        assert_eq!(xi_admissible_range(0.25, 1.0).unwrap().1, 1.0);
    }

    #[test]
    fn xi_sequence_rises_to_limit() {
        // the (1 - 1/(n+3)) factor makes the approach O(γ/((1-γ)n))
        for &(a, g, steps) in &[(0.25, 0.8, 200), (0.4, 0.9, 5000), (0.1, 0.6, 5000), (0.25, 1.0, 200)] {
            let s = xi_sequence(a, g, steps).unwrap();
            let lim = xi_limit(a, g);
            let last = *s.last().unwrap();
            assert!(last >= 0.99 * lim && last <= lim, "({a},{g}) {last} vs {lim}");
            for w in s.windows(2) {
                if lim - w[0] > 1e-9 {
                    assert!(w[1] > w[0]);
                }
            }
        }
        assert!(xi_improvement(0.0, 0.25, 0.8, 0).is_err());
        assert!(xi_improvement(1.0, 0.25, 0.8, 0).is_err());
    }
}
