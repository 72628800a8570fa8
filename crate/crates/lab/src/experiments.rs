//! Experiment orchestration. Each experiment fills unset parameters with its
//! defaults, echoes the completed set in every row, and returns report rows.

use serde_json::json;
use volterra_core::det_volterra::solve_linear_moment;
use volterra_core::duality::{duality_report, DualityConfig, MAX_EXCLUDED_FRACTION};
use volterra_core::kernels::KernelSpec;
use volterra_core::mollifiers::{verify_family, MollifierFamily, Rho};
use volterra_core::noise::{derive_path_seed, sample_brownian_increments, BrownianPath, TimeGrid};
use volterra_core::regularity::{
    gamma_threshold, holder_estimate, holder_estimate_paths, moment_increment_check, xi_admissible_range,
};
use volterra_core::sie::SieScheme;
use volterra_core::stats::{variance_estimate, MeanEstimate, PathRunner};
use volterra_core::{DiffusionCoefficient, Error as CoreError, SieProblem};

use crate::config::{Experiment, Params};
use crate::error::{param, LabResult};
use crate::presets;
use crate::report::{ReportRow, RowSink};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Fills every parameter the experiment reads and leaves explicit values alone.
pub fn with_defaults(exp: Experiment, p: &Params) -> Params {
    let mut d = p.clone();
    macro_rules! def {
        ($field:ident, $v:expr) => {
            if d.$field.is_none() {
                d.$field = Some($v);
            }
        };
    }
    def!(seed, DEFAULT_SEED);
    match exp {
        Experiment::Simulate => {
            def!(alpha, 0.25);
            def!(sigma, "const:1".into());
            def!(g, "zero".into());
            def!(x0, 0.0);
            def!(t_end, 1.0);
            def!(n_steps, 512);
            def!(n_paths, 1000);
        }
        Experiment::Picard => {
            def!(alpha, 0.25);
            def!(sigma, "linear".into());
            def!(x0, 1.0);
            def!(t_end, 1.0);
            def!(n_steps, 512);
            def!(tol, 1e-10);
            def!(max_iter, 60);
        }
        Experiment::DualityCheck => {
            def!(theta, 2.0);
            def!(x0, 1.0);
            def!(g, "zero".into());
            def!(phi, "bump:[-1,1]".into());
            def!(t_end, 0.5);
            def!(n_steps, 512);
            def!(n_paths, 100_000);
            def!(allowance, 0.01);
        }
        Experiment::MomentsCheck => {
            def!(alpha, 0.25);
            def!(sigma, "linear".into());
            def!(x0, 1.0);
            def!(t_end, 1.0);
            def!(n_steps, 512);
            def!(n_paths, 100_000);
        }
        Experiment::Holder => {
            def!(alpha, 0.25);
            def!(sigma, "const:1".into());
            def!(x0, 0.0);
            def!(t_end, 1.0);
            def!(n_steps, 16_384);
            def!(n_paths, 100);
            def!(lag_min, 4);
            def!(lag_max, 1024);
        }
        Experiment::YwCheck => {
            def!(n_check, 8);
            def!(edge_fraction, 0.1);
        }
        Experiment::PathwiseProbe => {
            def!(alpha, 0.25);
            def!(gamma, 0.8);
            def!(growth_c, 1.0);
            let sigma = format!("holder:{}:{}", d.gamma.unwrap(), d.growth_c.unwrap());
            def!(sigma, sigma);
            def!(x0, 1.0);
            def!(t_end, 1.0);
            def!(n_steps, 512);
            def!(n_rep, 32);
            def!(tol, 1e-10);
            let it = d.n_steps.unwrap() + 1;
            def!(max_iter, it);
        }
        Experiment::SmoothProbe => {
            def!(kappa, "two-plus-sin".into());
            def!(sigma, "sqrt".into());
            def!(x0, 1.0);
            def!(t_end, 1.0);
            def!(n_steps, 128);
            def!(refinements, 3);
            def!(n_rep, 8);
            def!(tol, 1e-12);
        }
        Experiment::Sweep => {
            def!(alpha_grid, vec![0.1, 0.25, 0.4]);
            def!(gamma_grid, vec![0.5, 0.7, 0.9]);
            def!(growth_c, 1.0);
            def!(x0, 1.0);
            def!(t_end, 1.0);
            def!(n_steps, 128);
            def!(n_rep, 4);
            def!(tol, 1e-10);
            def!(lag_min, 1);
            def!(lag_max, 32);
        }
    }
    d
}

pub fn run<R: PathRunner>(
    exp: Experiment,
    params: &Params,
    runner: &R,
    allow_subcritical: bool,
) -> LabResult<Vec<ReportRow>> {
    params.validate()?;
    let p = with_defaults(exp, params);
    let mut sink = RowSink::new(exp.name(), p.echo());
    match exp {
        Experiment::Simulate => simulate(&p, runner, &mut sink)?,
        Experiment::Picard => picard(&p, &mut sink)?,
        Experiment::DualityCheck => duality(&p, runner, &mut sink)?,
        Experiment::MomentsCheck => moments(&p, runner, &mut sink)?,
        Experiment::Holder => holder(&p, runner, &mut sink)?,
        Experiment::YwCheck => yw(&p, &mut sink)?,
        Experiment::PathwiseProbe => pathwise(&p, runner, allow_subcritical, &mut sink)?,
        Experiment::SmoothProbe => smooth(&p, runner, &mut sink)?,
        Experiment::Sweep => sweep(&p, runner, &mut sink)?,
    }
    Ok(sink.finish())
}

fn need<T: Clone>(v: &Option<T>, name: &str) -> LabResult<T> {
    v.clone().ok_or_else(|| param!("parameter {name} is required"))
}

fn grid(p: &Params) -> LabResult<TimeGrid> {
    Ok(TimeGrid::new(need(&p.t_end, "t_end")?, need(&p.n_steps, "n_steps")?)?)
}

/// kappa selects a smooth kernel, theta the fractional heat kernel, and
/// otherwise alpha the plain power kernel.
fn kernel(p: &Params) -> LabResult<KernelSpec> {
    if let Some(k) = &p.kappa {
        presets::kappa(k)
    } else if let Some(theta) = p.theta {
        Ok(KernelSpec::fractional_heat(theta)?)
    } else {
        Ok(KernelSpec::singular_power(need(&p.alpha, "alpha")?)?)
    }
}

fn problem(p: &Params) -> LabResult<SieProblem> {
    let sigma = presets::sigma(&need(&p.sigma, "sigma")?)?;
    let mut prob = SieProblem::new(kernel(p)?, sigma, need(&p.x0, "x0")?);
    if let Some(spec) = &p.g {
        if let Some(g) = presets::catalyst(spec)? {
            prob = prob.with_g(spec, g);
        }
    }
    Ok(prob)
}

fn path(grid: TimeGrid, seed: u64, i: usize) -> BrownianPath {
    sample_brownian_increments(grid, derive_path_seed(seed, i as u64))
}

/// Splits per-path results into kept values and a diverged count, failing
/// past the exclusion threshold.
fn keep_converged<T>(results: Vec<Result<T, CoreError>>) -> LabResult<(Vec<T>, usize)> {
    let total = results.len();
    let mut kept = Vec::with_capacity(total);
    let mut excluded = 0;
    for r in results {
        match r {
            Ok(v) => kept.push(v),
            Err(CoreError::Diverged { .. }) => excluded += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if excluded as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
        return Err(CoreError::ExclusionThreshold { excluded, total }.into());
    }
    Ok((kept, excluded))
}

fn checkpoints(n: usize, count: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (1..=count).map(|j| (j * n).div_ceil(count)).collect();
    ks.dedup();
    ks
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn simulate<R: PathRunner>(p: &Params, runner: &R, sink: &mut RowSink) -> LabResult<()> {
    let grid = grid(p)?;
    let scheme = SieScheme::new(&problem(p)?, grid)?;
    let seed = need(&p.seed, "seed")?;
    let ks = checkpoints(grid.n_steps(), 4);
    let results = runner.map_paths(need(&p.n_paths, "n_paths")?, |i| {
        scheme.euler(&path(grid, seed, i)).map(|x| ks.iter().map(|&k| x.values[k]).collect::<Vec<f64>>())
    });
    let (rows, excluded) = keep_converged(results)?;
    for (j, &k) in ks.iter().enumerate() {
        let t = grid.node(k);
        let xs = column(&rows, j);
        let m = MeanEstimate::from_samples(&xs);
        sink.push(format!("mean_x(t={t})"), m.mean, Some(m.stderr), None);
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let m2 = MeanEstimate::from_samples(&sq);
        sink.push(format!("second_moment(t={t})"), m2.mean, Some(m2.stderr), None);
    }
    sink.value("excluded_paths", excluded as f64);
    Ok(())
}

fn picard(p: &Params, sink: &mut RowSink) -> LabResult<()> {
    let grid = grid(p)?;
    let scheme = SieScheme::new(&problem(p)?, grid)?;
    let tol = need(&p.tol, "tol")?;
    let r = scheme.picard(&path(grid, need(&p.seed, "seed")?, 0), need(&p.max_iter, "max_iter")?, tol, None)?;
    for (i, g) in r.sup_gaps.iter().enumerate() {
        sink.value(format!("sup_gap(iter={})", i + 1), *g);
    }
    sink.value("n_iterations", r.n_iterations as f64);
    sink.push("converged", if r.converged { 1.0 } else { 0.0 }, None, Some(r.converged));
    if r.heuristic {
        sink.value("heuristic_non_lipschitz", 1.0);
    }
    Ok(())
}

fn duality<R: PathRunner>(p: &Params, runner: &R, sink: &mut RowSink) -> LabResult<()> {
    let mut cfg = DualityConfig::new(
        need(&p.theta, "theta")?,
        need(&p.x0, "x0")?,
        presets::phi(&need(&p.phi, "phi")?)?,
        grid(p)?,
        need(&p.n_paths, "n_paths")?,
        need(&p.seed, "seed")?,
    );
    cfg.allowance_rel = need(&p.allowance, "allowance")?;
    let g_spec = need(&p.g, "g")?;
    if let Some(g) = presets::catalyst(&g_spec)? {
        cfg = cfg.with_g(&g_spec, g);
    }
    let r = duality_report(&cfg, runner)?;
    sink.push("lhs_mean", r.lhs_mean, Some(r.lhs_stderr), None);
    sink.value("rhs", r.rhs);
    sink.push("abs_diff", (r.lhs_mean - r.rhs).abs(), None, Some(r.within_band));
    sink.value("allowance", r.allowance);
    sink.value("z_score", r.z_score);
    sink.push("clamp_fraction", r.clamp_fraction, None, Some(r.clamp_fraction < 0.01));
    sink.value("excluded_paths", r.excluded as f64);
    Ok(())
}

fn moments<R: PathRunner>(p: &Params, runner: &R, sink: &mut RowSink) -> LabResult<()> {
    let grid = grid(p)?;
    let prob = problem(p)?;
    let scheme = SieScheme::new(&prob, grid)?;
    let seed = need(&p.seed, "seed")?;
    let n_paths = need(&p.n_paths, "n_paths")?;
    let sigma = need(&p.sigma, "sigma")?;
    let n = grid.n_steps();

    if sigma == "linear" {
        let oracle = solve_linear_moment(&prob, grid)?;
        let ks = checkpoints(n, 8);
        let results = runner.map_paths(n_paths, |i| {
            scheme.euler(&path(grid, seed, i)).map(|x| ks.iter().map(|&k| x.values[k] * x.values[k]).collect())
        });
        let (rows, excluded) = keep_converged::<Vec<f64>>(results)?;
        for (j, &k) in ks.iter().enumerate() {
            let est = MeanEstimate::from_samples(&column(&rows, j));
            let target = oracle.m[k];
            sink.push(
                format!("second_moment(t={})", grid.node(k)),
                est.mean,
                Some(est.stderr),
                Some(est.z_score(target).abs() < 3.0),
            );
            sink.value(format!("oracle(t={})", grid.node(k)), target);
        }
        sink.value("excluded_paths", excluded as f64);
        let fine = solve_linear_moment(&prob, TimeGrid::new(grid.t_end(), 2 * n)?)?;
        let rel = (1..=n).map(|k| ((oracle.m[k] - fine.m[2 * k]) / fine.m[2 * k]).abs()).fold(0.0, f64::max);
        sink.push(format!("oracle_self_convergence({n}_vs_{})", 2 * n), rel, None, Some(rel < 0.01));
        return Ok(());
    }

    let c = match sigma.strip_prefix("const:") {
        Some(c) => c.parse::<f64>().map_err(|_| param!("sigma preset {sigma:?}: cannot read constant"))?,
        None => return Err(param!("moments-check supports sigma=linear or sigma=const:c, got {sigma:?}")),
    };
    let alpha = prob.kernel.alpha().ok_or_else(|| param!("moments-check needs a power-type kernel"))?;
    let scale = prob.kernel.noise_scale() * c;
    let mut ks = vec![n.div_ceil(4), n.div_ceil(2), n];
    ks.dedup();
    let results = runner
        .map_paths(n_paths, |i| scheme.euler(&path(grid, seed, i)).map(|x| ks.iter().map(|&k| x.values[k]).collect()));
    let (rows, excluded) = keep_converged::<Vec<f64>>(results)?;
    for (j, &k) in ks.iter().enumerate() {
        let t = grid.node(k);
        let est = variance_estimate(&column(&rows, j));
        let q = 1.0 - 2.0 * alpha;
        let target = scale * scale * t.powf(q) / q;
        sink.push(format!("variance(t={t})"), est.mean, Some(est.stderr), Some(est.z_score(target).abs() < 3.0));
        sink.value(format!("oracle(t={t})"), target);
    }
    sink.value("excluded_paths", excluded as f64);
    Ok(())
}

fn holder<R: PathRunner>(p: &Params, runner: &R, sink: &mut RowSink) -> LabResult<()> {
    let grid = grid(p)?;
    let prob = problem(p)?;
    let scheme = SieScheme::new(&prob, grid)?;
    let seed = need(&p.seed, "seed")?;
    let results =
        runner.map_paths(need(&p.n_paths, "n_paths")?, |i| scheme.euler(&path(grid, seed, i)).map(|x| x.values));
    let (paths, excluded) = keep_converged(results)?;
    let est = holder_estimate_paths(&paths, &grid, need(&p.lag_min, "lag_min")?, need(&p.lag_max, "lag_max")?)?;
    for (lag, v) in &est.points {
        sink.value(format!("variogram(lag={lag})"), *v);
    }
    let target = prob.kernel.alpha().map(|a| 0.5 - a);
    sink.push("holder_exponent", est.exponent, None, target.map(|t| (est.exponent - t).abs() < 0.05));
    if let Some(t) = target {
        sink.value("target_exponent", t);
    }
    sink.value("r_squared", est.r_squared);
    sink.value("boundary", if est.boundary { 1.0 } else { 0.0 });
    sink.value("excluded_paths", excluded as f64);
    if let Some(order) = p.p {
        let fit = moment_increment_check(&prob, grid, order, need(&p.n_paths, "n_paths")?, seed, runner)?;
        sink.push(format!("increment_exponent(p={order})"), fit.exponent, None, Some(fit.passed));
        sink.value(format!("increment_threshold(p={order})"), fit.threshold);
    }
    Ok(())
}

fn yw(p: &Params, sink: &mut RowSink) -> LabResult<()> {
    let n_check = need(&p.n_check, "n_check")?;
    let family = MollifierFamily::with_options(Rho::Sqrt, n_check, need(&p.edge_fraction, "edge_fraction")?, 2)?;
    let report = verify_family(&family, n_check)?;
    for c in &report.checks {
        sink.push(format!("{}(n={})", c.name, c.n), c.measured, None, Some(c.passed));
    }
    sink.push("all_checks", report.checks.len() as f64, None, Some(report.all_passed()));
    Ok(())
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Shared-noise Picard runs started from `h` and from `h + 1`.
fn two_init_gap(scheme: &SieScheme, path: &BrownianPath, max_iter: usize, tol: f64) -> Result<f64, CoreError> {
    let a = scheme.picard(path, max_iter, tol, None)?;
    let shifted: Vec<f64> = scheme.h().iter().map(|h| h + 1.0).collect();
    let b = scheme.picard(path, max_iter, tol, Some(&shifted))?;
    Ok(sup_gap(&a.path.values, &b.path.values))
}

struct ProbeResult {
    gaps: Vec<f64>,
    refinement: Vec<f64>,
    /// Euler solution of the first replicate on the coarse grid.
    first_path: Vec<f64>,
}

/// Per replicate: a `2n`-step path summed down to `n` steps, the two-init
/// Picard gap on the coarse grid and the coarse-vs-fine Euler gap.
fn probe<R: PathRunner>(prob: &SieProblem, p: &Params, runner: &R) -> LabResult<ProbeResult> {
    let coarse = grid(p)?;
    let fine = TimeGrid::new(coarse.t_end(), 2 * coarse.n_steps())?;
    let s_coarse = SieScheme::new(prob, coarse)?;
    let s_fine = SieScheme::new(prob, fine)?;
    let seed = need(&p.seed, "seed")?;
    let tol = need(&p.tol, "tol")?;
    let max_iter = p.max_iter.unwrap_or(coarse.n_steps() + 1);
    let results = runner.map_paths(need(&p.n_rep, "n_rep")?, |i| -> Result<(f64, f64, Vec<f64>), CoreError> {
        let wf = path(fine, seed, i);
        let wc = wf.coarsen(2)?;
        let gap = two_init_gap(&s_coarse, &wc, max_iter, tol)?;
        let xc = s_coarse.euler(&wc)?;
        let xf = s_fine.euler(&wf)?;
        let refine = xc.values.iter().enumerate().map(|(k, v)| (v - xf.values[2 * k]).abs()).fold(0.0, f64::max);
        Ok((gap, refine, xc.values))
    });
    let mut out = ProbeResult { gaps: Vec::new(), refinement: Vec::new(), first_path: Vec::new() };
    for (i, r) in results.into_iter().enumerate() {
        let (g, r, x) = r?;
        out.gaps.push(g);
        out.refinement.push(r);
        if i == 0 {
            out.first_path = x;
        }
    }
    Ok(out)
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

fn subcritical_guard(alpha: f64, gamma: f64, allow: bool) -> LabResult<()> {
    let thr = gamma_threshold(alpha);
    if gamma <= thr && !allow {
        return Err(param!(
            "gamma = {gamma} is not above the uniqueness threshold 1/(2(1-alpha)) = {thr} for alpha = {alpha}; \
             pass --allow-subcritical to run anyway"
        ));
    }
    Ok(())
}

fn pathwise<R: PathRunner>(p: &Params, runner: &R, allow: bool, sink: &mut RowSink) -> LabResult<()> {
    let prob = problem(p)?;
    let alpha = prob.kernel.alpha().ok_or_else(|| param!("pathwise-probe needs a power-type kernel"))?;
    subcritical_guard(alpha, prob.sigma.gamma(), allow)?;
    let r = probe(&prob, p, runner)?;
    let tol = need(&p.tol, "tol")?;
    for (i, g) in r.gaps.iter().enumerate() {
        sink.value(format!("two_init_gap(rep={i})"), *g);
    }
    let gmax = max(&r.gaps);
    let pass = prob.sigma.is_lipschitz().then_some(gmax < 10.0 * tol);
    sink.push("two_init_gap_max", gmax, None, pass);
    let refine = MeanEstimate::from_samples(&r.refinement);
    sink.push("refinement_gap_mean", refine.mean, Some(refine.stderr), None);
    sink.value("refinement_gap_max", max(&r.refinement));
    Ok(())
}

fn smooth<R: PathRunner>(p: &Params, runner: &R, sink: &mut RowSink) -> LabResult<()> {
    let prob = problem(p)?;
    let base = grid(p)?;
    let levels = need(&p.refinements, "refinements")?;
    let n_rep = need(&p.n_rep, "n_rep")?;
    let tol = need(&p.tol, "tol")?;
    let seed = need(&p.seed, "seed")?;
    let finest = TimeGrid::new(base.t_end(), base.n_steps() << levels)?;
    let schemes = (0..=levels)
        .map(|r| SieScheme::new(&prob, TimeGrid::new(base.t_end(), base.n_steps() << r)?))
        .collect::<Result<Vec<_>, CoreError>>()?;

    // per replicate and level: (two-init gap, Euler path)
    let results = runner.map_paths(n_rep, |i| -> Result<Vec<(f64, Vec<f64>)>, CoreError> {
        let wf = path(finest, seed, i);
        (0..=levels)
            .map(|r| {
                let w = wf.coarsen(1 << (levels - r))?;
                let s = &schemes[r];
                let max_iter = p.max_iter.unwrap_or(s.grid().n_steps() + 1);
                Ok((two_init_gap(s, &w, max_iter, tol)?, s.euler(&w)?.values))
            })
            .collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>, CoreError>>()?;

    let mut gap_max = Vec::new();
    for r in 0..=levels {
        let n = base.n_steps() << r;
        let g: Vec<f64> = results.iter().map(|rep| rep[r].0).collect();
        gap_max.push(max(&g));
        sink.value(format!("two_init_gap_max(n={n})"), max(&g));
        if r > 0 {
            let d: Vec<f64> = results
                .iter()
                .map(|rep| {
                    rep[r - 1].1.iter().enumerate().map(|(k, v)| (v - rep[r].1[2 * k]).abs()).fold(0.0, f64::max)
                })
                .collect();
            let e = MeanEstimate::from_samples(&d);
            sink.push(format!("refinement_gap_mean(n={}_vs_{n})", n / 2), e.mean, Some(e.stderr), None);
        }
    }
    let noise = 10.0 * tol;
    let trend = gap_max.windows(2).all(|w| w[1] <= w[0].max(noise));
    sink.push("two_init_gap_trend", gap_max.last().copied().unwrap_or(0.0), None, Some(trend));

    let control = SieProblem::new(presets::kappa("one")?, DiffusionCoefficient::linear(), need(&p.x0, "x0")?);
    let cs = SieScheme::new(&control, base)?;
    let gaps = runner.map_paths(n_rep, |i| {
        let w = path(finest, seed, i).coarsen(1 << levels)?;
        two_init_gap(&cs, &w, p.max_iter.unwrap_or(base.n_steps() + 1), tol)
    });
    let gaps = gaps.into_iter().collect::<Result<Vec<_>, CoreError>>()?;
    let cmax = max(&gaps);
    sink.push("control_gap_max(kappa=one,sigma=linear)", cmax, None, Some(cmax < noise));
    Ok(())
}

fn sweep<R: PathRunner>(p: &Params, runner: &R, sink: &mut RowSink) -> LabResult<()> {
    let alphas = need(&p.alpha_grid, "alpha_grid")?;
    let gammas = need(&p.gamma_grid, "gamma_grid")?;
    if alphas.is_empty() || gammas.is_empty() {
        return Err(param!("alpha_grid and gamma_grid must be non-empty"));
    }
    for &g in &gammas {
        if !(g > 0.0 && g <= 1.0) {
            return Err(param!("gamma grid values must lie in (0, 1], got {g}"));
        }
    }
    let growth_c = need(&p.growth_c, "growth_c")?;
    let grid = grid(p)?;
    let (lag_min, lag_max) = (need(&p.lag_min, "lag_min")?, need(&p.lag_max, "lag_max")?);
    for &alpha in &alphas {
        for &gamma in &gammas {
            let mut cell = p.clone();
            cell.alpha = Some(alpha);
            cell.gamma = Some(gamma);
            cell.sigma = Some(format!("holder:{gamma}:{growth_c}"));
            cell.kappa = None;
            cell.theta = None;
            let prob = problem(&cell)?;
            let r = probe(&prob, &cell, runner)?;
            let gmax = max(&r.gaps);
            let thr = gamma_threshold(alpha);
            let subcritical = gamma <= thr;
            let xi = if subcritical { None } else { xi_admissible_range(alpha, gamma).ok() };
            let est = holder_estimate(&r.first_path, &grid, lag_min, lag_max);
            let echo = json!({
                "alpha": alpha,
                "gamma": gamma,
                "gamma_threshold": thr,
                "subcritical": subcritical,
                "xi_lower": xi.map(|x| x.0),
                "xi_upper": xi.map(|x| x.1),
                "holder_exponent": est.as_ref().ok().map(|e| e.exponent),
                "refinement_gap_max": max(&r.refinement),
                "n_steps": grid.n_steps(),
                "n_rep": cell.n_rep,
                "seed": cell.seed,
                "tol": cell.tol,
            });
            let metric = if subcritical { "SUBCRITICAL" } else { "two_init_gap_max" };
            sink.push_with_echo(echo.to_string(), metric, gmax, None);
        }
    }
    Ok(())
}
