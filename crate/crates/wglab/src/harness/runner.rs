//! Check implementations and the parallel runner.
//!
//! Every check draws its randomness from a stream seeded by the config seed
//! and the check's own name, so results do not depend on scheduling; a check
//! failure (including a panic) is captured as a failed result, never an
//! abort of the run.

use super::config::{OrientationConfig, RunConfig, SpaceConfig, W2Config};
use super::report::{CheckResult, CheckStatus, RunReport};
use super::HarnessError;
use crate::decomposition::{
    affine_deviation, build_w2_from_monotone, cd_pointwise_residual, cd_reduced_residual,
    class_constant_drift, level_speed_profile, require_profile, DecompositionSample, LevelWindow,
    MonotoneSense,
};
use crate::distortion::{ode_residual, sigma, tau};
use crate::num::{stream_seed, Point};
use crate::ot::{check_cyclical_monotonicity, half_sq_cost, solve_ot, DiscreteMeasure, OtError};
use crate::potential::{
    affinity_defect, check_assumptions, level_identity_defect, min_level_decrement,
    SampledPotential,
};
use crate::scenario::{Scenario, ScenarioError};
use crate::spaces::GeodesicSegment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::panic::AssertUnwindSafe;
use std::time::Instant;

/// Every check the harness knows, in report order.
pub const CHECK_NAMES: [&str; 14] = [
    "coefficients",
    "endpoint-coupling",
    "cycle-monotonicity",
    "evolution-identity",
    "hopf-lax-doubling",
    "lambda-cross",
    "lambda-affine",
    "orientation",
    "crossing",
    "decomposition-drift",
    "decomposition-mc",
    "curvature-pointwise",
    "curvature-reduced",
    "w2-affine",
];

struct Ctx<'a> {
    sc: &'a Scenario,
    cfg: &'a RunConfig,
    t_grid: &'a [f64],
}

struct Outcome {
    status: CheckStatus,
    worst: Option<f64>,
    tolerance: Option<f64>,
    notes: Vec<String>,
}

impl Outcome {
    fn skip(reason: impl Into<String>) -> Self {
        Self {
            status: CheckStatus::Skip,
            worst: None,
            tolerance: None,
            notes: vec![reason.into()],
        }
    }

    fn fail_with(note: impl Into<String>) -> Self {
        Self {
            status: CheckStatus::Fail,
            worst: None,
            tolerance: None,
            notes: vec![note.into()],
        }
    }
}

/// Build the scenario a config describes, including a curvature override.
pub fn build_scenario(cfg: &RunConfig) -> Result<Scenario, HarnessError> {
    let sc = match &cfg.space {
        SpaceConfig::Translation { v, lo, hi, per_side } => {
            Scenario::translation(*v, *lo, *hi, *per_side)?
        }
        SpaceConfig::Dilation {
            alpha,
            r_lo,
            r_hi,
            n_radii,
            n_angles,
        } => Scenario::dilation(*alpha, *r_lo, *r_hi, *n_radii, *n_angles)?,
        SpaceConfig::RadialToPoint {
            r_lo,
            r_hi,
            n_radii,
            n_angles,
        } => Scenario::radial_to_point(*r_lo, *r_hi, *n_radii, *n_angles)?,
        SpaceConfig::IntervalSinPower { exponent, mu, nu, n } => {
            Scenario::interval_sin_power(*exponent, (mu[0], mu[1]), (nu[0], nu[1]), *n)?
        }
        SpaceConfig::IntervalCone { exponent, mu, nu, n } => {
            Scenario::interval_cone(*exponent, (mu[0], mu[1]), (nu[0], nu[1]), *n)?
        }
        SpaceConfig::CrossedLevels => Scenario::crossed_levels(),
    };
    match &cfg.curvature {
        Some(c) => {
            let p = crate::distortion::DistortionParams::new(c.k, c.n)?;
            Ok(sc.with_params(p))
        }
        None => Ok(sc),
    }
}

/// The time grid a run uses: the config's, or the scenario default.
pub fn resolve_t_grid(cfg: &RunConfig, sc: &Scenario) -> Result<Vec<f64>, HarnessError> {
    let grid = match &cfg.grids.t_grid {
        Some(g) => g.clone(),
        None => sc.default_t_grid(),
    };
    if grid.len() < 2 {
        return Err(HarnessError::Config("t_grid needs at least 2 times".into()));
    }
    for w in grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(HarnessError::Config(
                "t_grid must be strictly increasing".into(),
            ));
        }
    }
    let (lo, hi) = (grid[0], *grid.last().unwrap());
    if !(lo >= 0.0 && hi <= 1.0) {
        return Err(HarnessError::Config("t_grid must lie in [0, 1]".into()));
    }
    if sc.is_collapse() && hi >= 1.0 {
        return Err(HarnessError::Config(
            "a collapse scenario degenerates at t = 1; keep the grid below it".into(),
        ));
    }
    Ok(grid)
}

/// The checks a config selects, in canonical order. Unknown names error.
pub fn selected_checks(cfg: &RunConfig) -> Result<Vec<&'static str>, HarnessError> {
    if cfg.checks.is_empty() {
        return Ok(CHECK_NAMES.to_vec());
    }
    for name in &cfg.checks {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(HarnessError::Config(format!(
                "unknown check {name:?}; valid names: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    Ok(CHECK_NAMES
        .iter()
        .copied()
        .filter(|n| cfg.checks.iter().any(|c| c == n))
        .collect())
}

/// Run all selected checks and assemble the report. `jobs = 0` lets the
/// thread pool pick its own width; the report bytes do not depend on it.
pub fn run_config(cfg: &RunConfig, jobs: usize) -> Result<RunReport, HarnessError> {
    let sc = build_scenario(cfg)?;
    let t_grid = resolve_t_grid(cfg, &sc)?;
    let names = selected_checks(cfg)?;
    let ctx = Ctx {
        sc: &sc,
        cfg,
        t_grid: &t_grid,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let results: Vec<CheckResult> =
        pool.install(|| names.par_iter().map(|n| run_one(n, &ctx)).collect());
    Ok(RunReport::new(
        cfg.name.clone(),
        sc.name.clone(),
        cfg.grids.seed,
        results,
    ))
}

fn run_one(name: &str, ctx: &Ctx) -> CheckResult {
    let start = Instant::now();
    let out = std::panic::catch_unwind(AssertUnwindSafe(|| dispatch(name, ctx))).unwrap_or_else(
        |payload| {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "opaque panic payload".into());
            Outcome::fail_with(format!("check panicked: {msg}"))
        },
    );
    CheckResult {
        name: name.to_string(),
        status: out.status,
        worst: out.worst,
        tolerance: out.tolerance,
        notes: out.notes,
        elapsed: start.elapsed(),
    }
}

fn dispatch(name: &str, ctx: &Ctx) -> Outcome {
    match name {
        "coefficients" => c_coefficients(ctx),
        "endpoint-coupling" => c_endpoint_coupling(ctx),
        "cycle-monotonicity" => c_cycle_monotonicity(ctx),
        "evolution-identity" => c_evolution_identity(ctx),
        "hopf-lax-doubling" => c_hopf_lax_doubling(ctx),
        "lambda-cross" => c_lambda_cross(ctx),
        "lambda-affine" => c_lambda_affine(ctx),
        "orientation" => c_orientation(ctx),
        "crossing" => c_crossing(ctx),
        "decomposition-drift" => c_decomposition_drift(ctx),
        "decomposition-mc" => c_decomposition_mc(ctx),
        "curvature-pointwise" => c_curvature_pointwise(ctx),
        "curvature-reduced" => c_curvature_reduced(ctx),
        "w2-affine" => c_w2_affine(ctx),
        other => Outcome::fail_with(format!("no implementation for check {other:?}")),
    }
}

/// Evenly strided subset of `0..len`, at most `cap` long, always nonempty
/// for nonempty input.
fn subsample(len: usize, cap: usize) -> Vec<usize> {
    if len <= cap {
        return (0..len).collect();
    }
    let stride = len.div_ceil(cap);
    (0..len).step_by(stride).collect()
}

fn interior_times(grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .copied()
        .filter(|&t| t > 1e-9 && t < 1.0 - 1e-9)
        .collect()
}

fn seed_for(ctx: &Ctx, label: &str) -> u64 {
    stream_seed(ctx.cfg.grids.seed, label)
}

// --- individual checks -----------------------------------------------------

/// Coefficient sanity on the run's curvature parameters: the flat case
/// degenerates to the exact linear law, and the general case satisfies the
/// defining second-order equation at second-order accuracy.
fn c_coefficients(ctx: &Ctx) -> Outcome {
    let p = ctx.sc.params;
    let mut notes = Vec::new();

    if p.k == 0.0 {
        let mut worst_flat = 0.0f64;
        for &t in &interior_times(ctx.t_grid) {
            match tau(p, t, 1.7) {
                Ok(v) => worst_flat = worst_flat.max((v.to_f64() - t).abs()),
                Err(e) => return Outcome::fail_with(format!("coefficient evaluation: {e}")),
            }
        }
        if worst_flat > 1e-12 {
            return Outcome {
                status: CheckStatus::Fail,
                worst: Some(worst_flat),
                tolerance: Some(1e-12),
                notes: vec!["flat-case coefficients must equal t exactly".into()],
            };
        }
        notes.push(format!("flat-case linearity defect {worst_flat:.3e} (<= 1e-12)"));
    }

    // defining-equation residual at a step small enough for the quadratic
    // truncation to sit far below the pass threshold
    let theta_crit = if p.k > 0.0 {
        (p.n * std::f64::consts::PI * std::f64::consts::PI / p.k).sqrt()
    } else {
        f64::INFINITY
    };
    let thetas: Vec<f64> = [0.3, 1.1, 2.3]
        .into_iter()
        .filter(|&th| th < 0.9 * theta_crit)
        .collect();
    let mut worst_ode = 0.0f64;
    for &th in &thetas {
        match ode_residual(p, th, 1e-4) {
            Ok(r) => worst_ode = worst_ode.max(r),
            Err(e) => return Outcome::fail_with(format!("defining-equation residual: {e}")),
        }
    }
    notes.push(format!(
        "defining-equation residual {worst_ode:.3e} over thetas {thetas:?}"
    ));

    // the residual is a second-order quantity: halving the step must shrink
    // it by about 4 (only measurable away from the flat case, where the
    // residual is pure roundoff)
    let mut ratio_ok = true;
    if p.k != 0.0 {
        let th = 1.1f64.min(0.8 * theta_crit);
        let coarse = ode_residual(p, th, 1e-2);
        let fine = ode_residual(p, th, 5e-3);
        match (coarse, fine) {
            (Ok(c), Ok(f)) if f > 0.0 => {
                let ratio = c / f;
                ratio_ok = (3.2..=4.8).contains(&ratio);
                notes.push(format!("step-halving residual ratio {ratio:.3} (want 3.2..4.8)"));
            }
            _ => {
                ratio_ok = false;
                notes.push("step-halving ratio unavailable".into());
            }
        }
    }

    // the finiteness threshold must bite exactly where it is defined to
    if p.k > 0.0 {
        let just_over = sigma(p, 0.5, 1.01 * theta_crit).map(|v| v.is_infinite());
        let just_under = sigma(p, 0.5, 0.99 * theta_crit).map(|v| v.is_infinite());
        match (just_over, just_under) {
            (Ok(true), Ok(false)) => {
                notes.push("finiteness threshold located correctly".into())
            }
            _ => return Outcome::fail_with("finiteness threshold misplaced".to_string()),
        }
    }

    Outcome {
        status: if worst_ode <= 1e-6 && ratio_ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst: Some(worst_ode),
        tolerance: Some(1e-6),
        notes,
    }
}

/// The endpoint coupling carries full optimality certificates.
fn c_endpoint_coupling(ctx: &Ctx) -> Outcome {
    let c = match ctx.sc.discrete_coupling() {
        Ok(c) => c,
        Err(ScenarioError::Unsupported(_)) => {
            return Outcome::fail_with(
                "scenario refuses to expose a coupling; its plan is not a certifiable transport",
            )
        }
        Err(e) => return Outcome::fail_with(format!("coupling construction: {e}")),
    };
    let gap = c.duality_gap();
    let marginal = c.marginal_error();
    let feas = c.max_feasibility_violation(half_sq_cost);
    let slack = c.max_slackness_defect(half_sq_cost);
    let worst = gap.abs().max(marginal).max(feas.max(0.0)).max(slack);
    Outcome {
        status: if worst <= 1e-9 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst: Some(worst),
        tolerance: Some(1e-9),
        notes: vec![format!(
            "gap {gap:.3e}, marginals {marginal:.3e}, feasibility {feas:.3e}, slackness {slack:.3e}, cost {:.12e}",
            c.cost_total
        )],
    }
}

/// The plan's support admits no improving reroute over short cycles.
fn c_cycle_monotonicity(ctx: &Ctx) -> Outcome {
    let pairs = ctx.sc.plan_pairs();
    let budget = ctx.cfg.grids.budget;
    for max_cycle in [3usize, 2] {
        match check_cyclical_monotonicity(&pairs, half_sq_cost, max_cycle, budget) {
            Ok(cert) => {
                let mut notes = vec![format!(
                    "cycles up to length {max_cycle}, {} checked",
                    cert.cycles_checked
                )];
                if let Some(w) = &cert.witness {
                    notes.push(format!("improving cycle through support indices {w:?}"));
                }
                return Outcome {
                    status: if cert.is_monotone(1e-9) {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    },
                    worst: Some(cert.worst_margin),
                    tolerance: Some(1e-9),
                    notes,
                };
            }
            Err(OtError::BudgetExceeded { .. }) => continue,
            Err(e) => return Outcome::fail_with(format!("cycle enumeration: {e}")),
        }
    }
    Outcome::skip("budget too small even for 2-cycles")
}

/// Along every ray the extended level is conserved in time, the potential
/// interpolates its endpoint values affinely, and the level strictly
/// decreases along the ray; the family-wide hypotheses hold at mid-time.
fn c_evolution_identity(ctx: &Ctx) -> Outcome {
    let pot = match ctx.sc.potential() {
        Some(p) => p,
        None => return Outcome::skip("scenario has no generating potential"),
    };
    let rays = subsample(ctx.sc.plan.rays.len(), ctx.cfg.grids.n_quantiles);
    let mut worst = 0.0f64;
    let mut min_dec = f64::INFINITY;
    let taus: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let mid = ctx.t_grid[ctx.t_grid.len() / 2];
    // a full collapse has a singular potential at t = 1, so its affinity is
    // certified against the on-grid affine fit instead of the endpoint anchor
    let collapse = ctx.sc.is_collapse();
    for &ri in &rays {
        let ray = &ctx.sc.plan.rays[ri].0;
        for &t in ctx.t_grid {
            let mut defects = vec![level_identity_defect(pot.as_ref(), ray, t)];
            if !collapse {
                defects.push(affinity_defect(pot.as_ref(), ray, t));
            }
            for d in defects {
                if !d.is_finite() {
                    return Outcome::fail_with(format!(
                        "non-finite defect on ray {ri} at t = {t}"
                    ));
                }
                worst = worst.max(d.abs());
            }
        }
        if collapse {
            let vals: Vec<f64> = ctx
                .t_grid
                .iter()
                .map(|&t| pot.phi(t, &ray.at(t)))
                .collect();
            match affine_deviation(ctx.t_grid, &vals) {
                Ok(rep) => worst = worst.max(rep.max_deviation),
                Err(e) => return Outcome::fail_with(format!("affine fit: {e}")),
            }
        }
        min_dec = min_dec.min(min_level_decrement(pot.as_ref(), ray, mid, &taus));
    }
    let mut notes = vec![
        format!("{} rays probed over {} times", rays.len(), ctx.t_grid.len()),
        format!("smallest level decrement along a ray {min_dec:.3e} (must be > 0)"),
    ];
    let mut ok = worst <= 1e-6 && min_dec > 0.0;
    match check_assumptions(pot.as_ref(), &ctx.sc.plan, mid, 4) {
        Ok(rep) => {
            if !rep.holds(0.0, 1e3) {
                ok = false;
                notes.push(format!(
                    "family hypotheses violated: quotient margin {:.3e}, speed Lipschitz {:.3e}, min speed {:.3e}",
                    rep.level_quotient_margin, rep.speed_lipschitz, rep.min_speed
                ));
            }
        }
        Err(e) => {
            ok = false;
            notes.push(format!("hypothesis probe failed: {e}"));
        }
    }
    Outcome {
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        worst: Some(worst),
        tolerance: Some(1e-6),
        notes,
    }
}

/// The inf-convolution over a sampled target support converges to the
/// closed-form potential at first order in the sample count: doubling the
/// Halton sample roughly halves the error.
fn c_hopf_lax_doubling(ctx: &Ctx) -> Outcome {
    let pot = match ctx.sc.potential() {
        Some(p) => p,
        None => return Outcome::skip("scenario has no generating potential"),
    };
    let sampler = match target_sampler(ctx.sc) {
        Some(s) => s,
        None => {
            return Outcome::skip(
                "needs a planar target region (rigid shift or non-collapse dilation)",
            )
        }
    };
    let n = ctx.cfg.grids.hopf_lax_grid.max(8);
    let t = ctx.t_grid[ctx.t_grid.len() / 2].clamp(0.2, 0.8);
    let evals: Vec<Point> = subsample(ctx.sc.plan.rays.len(), 32)
        .into_iter()
        .map(|ri| ctx.sc.plan.rays[ri].0.at(t))
        .collect();

    let err_at = |count: usize| -> Result<f64, String> {
        let pts: Vec<Point> = (1..=count as u64).map(&sampler).collect();
        let vals: Vec<f64> = pts.iter().map(|y| pot.phi(1.0, y)).collect();
        let sampled = SampledPotential::new(pts, vals).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        for x in &evals {
            let hl = sampled.hopf_lax(t, 1.0, x).map_err(|e| e.to_string())?;
            total += (hl - pot.phi(t, x)).abs();
        }
        Ok(total / evals.len() as f64)
    };

    let coarse = match err_at(n) {
        Ok(e) => e,
        Err(e) => return Outcome::fail_with(e),
    };
    let fine = match err_at(2 * n) {
        Ok(e) => e,
        Err(e) => return Outcome::fail_with(e),
    };
    if !(fine > 0.0) {
        return Outcome::fail_with(format!(
            "refined error {fine:.3e} is not positive; doubling ratio undefined"
        ));
    }
    let ratio = coarse / fine;
    Outcome {
        status: if (1.4..=2.6).contains(&ratio) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst: Some(ratio),
        tolerance: None,
        notes: vec![format!(
            "mean |sampled - closed| at t = {t}: {coarse:.3e} with {n} samples, {fine:.3e} with {} (ratio {ratio:.3}, want 1.4..2.6)",
            2 * n
        )],
    }
}

/// Deterministic Halton sampler of the scenario's target region.
fn target_sampler(sc: &Scenario) -> Option<Box<dyn Fn(u64) -> Point + Sync + '_>> {
    if sc.is_crossed() {
        return None;
    }
    // read the target geometry off the plan's endpoints: a box for the rigid
    // shift, an annulus for the dilation
    let ends: Vec<&Point> = sc.plan.rays.iter().map(|(g, _)| &g.to).collect();
    if ends.first()?.len() != 2 {
        return None;
    }
    let radial = sc.name.starts_with("dilation") || sc.name.starts_with("radial");
    if radial {
        if sc.is_collapse() {
            return None;
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for e in &ends {
            let r = (e[0] * e[0] + e[1] * e[1]).sqrt();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let (lo2, hi2) = (lo * lo, hi * hi);
        Some(Box::new(move |k: u64| {
            let (u, v) = crate::num::halton2(k);
            let r = (lo2 + u * (hi2 - lo2)).sqrt();
            let th = std::f64::consts::TAU * v;
            vec![r * th.cos(), r * th.sin()]
        }))
    } else if sc.name.starts_with("translation") {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for e in &ends {
            for d in 0..2 {
                lo[d] = lo[d].min(e[d]);
                hi[d] = hi[d].max(e[d]);
            }
        }
        Some(Box::new(move |k: u64| {
            let (u, v) = crate::num::halton2(k);
            vec![lo[0] + u * (hi[0] - lo[0]), lo[1] + v * (hi[1] - lo[1])]
        }))
    } else {
        None
    }
}

/// Four independent level-speed estimators agree with the closed form:
/// difference quotients, the second-order formula, sojourn times, and (on
/// planar supports) Monte Carlo strip masses.
fn c_lambda_cross(ctx: &Ctx) -> Outcome {
    let pot = match ctx.sc.potential() {
        Some(p) => p,
        None => return Outcome::skip("scenario has no generating potential"),
    };
    let interior = interior_times(ctx.t_grid);
    if interior.is_empty() {
        return Outcome::skip("no interior times in the grid");
    }
    let rays = subsample(ctx.sc.plan.rays.len(), ctx.cfg.grids.n_quantiles);
    let mut max_inc = 0.0f64; // vs closed form, and vs the hessian route
    let mut max_soj = 0.0f64;
    let mut max_strip = 0.0f64;
    let mut strip_done = 0usize;
    let mut notes = Vec::new();
    for (k, &ri) in rays.iter().enumerate() {
        let t = interior[k % interior.len()];
        let seg = &ctx.sc.plan.rays[ri].0;
        let closed = match ctx.sc.lambda(ri, t) {
            Some(l) => l,
            None => continue,
        };
        let scale = closed.abs().max(1.0);
        let inc = crate::disintegration::lambda_incremental(pot.as_ref(), seg, t, 0.02, 4);
        let hess = crate::disintegration::lambda_hessian(pot.as_ref(), t, &seg.at(t), 1e-4);
        let soj = crate::disintegration::lambda_sojourn(pot.as_ref(), seg, t, 1e-4);
        match (&inc, &hess) {
            (Ok(i), Ok(h)) => {
                max_inc = max_inc
                    .max((i - closed).abs() / scale)
                    .max((h - closed).abs() / scale)
                    .max((i - h).abs() / scale);
            }
            _ => {
                return Outcome::fail_with(format!(
                    "estimator error on ray {ri} at t = {t}: {:?} / {:?}",
                    inc.err(),
                    hess.err()
                ))
            }
        }
        match &soj {
            Ok(s) => max_soj = max_soj.max((s - closed).abs() / scale),
            Err(e) => return Outcome::fail_with(format!("sojourn estimator: {e}")),
        }
        if ctx.sc.supports_strips() && strip_done < 2 {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed_for(ctx, &format!("lambda-strip:{ri}:{k}")));
            match ctx.sc.lambda_strip_estimate(
                ri,
                t,
                ctx.cfg.grids.eps,
                ctx.cfg.grids.eps,
                ctx.cfg.grids.budget as usize,
                &mut rng,
            ) {
                Ok(s) => {
                    max_strip = max_strip.max((s - closed).abs() / scale);
                    strip_done += 1;
                }
                Err(e) => return Outcome::fail_with(format!("strip estimator: {e}")),
            }
        }
    }
    notes.push(format!(
        "quotient/second-order max relative dev {max_inc:.3e} (tol 1e-4)"
    ));
    notes.push(format!("sojourn max relative dev {max_soj:.3e} (tol 1e-3)"));
    if strip_done > 0 {
        notes.push(format!(
            "strip max relative dev {max_strip:.3e} over {strip_done} probes (tol 5e-2)"
        ));
    } else {
        notes.push("strip estimator not applicable".into());
    }
    let utilization = (max_inc / 1e-4).max(max_soj / 1e-3).max(max_strip / 5e-2);
    Outcome {
        status: if utilization <= 1.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst: Some(utilization),
        tolerance: Some(1.0),
        notes,
    }
}

/// The closed-form level speed is affine in time on every ray.
fn c_lambda_affine(ctx: &Ctx) -> Outcome {
    if ctx.sc.lambda(0, ctx.t_grid[0]).is_none() {
        return Outcome::skip("scenario defines no level speeds; see orientation/crossing");
    }
    let rays = subsample(ctx.sc.plan.rays.len(), 32);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &ri in &rays {
        let vals: Vec<f64> = ctx
            .t_grid
            .iter()
            .map(|&t| ctx.sc.lambda(ri, t).expect("grid stays inside the domain"))
            .collect();
        scale = vals.iter().fold(scale, |a, v| a.max(v.abs()));
        match affine_deviation(ctx.t_grid, &vals) {
            Ok(rep) => worst = worst.max(rep.max_deviation),
            Err(e) => return Outcome::fail_with(format!("affine fit: {e}")),
        }
    }
    let tol = 1e-8 * scale.max(1.0);
    Outcome {
        status: if worst <= tol {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst: Some(worst),
        tolerance: Some(tol),
        notes: vec![format!("{} rays, largest speed scale {scale:.3e}", rays.len())],
    }
}

/// The level-speed profile moves in one direction (the precondition for the
/// linearity theory), and in the direction the config demands.
fn c_orientation(ctx: &Ctx) -> Outcome {
    let pairs = ctx.sc.profile_pairs();
    let profile = match level_speed_profile(&pairs, 1e-9) {
        Ok(p) => p,
        Err(e) => return Outcome::fail_with(format!("profile evaluation: {e}")),
    };
    let requested = match ctx.cfg.orientation {
        OrientationConfig::Auto => MonotoneSense::Auto,
        OrientationConfig::NonDecreasing => MonotoneSense::NonDecreasing,
        OrientationConfig::NonIncreasing => MonotoneSense::NonIncreasing,
    };
    match require_profile(&profile, requested) {
        Ok(sense) => Outcome {
            status: CheckStatus::Pass,
            worst: None,
            tolerance: None,
            notes: vec![format!(
                "profile {sense:?} ({} rising, {} falling steps)",
                profile.rising, profile.falling
            )],
        },
        Err(e) => Outcome {
            status: CheckStatus::Fail,
            worst: None,
            tolerance: None,
            notes: vec![format!("rejected: {e}")],
        },
    }
}

/// Extending each ray's level through actual fiber crossings never sees the
/// level rise. Only assigned-level plans expose crossings to certify.
fn c_crossing(ctx: &Ctx) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut starved = Vec::new();
    for &t in ctx.t_grid {
        match ctx.sc.crossing_margin(t) {
            Ok(m) => worst = worst.min(m),
            Err(ScenarioError::Unsupported(_)) => {
                return Outcome::skip("plan carries no assigned levels")
            }
            Err(ScenarioError::InsufficientMembership(t)) => starved.push(t),
            Err(e) => return Outcome::fail_with(format!("crossing evaluation: {e}")),
        }
    }
    if worst == f64::INFINITY {
        return Outcome::fail_with(format!(
            "no ray acquires any crossing membership at any grid time {starved:?}"
        ));
    }
    let mut notes = vec![
        "worst one-sided level decrement across fibers; negative means a level rises".into(),
    ];
    if !starved.is_empty() {
        notes.push(format!("no memberships at times {starved:?}"));
    }
    Outcome {
        status: if worst >= -1e-9 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst: Some(worst),
        tolerance: Some(1e-9),
        notes,
    }
}

/// The per-class constant of the density factorization does not drift in
/// time, and the factorization reassembles the density it came from.
fn c_decomposition_drift(ctx: &Ctx) -> Outcome {
    if ctx.sc.rho(0, ctx.t_grid[0]).is_none() {
        return Outcome::skip("scenario defines no interpolant densities");
    }
    let rays = subsample(ctx.sc.plan.rays.len(), 32);
    let mut worst_drift = 0.0f64;
    let mut worst_ident = 0.0f64;
    for &ri in &rays {
        let samples: Vec<DecompositionSample> = ctx
            .t_grid
            .iter()
            .map(|&t| {
                let lambda = ctx.sc.lambda(ri, t).expect("grid stays inside the domain");
                let fiber = ctx
                    .sc
                    .fiber_mass(ri, t)
                    .expect("grid stays inside the domain");
                DecompositionSample {
                    t,
                    rho: ctx.sc.rho(ri, t).expect("grid stays inside the domain"),
                    h: lambda / fiber,
                    lambda,
                }
            })
            .collect();
        let rep = match class_constant_drift(&samples) {
            Ok(r) => r,
            Err(e) => return Outcome::fail_with(format!("drift evaluation: {e}")),
        };
        worst_drift = worst_drift.max(rep.max_rel_drift);
        for s in &samples {
            let rebuilt = rep.mean * s.h / s.lambda;
            worst_ident = worst_ident.max((rebuilt - s.rho).abs() / s.rho);
        }
    }
    let ok = worst_drift <= 1e-8 && worst_ident <= 1e-6;
    Outcome {
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        worst: Some(worst_drift),
        tolerance: Some(1e-8),
        notes: vec![
            format!("{} rays over {} times", rays.len(), ctx.t_grid.len()),
            format!("density rebuilt from the class constant within {worst_ident:.3e} (tol 1e-6)"),
        ],
    }
}

/// The class constant measured with Monte Carlo strip masses (no closed-form
/// fiber geometry) agrees with the analytic one.
fn c_decomposition_mc(ctx: &Ctx) -> Outcome {
    if !ctx.sc.supports_strips() {
        return Outcome::skip("needs a planar support for strip sampling");
    }
    let interior = interior_times(ctx.t_grid);
    if interior.is_empty() {
        return Outcome::skip("no interior times in the grid");
    }
    let t = interior[interior.len() / 2];
    let rays = subsample(ctx.sc.plan.rays.len(), 2);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for &ri in &rays {
        let rho = ctx.sc.rho(ri, t).expect("interior time");
        let analytic = rho * ctx.sc.fiber_mass(ri, t).expect("interior time");
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(ctx, &format!("c-mc:{ri}")));
        let fiber_mc = match ctx.sc.fiber_mass_strip_estimate(
            ri,
            t,
            ctx.cfg.grids.eps,
            ctx.cfg.grids.budget as usize,
            &mut rng,
        ) {
            Ok(f) => f,
            Err(e) => return Outcome::fail_with(format!("strip mass: {e}")),
        };
        let mc = rho * fiber_mc;
        let dev = (mc - analytic).abs() / analytic.abs().max(1e-300);
        worst = worst.max(dev);
        notes.push(format!(
            "ray {ri}: constant {analytic:.6e} analytic vs {mc:.6e} sampled (rel dev {dev:.3e})"
        ));
    }
    Outcome {
        status: if worst <= 1e-3 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst: Some(worst),
        tolerance: Some(1e-3),
        notes,
    }
}

/// The interpolant density satisfies its convexity bound pointwise along
/// every ray, with equality exactly on the scenarios built to saturate it.
fn c_curvature_pointwise(ctx: &Ctx) -> Outcome {
    if !ctx.sc.has_densities() {
        return Outcome::skip("needs densities at both endpoints and inside");
    }
    let interior = interior_times(ctx.t_grid);
    if interior.is_empty() {
        return Outcome::skip("no interior times in the grid");
    }
    let rays = subsample(ctx.sc.plan.rays.len(), 64);
    let mut min_res = f64::INFINITY;
    let mut max_abs = 0.0f64;
    let mut supercritical = 0usize;
    for &ri in &rays {
        let sep = ctx.sc.plan.rays[ri].0.length();
        let rho0 = ctx.sc.rho(ri, 0.0).expect("endpoint density");
        let rho1 = ctx.sc.rho(ri, 1.0).expect("endpoint density");
        for &t in &interior {
            let rho_t = ctx.sc.rho(ri, t).expect("interior density");
            match cd_pointwise_residual(ctx.sc.params, t, sep, rho0, rho1, rho_t) {
                Ok(c) => {
                    if c.supercritical {
                        supercritical += 1;
                    }
                    min_res = min_res.min(c.residual);
                    max_abs = max_abs.max(c.residual.abs());
                }
                Err(e) => return Outcome::fail_with(format!("residual evaluation: {e}")),
            }
        }
    }
    let mut notes = vec![format!(
        "min residual over {} rays x {} times; must be >= -1e-8",
        rays.len(),
        interior.len()
    )];
    if supercritical > 0 {
        notes.push(format!(
            "{supercritical} probes exceeded the finiteness threshold"
        ));
    }
    let mut ok = min_res >= -1e-8;
    if ctx.sc.expects_pointwise_equality() {
        notes.push(format!(
            "equality expected for this flow: largest |residual| {max_abs:.3e} (tol 1e-10)"
        ));
        ok = ok && max_abs <= 1e-10;
    }
    Outcome {
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        worst: Some(min_res),
        tolerance: Some(1e-8),
        notes,
    }
}

/// The fiber conditional satisfies the dimension-reduced convexity bound on
/// every in-grid time triple, saturating it at the design calibration.
fn c_curvature_reduced(ctx: &Ctx) -> Outcome {
    if ctx.sc.rho(0, ctx.t_grid[0]).is_none() {
        return Outcome::skip("scenario defines no fiber conditionals");
    }
    if ctx.sc.params.n - 1.0 < 1.0 {
        return Outcome::skip(format!(
            "quotient dimension {} below 1",
            ctx.sc.params.n - 1.0
        ));
    }
    if ctx.t_grid.len() < 3 {
        return Outcome::skip("need at least 3 grid times");
    }
    let rays = subsample(ctx.sc.plan.rays.len(), 32);
    let mut min_res = f64::INFINITY;
    let mut max_abs = 0.0f64;
    for &ri in &rays {
        let speed = ctx.sc.plan.rays[ri].0.length();
        let h = |t: f64| {
            ctx.sc.lambda(ri, t).expect("grid time") / ctx.sc.fiber_mass(ri, t).expect("grid time")
        };
        for w in ctx.t_grid.windows(3) {
            match cd_reduced_residual(
                ctx.sc.params,
                w[0],
                w[1],
                w[2],
                speed,
                h(w[0]),
                h(w[1]),
                h(w[2]),
            ) {
                Ok(c) => {
                    min_res = min_res.min(c.residual);
                    max_abs = max_abs.max(c.residual.abs());
                }
                Err(e) => return Outcome::fail_with(format!("reduced residual: {e}")),
            }
        }
    }
    let mut ok = min_res >= -1e-8;
    let mut notes = vec![format!(
        "min residual over {} rays, consecutive time triples; must be >= -1e-8",
        rays.len()
    )];
    if ctx.sc.at_design_calibration() {
        notes.push(format!(
            "design calibration saturates the bound: largest |residual| {max_abs:.3e} (tol 1e-10)"
        ));
        ok = ok && max_abs <= 1e-10;
    } else {
        notes.push("calibration overridden; tightness not asserted".into());
    }
    Outcome {
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        worst: Some(min_res),
        tolerance: Some(1e-8),
        notes,
    }
}

/// The two-window interpolated family is exactly affine in transport
/// distance, and its endpoint pair set is 2-cycle monotone.
fn c_w2_affine(ctx: &Ctx) -> Outcome {
    let w2cfg: &W2Config = match &ctx.cfg.w2 {
        Some(w) => w,
        None => return Outcome::skip("no window family configured"),
    };
    let upper = match LevelWindow::new(w2cfg.upper[0], w2cfg.upper[1]) {
        Ok(w) => w,
        Err(e) => return Outcome::fail_with(format!("upper window: {e}")),
    };
    let lower = match LevelWindow::new(w2cfg.lower[0], w2cfg.lower[1]) {
        Ok(w) => w,
        Err(e) => return Outcome::fail_with(format!("lower window: {e}")),
    };
    let picked = subsample(ctx.sc.plan.rays.len(), ctx.cfg.grids.n_quantiles);
    let members: Vec<(GeodesicSegment, f64)> = picked
        .iter()
        .map(|&ri| ctx.sc.plan.rays[ri].clone())
        .collect();
    let built = match build_w2_from_monotone(
        &members,
        w2cfg.level,
        upper,
        lower,
        w2cfg.samples,
        &w2cfg.times,
    ) {
        Ok(b) => b,
        Err(e) => return Outcome::fail_with(format!("window construction: {e}")),
    };
    let dist = |a: &DiscreteMeasure, b: &DiscreteMeasure| -> Result<f64, OtError> {
        Ok((2.0 * solve_ot(a, b, half_sq_cost)?.cost_total).sqrt())
    };
    let m = &built.measures;
    let base = match dist(&m[0], &m[m.len() - 1]) {
        Ok(d) => d,
        Err(e) => return Outcome::fail_with(format!("transport distance: {e}")),
    };
    let span = built.times[built.times.len() - 1] - built.times[0];
    let mut defect = 0.0f64;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            let d = match dist(&m[i], &m[j]) {
                Ok(d) => d,
                Err(e) => return Outcome::fail_with(format!("transport distance: {e}")),
            };
            let predicted = (built.times[j] - built.times[i]) / span * base;
            defect = defect.max((d - predicted).abs());
        }
    }
    let pairs_ok = match check_cyclical_monotonicity(
        &built.endpoint_pairs,
        half_sq_cost,
        2,
        ctx.cfg.grids.budget,
    ) {
        Ok(cert) => cert.is_monotone(1e-9),
        Err(e) => return Outcome::fail_with(format!("pair-set check: {e}")),
    };
    let tol = 1e-4 * base.max(1.0);
    let mut notes = vec![format!(
        "{} members, {} times, endpoint speed {base:.6e}",
        members.len() - built.excluded.len(),
        built.times.len()
    )];
    if !pairs_ok {
        notes.push("endpoint pair set admits an improving 2-cycle".into());
    }
    let status = if defect <= tol && pairs_ok {
        if built.excluded.is_empty() {
            CheckStatus::Pass
        } else {
            notes.push(format!(
                "{} members were too short for the windows and were excluded",
                built.excluded.len()
            ));
            CheckStatus::Warn
        }
    } else {
        CheckStatus::Fail
    };
    Outcome {
        status,
        worst: Some(defect),
        tolerance: Some(tol),
        notes,
    }
}
