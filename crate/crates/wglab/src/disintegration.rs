//! Grouping of a dynamical plan's rays into level classes and estimation of
//! the per-ray dilation factor `lambda_t`, the rate at which ray time is
//! traded for level: the extended level drops at rate `1/lambda_t` along each
//! ray.
//!
//! Three independent estimators are provided so they can cross-certify each
//! other and the closed forms: a Richardson-extrapolated difference quotient,
//! a sojourn time found by bisection on the level, and a Euclidean
//! gradient/Hessian formula. A fourth route estimates `lambda` as the ratio
//! of a level-strip mass to a time-strip mass via stratified sampling along a
//! one-dimensional cross-section coordinate.

use crate::num::{bisect, richardson};
use crate::potential::{ray_level, TimePotential};
use crate::spaces::{DynamicalPlan, GeodesicSegment};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DisintegrationError {
    #[error("time {0} outside [0, 1]")]
    BadTime(f64),
    #[error("step {0} unusable at this time (no room forward or backward)")]
    BadStep(f64),
    #[error("level quotient {0} is not positive; the level does not decrease here")]
    NonPositiveQuotient(f64),
    #[error("level never drops to {target} along the ray (deepest {deepest})")]
    LevelNotReached { target: f64, deepest: f64 },
    #[error("strip sampling starved: {accepted} of {needed} required acceptances")]
    StarvedStrip { accepted: usize, needed: usize },
    #[error("plan has no rays")]
    EmptyPlan,
    #[error("need at least one bin, got {0}")]
    BadBins(usize),
    #[error("strip coordinate range is empty or not finite: [{0}, {1}]")]
    BadStripRange(f64, f64),
}

/// Rays of a plan sharing (approximately) one level value.
#[derive(Clone, Debug)]
pub struct LevelClass {
    /// Mass-weighted mean level of the members.
    pub level: f64,
    /// Ray indices into the originating plan.
    pub members: Vec<usize>,
    pub mass: f64,
    /// Largest |member level - class level|.
    pub level_spread: f64,
    /// Largest speed difference between members.
    pub speed_spread: f64,
}

impl LevelClass {
    /// A class is usable when its members are level- and speed-homogeneous.
    pub fn is_homogeneous(&self, max_level_spread: f64, max_speed_spread: f64) -> bool {
        self.level_spread <= max_level_spread && self.speed_spread <= max_speed_spread
    }
}

/// Level label of each ray: `phi_0(gamma_0)`.
pub fn ray_levels(pot: &dyn TimePotential, plan: &DynamicalPlan) -> Vec<f64> {
    plan.rays
        .iter()
        .map(|(g, _)| pot.phi(0.0, &g.from))
        .collect()
}

/// Group the plan's rays into `bins` equal-width level bins over the level
/// range; only nonempty bins are returned, ordered by level.
pub fn partition_levels(
    pot: &dyn TimePotential,
    plan: &DynamicalPlan,
    bins: usize,
) -> Result<Vec<LevelClass>, DisintegrationError> {
    if plan.rays.is_empty() {
        return Err(DisintegrationError::EmptyPlan);
    }
    if bins == 0 {
        return Err(DisintegrationError::BadBins(bins));
    }
    let levels = ray_levels(pot, plan);
    let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (i, &lvl) in levels.iter().enumerate() {
        let b = if range > 0.0 {
            (((lvl - lo) / range) * bins as f64).floor() as usize
        } else {
            0
        };
        buckets[b.min(bins - 1)].push(i);
    }
    let mut classes = Vec::new();
    for members in buckets.into_iter().filter(|b| !b.is_empty()) {
        let mass: f64 = members.iter().map(|&i| plan.rays[i].1).sum();
        let level = members
            .iter()
            .map(|&i| levels[i] * plan.rays[i].1)
            .sum::<f64>()
            / mass;
        let level_spread = members
            .iter()
            .map(|&i| (levels[i] - level).abs())
            .fold(0.0, f64::max);
        let speeds: Vec<f64> = members.iter().map(|&i| plan.rays[i].0.length()).collect();
        let smin = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = speeds.iter().cloned().fold(0.0f64, f64::max);
        classes.push(LevelClass {
            level,
            members,
            mass,
            level_spread,
            speed_spread: smax - smin,
        });
    }
    Ok(classes)
}

/// Sub-plan consisting of one class's rays (masses kept as in the parent).
pub fn class_subplan(plan: &DynamicalPlan, class: &LevelClass) -> DynamicalPlan {
    DynamicalPlan {
        rays: class
            .members
            .iter()
            .map(|&i| plan.rays[i].clone())
            .collect(),
    }
}

fn validate_time(t: f64) -> Result<(), DisintegrationError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(DisintegrationError::BadTime(t));
    }
    Ok(())
}

/// `lambda_t` from Richardson-extrapolated difference quotients of the
/// extended level along the ray: quotients at steps `s0/2^k`,
/// `k = 0..halvings`, extrapolated to step zero, inverted. Uses forward steps
/// when `t + s0 <= 1`, backward steps otherwise.
pub fn lambda_incremental(
    pot: &dyn TimePotential,
    ray: &GeodesicSegment,
    t: f64,
    s0: f64,
    halvings: usize,
) -> Result<f64, DisintegrationError> {
    validate_time(t)?;
    if !(s0 > 0.0) {
        return Err(DisintegrationError::BadStep(s0));
    }
    let forward = t + s0 <= 1.0;
    if !forward && t - s0 < 0.0 {
        return Err(DisintegrationError::BadStep(s0));
    }
    let here = ray_level(pot, ray, t, t);
    let quotients: Vec<f64> = (0..=halvings)
        .map(|k| {
            let s = s0 / (1u64 << k) as f64;
            if forward {
                (here - ray_level(pot, ray, t, t + s)) / s
            } else {
                (ray_level(pot, ray, t, t - s) - here) / s
            }
        })
        .collect();
    let q = richardson(&quotients);
    if q <= 0.0 {
        return Err(DisintegrationError::NonPositiveQuotient(q));
    }
    Ok(1.0 / q)
}

/// `lambda_t` from the sojourn time: the ray parameter increment needed for
/// the extended level to drop by `eps`, divided by `eps`. The crossing
/// parameter is found by bisection on the (strictly decreasing) level.
pub fn lambda_sojourn(
    pot: &dyn TimePotential,
    ray: &GeodesicSegment,
    t: f64,
    eps: f64,
) -> Result<f64, DisintegrationError> {
    validate_time(t)?;
    if !(eps > 0.0) {
        return Err(DisintegrationError::BadStep(eps));
    }
    let here = ray_level(pot, ray, t, t);
    let target = here - eps;
    let deepest = ray_level(pot, ray, t, 1.0);
    if deepest > target {
        return Err(DisintegrationError::LevelNotReached { target, deepest });
    }
    let f = |tau: f64| ray_level(pot, ray, t, tau) - target;
    let tau = bisect(&f, t, 1.0, 1e-13).ok_or(DisintegrationError::LevelNotReached {
        target,
        deepest,
    })?;
    Ok((tau - t) / eps)
}

/// `lambda_t` from the Euclidean second-order formula
/// `1/lambda = <(I + t Hess phi_t) grad phi_t, grad phi_t>` at the ray's
/// time-t point, with derivatives by central differences of width `step`.
pub fn lambda_hessian(
    pot: &dyn TimePotential,
    t: f64,
    x: &[f64],
    step: f64,
) -> Result<f64, DisintegrationError> {
    validate_time(t)?;
    if !(step > 0.0) {
        return Err(DisintegrationError::BadStep(step));
    }
    let d = x.len();
    let center = pot.phi(t, x);
    let mut xp = x.to_vec();
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for k in 0..d {
        xp[k] = x[k] + step;
        let hi = pot.phi(t, &xp);
        xp[k] = x[k] - step;
        let lo = pot.phi(t, &xp);
        xp[k] = x[k];
        grad[k] = (hi - lo) / (2.0 * step);
        hess[k * d + k] = (hi - 2.0 * center + lo) / (step * step);
    }
    for k in 0..d {
        for l in k + 1..d {
            xp[k] = x[k] + step;
            xp[l] = x[l] + step;
            let pp = pot.phi(t, &xp);
            xp[l] = x[l] - step;
            let pm = pot.phi(t, &xp);
            xp[k] = x[k] - step;
            let mm = pot.phi(t, &xp);
            xp[l] = x[l] + step;
            let mp = pot.phi(t, &xp);
            xp[k] = x[k];
            xp[l] = x[l];
            let v = (pp - pm - mp + mm) / (4.0 * step * step);
            hess[k * d + l] = v;
            hess[l * d + k] = v;
        }
    }
    let mut q = 0.0;
    for k in 0..d {
        let mut hg = 0.0;
        for l in 0..d {
            hg += hess[k * d + l] * grad[l];
        }
        q += (grad[k] + t * hg) * grad[k];
    }
    if q <= 0.0 {
        return Err(DisintegrationError::NonPositiveQuotient(q));
    }
    Ok(1.0 / q)
}

/// One-dimensional reduction of a strip: a cross-section coordinate range,
/// the mass density per unit coordinate (cross-section Jacobian times
/// reference density), and the membership predicate.
pub struct StripSpec<'a> {
    pub xi_range: (f64, f64),
    pub jacobian: &'a dyn Fn(f64) -> f64,
    pub member: &'a dyn Fn(f64) -> bool,
}

#[derive(Clone, Copy, Debug)]
pub struct StripMass {
    pub mass: f64,
    pub accepted: usize,
    pub proposals: usize,
}

/// Acceptances below this make a strip estimate statistically worthless, so
/// the sampler errors out instead of returning noise.
pub const MIN_STRIP_ACCEPT: usize = 100;

/// Stratified-jittered estimate of the strip's mass: one uniformly jittered
/// proposal per stratum of the coordinate range, accepted by membership and
/// weighted by the Jacobian.
pub fn strip_mass<R: Rng>(
    spec: &StripSpec,
    proposals: usize,
    rng: &mut R,
) -> Result<StripMass, DisintegrationError> {
    let (lo, hi) = spec.xi_range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(DisintegrationError::BadStripRange(lo, hi));
    }
    let w = (hi - lo) / proposals as f64;
    let mut mass = 0.0;
    let mut accepted = 0usize;
    for k in 0..proposals {
        let xi = lo + (k as f64 + rng.random::<f64>()) * w;
        if (spec.member)(xi) {
            mass += (spec.jacobian)(xi) * w;
            accepted += 1;
        }
    }
    if accepted < MIN_STRIP_ACCEPT {
        return Err(DisintegrationError::StarvedStrip {
            accepted,
            needed: MIN_STRIP_ACCEPT,
        });
    }
    Ok(StripMass {
        mass,
        accepted,
        proposals,
    })
}

/// `lambda` as mass-per-unit-level over mass-per-unit-time:
/// `(level strip mass / eps_level) / (time strip mass / eps_time)`.
pub fn lambda_strip<R: Rng>(
    level_strip: &StripSpec,
    eps_level: f64,
    time_strip: &StripSpec,
    eps_time: f64,
    proposals: usize,
    rng: &mut R,
) -> Result<f64, DisintegrationError> {
    if !(eps_level > 0.0) {
        return Err(DisintegrationError::BadStep(eps_level));
    }
    if !(eps_time > 0.0) {
        return Err(DisintegrationError::BadStep(eps_time));
    }
    let ml = strip_mass(level_strip, proposals, rng)?;
    let mt = strip_mass(time_strip, proposals, rng)?;
    Ok((ml.mass / eps_level) / (mt.mass / eps_time))
}
