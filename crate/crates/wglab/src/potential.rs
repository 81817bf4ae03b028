//! Time evolution of transport potentials and the level structure they
//! induce along geodesic rays.
//!
//! The central objects are a trait for a time-indexed potential `phi_t`, an
//! implementation that evolves the dual potential of a discrete coupling by
//! the inf-convolution (Hopf-Lax) formula over the target support, and the
//! extended level `Phi_t(y) = phi_t(y) + (t/2) |grad phi_t(y)|^2`. On a ray's
//! own time-t point the extended level equals `phi_0(gamma_0)`, is constant
//! in `t`, and strictly decreases along the ray; those facts are exposed here
//! as checkable defects rather than assumed.

use crate::num::{dist_sq, Point};
use crate::ot::Coupling;
use crate::spaces::{DynamicalPlan, GeodesicSegment};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("potential needs at least one sample")]
    EmptySamples,
    #[error("sample count mismatch: {points} points, {values} values")]
    LengthMismatch { points: usize, values: usize },
    #[error("evolution horizon is degenerate: from {from} to {to}")]
    DegenerateHorizon { from: f64, to: f64 },
    #[error("time {0} outside [0, 1]")]
    BadTime(f64),
}

/// Potential known at finitely many sample points.
#[derive(Clone, Debug)]
pub struct SampledPotential {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

impl SampledPotential {
    pub fn new(points: Vec<Point>, values: Vec<f64>) -> Result<Self, PotentialError> {
        if points.is_empty() {
            return Err(PotentialError::EmptySamples);
        }
        if points.len() != values.len() {
            return Err(PotentialError::LengthMismatch {
                points: points.len(),
                values: values.len(),
            });
        }
        Ok(Self { points, values })
    }

    /// Inf/sup-convolution evolution over the sample set:
    /// forward (`to > from`) is `inf_y [ d^2(x,y)/(2(to-from)) + psi(y) ]`,
    /// backward is `sup_y [ -d^2(x,y)/(2(from-to)) + psi(y) ]`.
    pub fn hopf_lax(&self, from: f64, to: f64, x: &[f64]) -> Result<f64, PotentialError> {
        let gap = to - from;
        if gap == 0.0 {
            return Err(PotentialError::DegenerateHorizon { from, to });
        }
        let mut best = if gap > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        for (y, &v) in self.points.iter().zip(&self.values) {
            let q = dist_sq(x, y) / (2.0 * gap) + v;
            if gap > 0.0 {
                best = best.min(q);
            } else {
                best = best.max(q);
            }
        }
        Ok(best)
    }
}

/// A potential indexed by time on [0, 1]. Implementations that know the
/// gradient norm in closed form should override `grad_norm`; the numeric
/// fallback differences `phi`.
pub trait TimePotential {
    fn phi(&self, t: f64, x: &[f64]) -> f64;

    fn grad_norm(&self, t: f64, x: &[f64]) -> Option<f64> {
        let _ = (t, x);
        None
    }
}

/// Analytic potential given as a closure `(t, x) -> value`, gradient
/// estimated numerically.
pub struct AnalyticPotential<F: Fn(f64, &[f64]) -> f64>(pub F);

impl<F: Fn(f64, &[f64]) -> f64> TimePotential for AnalyticPotential<F> {
    fn phi(&self, t: f64, x: &[f64]) -> f64 {
        (self.0)(t, x)
    }
}

/// Analytic potential with a closed-form gradient norm.
pub struct ClosedFormPotential<F, G>
where
    F: Fn(f64, &[f64]) -> f64,
    G: Fn(f64, &[f64]) -> f64,
{
    pub phi: F,
    pub grad: G,
}

impl<F, G> TimePotential for ClosedFormPotential<F, G>
where
    F: Fn(f64, &[f64]) -> f64,
    G: Fn(f64, &[f64]) -> f64,
{
    fn phi(&self, t: f64, x: &[f64]) -> f64 {
        (self.phi)(t, x)
    }

    fn grad_norm(&self, t: f64, x: &[f64]) -> Option<f64> {
        Some((self.grad)(t, x))
    }
}

/// How close to 1 the time must be before the inf-convolution horizon is
/// treated as closed and the terminal values are read off directly.
const TERMINAL_EPS: f64 = 1e-12;

/// Finite-difference step for the numeric gradient fallback.
pub const SLOPE_STEP: f64 = 1e-5;

/// Interpolating potential built from the dual of a quadratic-cost coupling:
/// `phi_t(x) = inf_y [ d^2(x,y)/(2(1-t)) - phi_c(y) ]` over the target
/// support, where `phi_c` is the target-side dual. At `t = 0` this reproduces
/// the source-side dual on the source atoms; at `t = 1` it degenerates to
/// `-phi_c` at the nearest target. The gradient norm follows the active
/// branch of the minimum: `d(x, argmin)/(1 - t)`.
#[derive(Clone, Debug)]
pub struct KantorovichEvolution {
    pub targets: Vec<Point>,
    pub phi_c: Vec<f64>,
}

impl KantorovichEvolution {
    pub fn from_coupling(c: &Coupling) -> Self {
        Self {
            targets: c.nu.points.clone(),
            phi_c: c.dual_v.clone(),
        }
    }

    /// Value and objective-argmin target index.
    pub fn eval_with_argmin(&self, t: f64, x: &[f64]) -> (f64, usize) {
        debug_assert!((0.0..=1.0).contains(&t));
        if 1.0 - t < TERMINAL_EPS {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (k, y) in self.targets.iter().enumerate() {
                let d = dist_sq(x, y);
                if d < best {
                    best = d;
                    arg = k;
                }
            }
            return (-self.phi_c[arg], arg);
        }
        let denom = 2.0 * (1.0 - t);
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (k, (y, &v)) in self.targets.iter().zip(&self.phi_c).enumerate() {
            let q = dist_sq(x, y) / denom - v;
            if q < best {
                best = q;
                arg = k;
            }
        }
        (best, arg)
    }
}

impl TimePotential for KantorovichEvolution {
    fn phi(&self, t: f64, x: &[f64]) -> f64 {
        self.eval_with_argmin(t, x).0
    }

    fn grad_norm(&self, t: f64, x: &[f64]) -> Option<f64> {
        if 1.0 - t < TERMINAL_EPS {
            return None;
        }
        let (_, arg) = self.eval_with_argmin(t, x);
        Some(dist_sq(x, &self.targets[arg]).sqrt() / (1.0 - t))
    }
}

/// Central-difference estimate of |grad phi_t| at x.
pub fn local_slope(pot: &dyn TimePotential, t: f64, x: &[f64], step: f64) -> f64 {
    let mut sq = 0.0;
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        xp[k] = x[k] + step;
        let hi = pot.phi(t, &xp);
        xp[k] = x[k] - step;
        let lo = pot.phi(t, &xp);
        xp[k] = x[k];
        let g = (hi - lo) / (2.0 * step);
        sq += g * g;
    }
    sq.sqrt()
}

/// Gradient norm: closed form when the potential provides one, numeric
/// central differences otherwise. Along a ray at its own time this recovers
/// the ray speed.
pub fn slope(pot: &dyn TimePotential, t: f64, x: &[f64]) -> f64 {
    pot.grad_norm(t, x)
        .unwrap_or_else(|| local_slope(pot, t, x, SLOPE_STEP))
}

/// Extended level `phi_t(y) + (t/2) |grad phi_t(y)|^2`: labels each point
/// with the level of the ray whose time-t position it is, so along any ray it
/// strictly decreases in the ray parameter at rate `1/lambda`.
pub fn extended_level(pot: &dyn TimePotential, t: f64, y: &[f64]) -> f64 {
    let s = slope(pot, t, y);
    pot.phi(t, y) + 0.5 * t * s * s
}

/// Extended level read along a ray at parameter `tau`.
pub fn ray_level(pot: &dyn TimePotential, ray: &GeodesicSegment, t: f64, tau: f64) -> f64 {
    extended_level(pot, t, &ray.at(tau))
}

/// |level read at time t minus level read at time 0|: both should name the
/// same number, `phi_0(gamma_0)`.
pub fn level_identity_defect(pot: &dyn TimePotential, ray: &GeodesicSegment, t: f64) -> f64 {
    (ray_level(pot, ray, t, t) - ray_level(pot, ray, 0.0, 0.0)).abs()
}

/// |phi_t(gamma_t) - ((1-t) phi_0(gamma_0) + t phi_1(gamma_1))|: the
/// potential along the ray interpolates its endpoint values affinely.
pub fn affinity_defect(pot: &dyn TimePotential, ray: &GeodesicSegment, t: f64) -> f64 {
    let along = pot.phi(t, &ray.at(t));
    let ends = (1.0 - t) * pot.phi(0.0, &ray.from) + t * pot.phi(1.0, &ray.to);
    (along - ends).abs()
}

/// Smallest decrement of the extended level along the ray over consecutive
/// entries of `taus` (which must be increasing). Positive means strictly
/// decreasing.
pub fn min_level_decrement(
    pot: &dyn TimePotential,
    ray: &GeodesicSegment,
    t: f64,
    taus: &[f64],
) -> f64 {
    let mut min_dec = f64::INFINITY;
    for w in taus.windows(2) {
        let a = ray_level(pot, ray, t, w[0]);
        let b = ray_level(pot, ray, t, w[1]);
        min_dec = min_dec.min(a - b);
    }
    min_dec
}

/// Runtime verdict on the structural hypotheses a ray family must satisfy
/// before its level decomposition is meaningful.
#[derive(Clone, Copy, Debug)]
pub struct AssumptionReport {
    /// Smallest one-sided difference quotient of the extended level along any
    /// ray: `(level(t) - level(t+s))/s` over both signs of `s`. Must be
    /// strictly positive; for a rigid translation it equals the squared speed.
    pub level_quotient_margin: f64,
    /// Largest ratio |L_i - L_j| / d(gamma^i_t, gamma^j_t) over ray pairs;
    /// infinite when distinct rays share a time-t point at different speeds.
    pub speed_lipschitz: f64,
    /// Smallest ray speed in the family.
    pub min_speed: f64,
}

impl AssumptionReport {
    pub fn holds(&self, min_margin: f64, max_lipschitz: f64) -> bool {
        self.level_quotient_margin > min_margin
            && self.speed_lipschitz <= max_lipschitz
            && self.min_speed > 0.0
    }
}

/// Probe the family hypotheses at time `t` with `n_s` quotient samples per
/// direction per ray.
pub fn check_assumptions(
    pot: &dyn TimePotential,
    plan: &DynamicalPlan,
    t: f64,
    n_s: usize,
) -> Result<AssumptionReport, PotentialError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(PotentialError::BadTime(t));
    }
    let mut margin = f64::INFINITY;
    let mut min_speed = f64::INFINITY;
    for (ray, _) in &plan.rays {
        min_speed = min_speed.min(ray.length());
        let here = ray_level(pot, ray, t, t);
        for k in 1..=n_s {
            let frac = k as f64 / n_s as f64;
            let fwd = frac * (1.0 - t);
            if fwd > 0.0 {
                let q = (here - ray_level(pot, ray, t, t + fwd)) / fwd;
                margin = margin.min(q);
            }
            let back = frac * t;
            if back > 0.0 {
                let q = (ray_level(pot, ray, t, t - back) - here) / back;
                margin = margin.min(q);
            }
        }
    }
    let mut lipschitz = 0.0f64;
    for i in 0..plan.rays.len() {
        for j in i + 1..plan.rays.len() {
            let (ri, _) = &plan.rays[i];
            let (rj, _) = &plan.rays[j];
            let d2 = dist_sq(&ri.at(t), &rj.at(t));
            let dl = (ri.length() - rj.length()).abs();
            if d2 < 1e-24 {
                if dl > 1e-9 {
                    lipschitz = f64::INFINITY;
                }
            } else {
                lipschitz = lipschitz.max(dl / d2.sqrt());
            }
        }
    }
    Ok(AssumptionReport {
        level_quotient_margin: margin,
        speed_lipschitz: lipschitz,
        min_speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::dot;
    use crate::ot::{solve_w2, DiscreteMeasure};
    use crate::spaces::DynamicalPlan;

    fn translation_potential(
        v: Vec<f64>,
    ) -> ClosedFormPotential<impl Fn(f64, &[f64]) -> f64, impl Fn(f64, &[f64]) -> f64> {
        // phi_t(y) = v . y + t |v|^2 / 2 generates the rigid shift x -> x - v
        let speed = dot(&v, &v).sqrt();
        let vv = v.clone();
        ClosedFormPotential {
            phi: move |t: f64, y: &[f64]| dot(vv.as_slice(), y) + 0.5 * t * dot(&vv, &vv),
            grad: move |_t: f64, _y: &[f64]| speed,
        }
    }

    fn dilation_potential(
        alpha: f64,
    ) -> ClosedFormPotential<impl Fn(f64, &[f64]) -> f64, impl Fn(f64, &[f64]) -> f64> {
        // phi_t(y) = (alpha/2) |y|^2 / (1 - t alpha), gradient alpha y / (1 - t alpha)
        ClosedFormPotential {
            phi: move |t: f64, y: &[f64]| 0.5 * alpha * dot(y, y) / (1.0 - t * alpha),
            grad: move |t: f64, y: &[f64]| alpha * dot(y, y).sqrt() / (1.0 - t * alpha),
        }
    }

    fn grid_cloud() -> Vec<Point> {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                pts.push(vec![i as f64 * 0.7, j as f64 * 0.9]);
            }
        }
        pts
    }

    #[test]
    fn discrete_evolution_reproduces_source_dual_at_time_zero() {
        let v = vec![1.5, -0.5];
        let xs = grid_cloud();
        let ys: Vec<Point> = xs.iter().map(|p| vec![p[0] - v[0], p[1] - v[1]]).collect();
        let mu = DiscreteMeasure::uniform(xs).unwrap();
        let nu = DiscreteMeasure::uniform(ys).unwrap();
        let sol = solve_w2(&mu, &nu).unwrap();
        let evo = KantorovichEvolution::from_coupling(&sol.coupling);
        for (i, x) in sol.coupling.mu.points.iter().enumerate() {
            let p0 = evo.phi(0.0, x);
            assert!(
                (p0 - sol.coupling.dual_u[i]).abs() < 1e-10,
                "atom {i}: {} vs {}",
                p0,
                sol.coupling.dual_u[i]
            );
        }
    }

    #[test]
    fn level_is_conserved_and_affine_along_discrete_rays() {
        let v = vec![0.8, 0.6];
        let xs = grid_cloud();
        let ys: Vec<Point> = xs.iter().map(|p| vec![p[0] - v[0], p[1] - v[1]]).collect();
        let mu = DiscreteMeasure::uniform(xs).unwrap();
        let nu = DiscreteMeasure::uniform(ys).unwrap();
        let sol = solve_w2(&mu, &nu).unwrap();
        let evo = KantorovichEvolution::from_coupling(&sol.coupling);
        let plan = DynamicalPlan::from_coupling(&sol.coupling);
        for (ray, _) in &plan.rays {
            for &t in &[0.2, 0.5, 0.85] {
                assert!(level_identity_defect(&evo, ray, t) < 1e-11);
                assert!(affinity_defect(&evo, ray, t) < 1e-11);
            }
        }
    }

    #[test]
    fn analytic_translation_levels_decrease_at_squared_speed() {
        let v = vec![2.0, 1.0];
        let speed_sq = 5.0;
        let pot = translation_potential(v.clone());
        let ray = GeodesicSegment {
            from: vec![0.3, 0.4],
            to: vec![0.3 - v[0], 0.4 - v[1]],
        };
        let t = 0.4;
        // exact level: v . gamma_0
        let lv = ray_level(&pot, &ray, t, t);
        assert!((lv - dot(&v, &ray.from)).abs() < 1e-12);
        let taus = [0.0, 0.25, 0.5, 0.75, 1.0];
        let dec = min_level_decrement(&pot, &ray, t, &taus);
        assert!((dec - 0.25 * speed_sq).abs() < 1e-12);
    }

    #[test]
    fn dilation_extended_level_matches_relabelling() {
        // the extended level at gamma_tau must equal the level of the ray
        // whose time-t point that is: a * ((1 - tau a)/(1 - t a))^2
        let alpha = 0.6;
        let pot = dilation_potential(alpha);
        let x0 = [1.2, -0.5];
        let ray = GeodesicSegment {
            from: x0.to_vec(),
            to: vec![(1.0 - alpha) * x0[0], (1.0 - alpha) * x0[1]],
        };
        let a = 0.5 * alpha * dot(&x0, &x0);
        let t = 0.45;
        for &tau in &[0.0, 0.2, 0.45, 0.7, 1.0] {
            let expect = a * ((1.0 - tau * alpha) / (1.0 - t * alpha)).powi(2);
            let got = ray_level(&pot, &ray, t, tau);
            assert!((got - expect).abs() < 1e-12, "tau={tau}: {got} vs {expect}");
        }
    }

    #[test]
    fn assumption_margins_for_translation_family() {
        let v = vec![2.0, 1.0];
        let pot = translation_potential(v.clone());
        let pairs: Vec<(Point, Point)> = grid_cloud()
            .into_iter()
            .map(|p| {
                let q = vec![p[0] - v[0], p[1] - v[1]];
                (p, q)
            })
            .collect();
        let masses = vec![1.0 / pairs.len() as f64; pairs.len()];
        let plan = DynamicalPlan::from_pairs(&pairs, &masses);
        let rep = check_assumptions(&pot, &plan, 0.5, 8).unwrap();
        assert!((rep.level_quotient_margin - 5.0).abs() < 1e-10);
        assert!(rep.speed_lipschitz < 1e-12);
        assert!((rep.min_speed - 5.0f64.sqrt()).abs() < 1e-12);
        assert!(rep.holds(1e-6, 1e-6));
    }

    #[test]
    fn local_slope_recovers_ray_speed() {
        let v = vec![1.2, -0.7];
        let pot = AnalyticPotential(move |t: f64, y: &[f64]| {
            dot(&v, y) + 0.5 * t * dot(&v, &v)
        });
        let x = vec![0.1, 0.9];
        let s = local_slope(&pot, 0.3, &x, 1e-5);
        assert!((s - (1.2f64 * 1.2 + 0.49).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn hopf_lax_branches_and_degeneracy() {
        let samples = SampledPotential::new(
            vec![vec![0.0], vec![1.0], vec![2.5]],
            vec![0.3, -0.2, 0.1],
        )
        .unwrap();
        assert_eq!(
            samples.hopf_lax(0.5, 0.5, &[0.0]).unwrap_err(),
            PotentialError::DegenerateHorizon { from: 0.5, to: 0.5 }
        );
        // forward: explicit minimum over three candidates
        let x = [0.8];
        let gap = 0.4;
        let manual = [
            (0.8f64 * 0.8) / (2.0 * gap) + 0.3,
            (0.2f64 * 0.2) / (2.0 * gap) - 0.2,
            (1.7f64 * 1.7) / (2.0 * gap) + 0.1,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        let got = samples.hopf_lax(0.1, 0.5, &x).unwrap();
        assert!((got - manual).abs() < 1e-15);
        // backward of the negated values is minus the forward of the values
        let neg = SampledPotential::new(
            samples.points.clone(),
            samples.values.iter().map(|v| -v).collect(),
        )
        .unwrap();
        let back = neg.hopf_lax(0.5, 0.1, &x).unwrap();
        assert!((back + got).abs() < 1e-15);
    }

    #[test]
    fn terminal_time_reads_nearest_target() {
        let targets = vec![vec![0.0, 0.0], vec![3.0, 0.0]];
        let evo = KantorovichEvolution {
            targets,
            phi_c: vec![0.25, -0.75],
        };
        assert!((evo.phi(1.0, &[0.1, 0.0]) + 0.25).abs() < 1e-15);
        assert!((evo.phi(1.0, &[2.9, 0.0]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn shared_fiber_point_with_distinct_speeds_is_flagged() {
        // two rays meeting at t = 0.5 with equal lengths pass, unequal fail
        let pot = AnalyticPotential(|_t: f64, _x: &[f64]| 0.0);
        let pairs = vec![
            (vec![0.0, 0.0], vec![2.0, 0.0]),
            (vec![1.0, -1.0], vec![1.0, 1.0]),
        ];
        let plan = DynamicalPlan::from_pairs(&pairs, &[0.5, 0.5]);
        let rep = check_assumptions(&pot, &plan, 0.5, 2).unwrap();
        assert!(!rep.speed_lipschitz.is_infinite());

        let pairs = vec![
            (vec![0.0, 0.0], vec![2.0, 0.0]),
            (vec![1.0, -0.5], vec![1.0, 0.5]),
        ];
        let plan = DynamicalPlan::from_pairs(&pairs, &[0.5, 0.5]);
        let rep = check_assumptions(&pot, &plan, 0.5, 2).unwrap();
        assert!(rep.speed_lipschitz.is_infinite());
    }
}
