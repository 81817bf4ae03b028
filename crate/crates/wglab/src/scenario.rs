//! Ready-made transport scenarios with closed-form reference quantities.
//!
//! Each scenario packages a geodesic plan together with everything the
//! verification checks need: the time-dependent potential generating the
//! flow, interpolant densities, level speeds, fiber masses, strip geometries
//! for Monte Carlo estimates, and the level-speed profile. Four families are
//! provided — rigid translation of a planar box, radial dilation of an
//! annulus (including full collapse to a point), monotone rearrangement on a
//! weighted interval, and a deliberately broken crossed-levels plan whose
//! structural defects every check must detect rather than absorb.

use crate::disintegration::{lambda_strip, strip_mass, DisintegrationError, StripSpec};
use crate::distortion::{DistortionError, DistortionParams};
use crate::num::{bisect, dot, integrate, norm, Point};
use crate::ot::{half_sq_cost, solve_ot, Coupling, OtError};
use crate::potential::{ClosedFormPotential, TimePotential};
use crate::spaces::{
    monotone_map, monotone_map_derivative, quantile_coupling, DensityKind, DynamicalPlan,
    SpaceError, WeightedSegment,
};
use rand::Rng;
use thiserror::Error;

const TAU_2PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("bad scenario parameter: {0}")]
    BadParameter(String),
    #[error("{0} is not supported by this scenario")]
    Unsupported(&'static str),
    #[error("no crossing membership extends the level structure at t = {0}")]
    InsufficientMembership(f64),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Disintegration(#[from] DisintegrationError),
}

fn bad(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::BadParameter(msg.into())
}

enum Kind {
    Translation {
        v: [f64; 2],
        lo: [f64; 2],
        hi: [f64; 2],
        area: f64,
    },
    Dilation {
        alpha: f64,
        r_lo: f64,
        r_hi: f64,
        area: f64,
    },
    Interval {
        ambient: WeightedSegment,
        mu: WeightedSegment,
        nu: WeightedSegment,
        z0: f64,
        xs: Vec<f64>,
        maps: Vec<f64>,
        derivs: Vec<f64>,
    },
    Crossed {
        phi0: Vec<f64>,
    },
}

/// A concrete verification target: plan, potential, closed forms.
pub struct Scenario {
    pub name: String,
    pub params: DistortionParams,
    pub plan: DynamicalPlan,
    /// Starting level of each ray, in the scenario's own normalization.
    pub levels: Vec<f64>,
    kind: Kind,
    calibration_overridden: bool,
}

/// Length of the chord `{y : v . y = c}` inside the axis-aligned box.
fn box_slice_len(lo: [f64; 2], hi: [f64; 2], v: [f64; 2], c: f64) -> f64 {
    let (v1, v2) = (v[0], v[1]);
    let n = (v1 * v1 + v2 * v2).sqrt();
    if v2.abs() < 1e-15 {
        if v1.abs() < 1e-15 {
            return 0.0;
        }
        let x = c / v1;
        return if (lo[0]..=hi[0]).contains(&x) {
            hi[1] - lo[1]
        } else {
            0.0
        };
    }
    if v1.abs() < 1e-15 {
        let y = c / v2;
        return if (lo[1]..=hi[1]).contains(&y) {
            hi[0] - lo[0]
        } else {
            0.0
        };
    }
    let xa = (c - v2 * hi[1]) / v1;
    let xb = (c - v2 * lo[1]) / v1;
    let (xmin, xmax) = if xa <= xb { (xa, xb) } else { (xb, xa) };
    let xlo = xmin.max(lo[0]);
    let xhi = xmax.min(hi[0]);
    if xhi <= xlo {
        0.0
    } else {
        (xhi - xlo) * n / v2.abs()
    }
}

/// Starting level of the interval flow at start point `x`: the potential's
/// slope is `x - map(x)`, anchored to zero at the left edge of the source.
fn interval_level(mu: &WeightedSegment, nu: &WeightedSegment, x: f64) -> f64 {
    integrate(
        &|u| u - monotone_map(mu, nu, u).unwrap_or(u),
        mu.lo,
        x,
        1e-12,
    )
}

/// Potential of the interval flow, evaluated anywhere by inverting the
/// interpolated monotone map back to a start point.
struct IntervalPotential {
    mu: WeightedSegment,
    nu: WeightedSegment,
}

impl IntervalPotential {
    /// Start point whose time-t position is `y` (clamped to the source range).
    fn invert(&self, t: f64, y: f64) -> f64 {
        let f = |z: f64| {
            (1.0 - t) * z + t * monotone_map(&self.mu, &self.nu, z).unwrap_or(z) - y
        };
        if f(self.mu.lo) >= 0.0 {
            return self.mu.lo;
        }
        if f(self.mu.hi) <= 0.0 {
            return self.mu.hi;
        }
        bisect(&f, self.mu.lo, self.mu.hi, 1e-13).unwrap_or(0.5 * (self.mu.lo + self.mu.hi))
    }

    fn displacement(&self, z: f64) -> f64 {
        monotone_map(&self.mu, &self.nu, z).unwrap_or(z) - z
    }

    /// Beyond the time-t image of the source range the infimum defining the
    /// potential sticks to the nearest target endpoint; returns that
    /// endpoint's source when the branch applies. At t = 1 the image is the
    /// whole target range and the branch is empty.
    fn boundary_branch(&self, t: f64, y: f64) -> Option<f64> {
        if t >= 1.0 {
            return None;
        }
        let img = |z: f64| (1.0 - t) * z + t * (z + self.displacement(z));
        if y < img(self.mu.lo) {
            Some(self.mu.lo)
        } else if y > img(self.mu.hi) {
            Some(self.mu.hi)
        } else {
            None
        }
    }
}

impl TimePotential for IntervalPotential {
    fn phi(&self, t: f64, x: &[f64]) -> f64 {
        let y = x[0];
        if let Some(z) = self.boundary_branch(t, y) {
            let d = self.displacement(z);
            let gap = y - (z + d);
            return interval_level(&self.mu, &self.nu, z) - 0.5 * d * d
                + gap * gap / (2.0 * (1.0 - t));
        }
        let z = self.invert(t, y);
        let d = self.displacement(z);
        interval_level(&self.mu, &self.nu, z) - 0.5 * t * d * d
    }

    fn grad_norm(&self, t: f64, x: &[f64]) -> Option<f64> {
        let y = x[0];
        if let Some(z) = self.boundary_branch(t, y) {
            let gap = y - (z + self.displacement(z));
            return Some(gap.abs() / (1.0 - t));
        }
        let z = self.invert(t, y);
        Some(self.displacement(z).abs())
    }
}

impl Scenario {
    /// Rigid translation of a uniform box by `-v`: every ray has speed `|v|`
    /// and the whole decomposition is time-constant.
    pub fn translation(
        v: [f64; 2],
        lo: [f64; 2],
        hi: [f64; 2],
        per_side: usize,
    ) -> Result<Self, ScenarioError> {
        let speed2 = v[0] * v[0] + v[1] * v[1];
        if !(speed2.is_finite() && speed2 > 0.0) {
            return Err(bad(format!("translation vector {v:?} must be nonzero")));
        }
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(bad("box corners must satisfy lo < hi on both axes"));
        }
        if per_side == 0 {
            return Err(bad("need at least one atom per side"));
        }
        let n = per_side * per_side;
        let mut pairs = Vec::with_capacity(n);
        let mut levels = Vec::with_capacity(n);
        for i in 0..per_side {
            for j in 0..per_side {
                let x = [
                    lo[0] + (i as f64 + 0.5) / per_side as f64 * (hi[0] - lo[0]),
                    lo[1] + (j as f64 + 0.5) / per_side as f64 * (hi[1] - lo[1]),
                ];
                levels.push(v[0] * x[0] + v[1] * x[1]);
                pairs.push((vec![x[0], x[1]], vec![x[0] - v[0], x[1] - v[1]]));
            }
        }
        let masses = vec![1.0 / n as f64; n];
        Ok(Self {
            name: "translation".into(),
            params: DistortionParams::new(0.0, 2.0)?,
            plan: DynamicalPlan::from_pairs(&pairs, &masses),
            levels,
            kind: Kind::Translation {
                v,
                lo,
                hi,
                area: (hi[0] - lo[0]) * (hi[1] - lo[1]),
            },
            calibration_overridden: false,
        })
    }

    /// Radial dilation of a uniform annulus toward the origin: the time-t
    /// position of `x` is `(1 - t alpha) x`. `alpha = 1` collapses to a
    /// point; use [`Scenario::radial_to_point`] for that case.
    pub fn dilation(
        alpha: f64,
        r_lo: f64,
        r_hi: f64,
        n_radii: usize,
        n_angles: usize,
    ) -> Result<Self, ScenarioError> {
        Self::dilation_named("dilation", alpha, r_lo, r_hi, n_radii, n_angles)
    }

    /// Full radial collapse (`alpha = 1`): mass reaches a point at `t = 1`,
    /// so density-based checks stop short of the terminal time.
    pub fn radial_to_point(
        r_lo: f64,
        r_hi: f64,
        n_radii: usize,
        n_angles: usize,
    ) -> Result<Self, ScenarioError> {
        Self::dilation_named("radial-to-point", 1.0, r_lo, r_hi, n_radii, n_angles)
    }

    fn dilation_named(
        name: &str,
        alpha: f64,
        r_lo: f64,
        r_hi: f64,
        n_radii: usize,
        n_angles: usize,
    ) -> Result<Self, ScenarioError> {
        if !(alpha.is_finite() && 0.0 < alpha && alpha <= 1.0) {
            return Err(bad(format!("dilation rate {alpha} must lie in (0, 1]")));
        }
        if !(r_lo.is_finite() && r_hi.is_finite() && 0.0 < r_lo && r_lo < r_hi) {
            return Err(bad(format!("annulus radii ({r_lo}, {r_hi}) must satisfy 0 < lo < hi")));
        }
        if n_radii == 0 || n_angles == 0 {
            return Err(bad("need at least one shell and one angle"));
        }
        let n = n_radii * n_angles;
        let mut pairs = Vec::with_capacity(n);
        let mut levels = Vec::with_capacity(n);
        let span = r_hi * r_hi - r_lo * r_lo;
        for i in 0..n_radii {
            // equal-area shells carry equal mass under the uniform density
            let r = (r_lo * r_lo + (i as f64 + 0.5) / n_radii as f64 * span).sqrt();
            for j in 0..n_angles {
                let theta = TAU_2PI * (j as f64 + 0.5 * (i % 2) as f64) / n_angles as f64;
                let x = [r * theta.cos(), r * theta.sin()];
                levels.push(alpha * r * r / 2.0);
                pairs.push((
                    vec![x[0], x[1]],
                    vec![(1.0 - alpha) * x[0], (1.0 - alpha) * x[1]],
                ));
            }
        }
        let masses = vec![1.0 / n as f64; n];
        Ok(Self {
            name: name.into(),
            params: DistortionParams::new(0.0, 2.0)?,
            plan: DynamicalPlan::from_pairs(&pairs, &masses),
            levels,
            kind: Kind::Dilation {
                alpha,
                r_lo,
                r_hi,
                area: std::f64::consts::PI * span,
            },
            calibration_overridden: false,
        })
    }

    /// Monotone rearrangement between two sub-segments of a weighted
    /// interval, with the curvature calibration `params` the ambient weight
    /// is designed to meet.
    pub fn interval(
        kind: DensityKind,
        domain: (f64, f64),
        mu_range: (f64, f64),
        nu_range: (f64, f64),
        n: usize,
        params: DistortionParams,
        name: &str,
    ) -> Result<Self, ScenarioError> {
        if n == 0 {
            return Err(bad("need at least one quantile atom"));
        }
        let ambient = WeightedSegment::new(domain.0, domain.1, kind)?;
        let inside = |r: (f64, f64)| domain.0 <= r.0 && r.1 <= domain.1;
        if !inside(mu_range) || !inside(nu_range) {
            return Err(bad("marginal ranges must sit inside the domain"));
        }
        let mu = WeightedSegment::new(mu_range.0, mu_range.1, kind)?;
        let nu = WeightedSegment::new(nu_range.0, nu_range.1, kind)?;
        let atoms = mu.discretize(n)?;
        let xs: Vec<f64> = atoms.points.iter().map(|p| p[0]).collect();
        let mut maps = Vec::with_capacity(n);
        let mut derivs = Vec::with_capacity(n);
        let mut pairs = Vec::with_capacity(n);
        let mut levels = Vec::with_capacity(n);
        for &x in &xs {
            let tx = monotone_map(&mu, &nu, x)?;
            maps.push(tx);
            derivs.push(monotone_map_derivative(&mu, &nu, x)?);
            levels.push(interval_level(&mu, &nu, x));
            pairs.push((vec![x], vec![tx]));
        }
        let masses = vec![1.0 / n as f64; n];
        Ok(Self {
            name: name.into(),
            params,
            plan: DynamicalPlan::from_pairs(&pairs, &masses),
            levels,
            kind: Kind::Interval {
                ambient,
                mu,
                nu,
                z0: mu.mass(),
                xs,
                maps,
                derivs,
            },
            calibration_overridden: false,
        })
    }

    /// Interval scenario on `(0, pi)` with weight `sin^m`, calibrated as an
    /// `(m, m + 1)` curvature-dimension model.
    pub fn interval_sin_power(
        exponent: u32,
        mu_range: (f64, f64),
        nu_range: (f64, f64),
        n: usize,
    ) -> Result<Self, ScenarioError> {
        let dim = exponent as f64 + 1.0;
        Self::interval(
            DensityKind::SinPower { exponent },
            (0.0, std::f64::consts::PI),
            mu_range,
            nu_range,
            n,
            DistortionParams::new(dim - 1.0, dim)?,
            "interval-sin-power",
        )
    }

    /// Interval scenario on `(0, 1)` with weight `x^m`: a flat cone,
    /// calibrated as a `(0, m + 1)` model.
    pub fn interval_cone(
        exponent: f64,
        mu_range: (f64, f64),
        nu_range: (f64, f64),
        n: usize,
    ) -> Result<Self, ScenarioError> {
        Self::interval(
            DensityKind::Power { exponent },
            (0.0, 1.0),
            mu_range,
            nu_range,
            n,
            DistortionParams::new(0.0, exponent + 1.0)?,
            "interval-cone",
        )
    }

    /// Replaces the curvature calibration, e.g. to probe sharpness with a
    /// deliberately overstated curvature. Equality-type checks note the
    /// override and stop asserting tightness.
    pub fn with_params(mut self, params: DistortionParams) -> Self {
        self.calibration_overridden = self.params != params;
        self.params = params;
        self
    }

    /// `true` while `params` still equal the constructor's calibration.
    pub fn at_design_calibration(&self) -> bool {
        !self.calibration_overridden
    }

    /// `true` for the deliberately broken assigned-level plan.
    pub fn is_crossed(&self) -> bool {
        matches!(self.kind, Kind::Crossed { .. })
    }

    /// `true` when the scenario can realize level/time strips in a planar
    /// support for Monte Carlo mass estimates.
    pub fn supports_strips(&self) -> bool {
        matches!(self.kind, Kind::Translation { .. } | Kind::Dilation { .. })
    }

    /// `true` when the interpolant density meets its curvature bound with
    /// equality at every point (the rigid and self-similar flat flows).
    pub fn expects_pointwise_equality(&self) -> bool {
        self.at_design_calibration()
            && match self.kind {
                Kind::Translation { .. } => true,
                Kind::Dilation { alpha, .. } => alpha < 1.0,
                _ => false,
            }
    }

    /// Hand-built one-dimensional plan with assigned starting levels. Not
    /// required to be optimal — this is the entry point for broken inputs
    /// that the checks are expected to reject.
    pub fn crossed_custom(pairs: &[(f64, f64)], phi0: &[f64]) -> Result<Self, ScenarioError> {
        if pairs.is_empty() || pairs.len() != phi0.len() {
            return Err(bad("need one level per ray"));
        }
        let pts: Vec<(Point, Point)> = pairs
            .iter()
            .map(|&(a, b)| (vec![a], vec![b]))
            .collect();
        let masses = vec![1.0 / pairs.len() as f64; pairs.len()];
        Ok(Self {
            name: "crossed-levels".into(),
            params: DistortionParams::new(0.0, 2.0)?,
            plan: DynamicalPlan::from_pairs(&pts, &masses),
            levels: phi0.to_vec(),
            kind: Kind::Crossed {
                phi0: phi0.to_vec(),
            },
            calibration_overridden: false,
        })
    }

    /// The shipped counterexample: three crossing rays whose assigned levels
    /// are inconsistent in every way the structural checks test — the
    /// level-speed profile changes direction, the extended level rises along
    /// a crossing, and the plan is not squared-distance monotone.
    pub fn crossed_levels() -> Self {
        Self::crossed_custom(&[(0.0, 2.2), (1.0, 2.0), (2.0, 4.4)], &[0.0, 0.5, 0.6])
            .expect("built-in crossed scenario is well-formed")
    }

    /// Closed-form potential of the flow, if the scenario has one. The
    /// crossed plan deliberately has none: its levels are assigned, not
    /// generated by a potential.
    pub fn potential(&self) -> Option<Box<dyn TimePotential + '_>> {
        match &self.kind {
            Kind::Translation { v, .. } => {
                let v = *v;
                let speed2 = v[0] * v[0] + v[1] * v[1];
                Some(Box::new(ClosedFormPotential {
                    phi: move |t: f64, x: &[f64]| v[0] * x[0] + v[1] * x[1] + 0.5 * t * speed2,
                    grad: move |_: f64, _: &[f64]| speed2.sqrt(),
                }))
            }
            Kind::Dilation { alpha, .. } => {
                let alpha = *alpha;
                Some(Box::new(ClosedFormPotential {
                    phi: move |t: f64, x: &[f64]| {
                        0.5 * alpha * dot(x, x) / (1.0 - t * alpha)
                    },
                    grad: move |t: f64, x: &[f64]| alpha * norm(x) / (1.0 - t * alpha),
                }))
            }
            Kind::Interval { mu, nu, .. } => Some(Box::new(IntervalPotential {
                mu: *mu,
                nu: *nu,
            })),
            Kind::Crossed { .. } => None,
        }
    }

    /// Interpolant density (w.r.t. the scenario's reference measure) at the
    /// time-t point of the given ray. `None` where the density degenerates.
    pub fn rho(&self, ray: usize, t: f64) -> Option<f64> {
        match &self.kind {
            Kind::Translation { area, .. } => Some(1.0 / area),
            Kind::Dilation { alpha, area, .. } => {
                let shrink = 1.0 - t * alpha;
                if shrink > 1e-12 {
                    Some(shrink.powi(-2) / area)
                } else {
                    None
                }
            }
            Kind::Interval {
                ambient,
                z0,
                xs,
                maps,
                derivs,
                ..
            } => {
                let x = xs[ray];
                let xt = (1.0 - t) * x + t * maps[ray];
                let dt = (1.0 - t) + t * derivs[ray];
                Some(ambient.weight(x) / (z0 * dt * ambient.weight(xt)))
            }
            Kind::Crossed { .. } => None,
        }
    }

    /// Closed-form level speed of the given ray at time t.
    pub fn lambda(&self, ray: usize, t: f64) -> Option<f64> {
        match &self.kind {
            Kind::Translation { v, .. } => Some(1.0 / (v[0] * v[0] + v[1] * v[1])),
            Kind::Dilation { alpha, .. } => {
                let r0 = norm(&self.plan.rays[ray].0.from);
                Some((1.0 - t * alpha) / (alpha * alpha * r0 * r0))
            }
            Kind::Interval { derivs, .. } => {
                let l = self.plan.rays[ray].0.length();
                Some(((1.0 - t) + t * derivs[ray]) / (l * l))
            }
            Kind::Crossed { .. } => None,
        }
    }

    /// Mass of the moving fiber through the ray's level, per unit level, at
    /// time t. Computed from the time-t geometry on purpose, so that the
    /// decomposition drift check exercises honest arithmetic.
    pub fn fiber_mass(&self, ray: usize, t: f64) -> Option<f64> {
        let a = self.levels[ray];
        match &self.kind {
            Kind::Translation { v, lo, hi, .. } => {
                let speed2 = v[0] * v[0] + v[1] * v[1];
                let lo_t = [lo[0] - t * v[0], lo[1] - t * v[1]];
                let hi_t = [hi[0] - t * v[0], hi[1] - t * v[1]];
                let ell = box_slice_len(lo_t, hi_t, *v, a - t * speed2);
                Some(ell / speed2.sqrt())
            }
            Kind::Dilation { alpha, .. } => {
                let shrink = 1.0 - t * alpha;
                let rt = shrink * (2.0 * a / alpha).sqrt();
                let drda = shrink / (2.0 * a * alpha).sqrt();
                Some(TAU_2PI * rt * drda)
            }
            Kind::Interval {
                ambient,
                xs,
                maps,
                derivs,
                ..
            } => {
                let x = xs[ray];
                let xt = (1.0 - t) * x + t * maps[ray];
                let dt = (1.0 - t) + t * derivs[ray];
                let l = self.plan.rays[ray].0.length();
                Some(ambient.weight(xt) * dt / l)
            }
            Kind::Crossed { .. } => None,
        }
    }

    /// Mass swept by the ray's level fiber per unit time at time `tau`; the
    /// ratio of two of these is the contraction profile along the ray.
    pub fn time_fiber_mass(&self, ray: usize, tau: f64) -> Option<f64> {
        match &self.kind {
            Kind::Translation { v, lo, hi, .. } => {
                let a = self.levels[ray];
                let speed2 = v[0] * v[0] + v[1] * v[1];
                let lo_t = [lo[0] - tau * v[0], lo[1] - tau * v[1]];
                let hi_t = [hi[0] - tau * v[0], hi[1] - tau * v[1]];
                let ell = box_slice_len(lo_t, hi_t, *v, a - tau * speed2);
                Some(ell * speed2.sqrt())
            }
            Kind::Dilation { alpha, .. } => {
                let r0 = norm(&self.plan.rays[ray].0.from);
                Some(TAU_2PI * (1.0 - tau * alpha) * r0 * alpha * r0)
            }
            Kind::Interval {
                ambient, xs, maps, ..
            } => {
                let x = xs[ray];
                let xt = (1.0 - tau) * x + tau * maps[ray];
                let l = self.plan.rays[ray].0.length();
                Some(ambient.weight(xt) * l)
            }
            Kind::Crossed { .. } => None,
        }
    }

    /// `(level, speed)` pairs of the plan, for profile classification.
    pub fn profile_pairs(&self) -> Vec<(f64, f64)> {
        self.levels
            .iter()
            .zip(&self.plan.rays)
            .map(|(&a, (g, _))| (a, g.length()))
            .collect()
    }

    /// Start/end point pairs of the plan, for monotonicity certificates.
    pub fn plan_pairs(&self) -> Vec<(Point, Point)> {
        self.plan
            .rays
            .iter()
            .map(|(g, _)| (g.from.clone(), g.to.clone()))
            .collect()
    }

    /// Discrete optimal coupling between the endpoint marginals, with dual
    /// certificates. The crossed plan refuses: it is not a coupling worth
    /// certifying.
    pub fn discrete_coupling(&self) -> Result<Coupling, ScenarioError> {
        match &self.kind {
            Kind::Crossed { .. } => Err(ScenarioError::Unsupported("discrete_coupling")),
            Kind::Interval { .. } => {
                let mu = self.plan.at(0.0)?;
                let nu = self.plan.at(1.0)?;
                Ok(quantile_coupling(&mu, &nu, half_sq_cost)?)
            }
            _ => {
                let mu = self.plan.at(0.0)?;
                let nu = self.plan.at(1.0)?;
                Ok(solve_ot(&mu, &nu, half_sq_cost)?)
            }
        }
    }

    /// Monte Carlo level-speed estimate from strip masses, for scenarios
    /// with a two-dimensional support (box or annulus).
    pub fn lambda_strip_estimate<R: Rng>(
        &self,
        ray: usize,
        t: f64,
        eps_level: f64,
        eps_time: f64,
        proposals: usize,
        rng: &mut R,
    ) -> Result<f64, ScenarioError> {
        let a = self.levels[ray];
        match &self.kind {
            Kind::Translation { v, lo, hi, .. } => {
                let v = *v;
                let (lo, hi) = (*lo, *hi);
                let speed2 = v[0] * v[0] + v[1] * v[1];
                let speed = speed2.sqrt();
                // coordinate xi runs along the direction of motion
                let lo_t = [lo[0] - t * v[0], lo[1] - t * v[1]];
                let hi_t = [hi[0] - t * v[0], hi[1] - t * v[1]];
                let member_l = move |xi: f64| {
                    let lvl = speed * xi + t * speed2;
                    lvl > a - eps_level && lvl <= a
                };
                let jac_l = move |xi: f64| box_slice_len(lo_t, hi_t, v, speed * xi);
                let xi_hi = (a - t * speed2) / speed;
                let xi_lo = (a - eps_level - t * speed2) / speed;
                let pad = 0.1 * (xi_hi - xi_lo);
                let level_spec = StripSpec {
                    xi_range: (xi_lo - pad, xi_hi + pad),
                    jacobian: &jac_l,
                    member: &member_l,
                };

                let member_t = move |xi: f64| {
                    let tau = (a - speed * xi) / speed2;
                    tau > t && tau <= t + eps_time
                };
                let jac_t = move |xi: f64| {
                    let tau = (a - speed * xi) / speed2;
                    let lo_tau = [lo[0] - tau * v[0], lo[1] - tau * v[1]];
                    let hi_tau = [hi[0] - tau * v[0], hi[1] - tau * v[1]];
                    box_slice_len(lo_tau, hi_tau, v, speed * xi)
                };
                let ti_hi = (a - t * speed2) / speed;
                let ti_lo = (a - (t + eps_time) * speed2) / speed;
                let padt = 0.1 * (ti_hi - ti_lo);
                let time_spec = StripSpec {
                    xi_range: (ti_lo - padt, ti_hi + padt),
                    jacobian: &jac_t,
                    member: &member_t,
                };
                Ok(lambda_strip(
                    &level_spec,
                    eps_level,
                    &time_spec,
                    eps_time,
                    proposals,
                    rng,
                )?)
            }
            Kind::Dilation {
                alpha, r_lo, r_hi, ..
            } => {
                let (alpha, r_lo, r_hi) = (*alpha, *r_lo, *r_hi);
                let shrink = 1.0 - t * alpha;
                // coordinate xi is the radius at the relevant time
                let jac = move |xi: f64| TAU_2PI * xi;
                let member_l = move |xi: f64| {
                    let s = xi / shrink; // start radius of the ray through xi
                    let lvl = alpha * s * s / 2.0;
                    s >= r_lo && s <= r_hi && lvl > a - eps_level && lvl <= a
                };
                let r_t = |lvl: f64| shrink * (2.0 * lvl / alpha).sqrt();
                let xi_lo = r_t(a - eps_level);
                let xi_hi = r_t(a);
                let pad = 0.1 * (xi_hi - xi_lo);
                let level_spec = StripSpec {
                    xi_range: (xi_lo - pad, xi_hi + pad),
                    jacobian: &jac,
                    member: &member_l,
                };

                let ra = (2.0 * a / alpha).sqrt();
                let member_t = move |xi: f64| {
                    let tau = (1.0 - xi / ra) / alpha;
                    tau > t && tau <= t + eps_time
                };
                let ti_hi = (1.0 - t * alpha) * ra;
                let ti_lo = (1.0 - (t + eps_time) * alpha) * ra;
                let padt = 0.1 * (ti_hi - ti_lo);
                let time_spec = StripSpec {
                    xi_range: (ti_lo - padt, ti_hi + padt),
                    jacobian: &jac,
                    member: &member_t,
                };
                Ok(lambda_strip(
                    &level_spec,
                    eps_level,
                    &time_spec,
                    eps_time,
                    proposals,
                    rng,
                )?)
            }
            _ => Err(ScenarioError::Unsupported("lambda_strip_estimate")),
        }
    }

    /// Fiber mass per unit level from a Monte Carlo level-strip mass, an
    /// estimate of [`Scenario::fiber_mass`] that never touches the closed
    /// forms. The strip is centered on the ray's level so a linear variation
    /// of the fiber mass across it cancels to first order. Planar supports
    /// only.
    pub fn fiber_mass_strip_estimate<R: Rng>(
        &self,
        ray: usize,
        t: f64,
        eps_level: f64,
        proposals: usize,
        rng: &mut R,
    ) -> Result<f64, ScenarioError> {
        let a = self.levels[ray];
        let (a_lo, a_hi) = (a - 0.5 * eps_level, a + 0.5 * eps_level);
        match &self.kind {
            Kind::Translation { v, lo, hi, .. } => {
                let v = *v;
                let speed2 = v[0] * v[0] + v[1] * v[1];
                let speed = speed2.sqrt();
                let lo_t = [lo[0] - t * v[0], lo[1] - t * v[1]];
                let hi_t = [hi[0] - t * v[0], hi[1] - t * v[1]];
                let member = move |xi: f64| {
                    let lvl = speed * xi + t * speed2;
                    lvl > a_lo && lvl <= a_hi
                };
                let jac = move |xi: f64| box_slice_len(lo_t, hi_t, v, speed * xi);
                let xi_hi = (a_hi - t * speed2) / speed;
                let xi_lo = (a_lo - t * speed2) / speed;
                let pad = 0.1 * (xi_hi - xi_lo);
                let spec = StripSpec {
                    xi_range: (xi_lo - pad, xi_hi + pad),
                    jacobian: &jac,
                    member: &member,
                };
                Ok(strip_mass(&spec, proposals, rng)?.mass / eps_level)
            }
            Kind::Dilation {
                alpha, r_lo, r_hi, ..
            } => {
                let (alpha, r_lo, r_hi) = (*alpha, *r_lo, *r_hi);
                let shrink = 1.0 - t * alpha;
                let jac = move |xi: f64| TAU_2PI * xi;
                let member = move |xi: f64| {
                    let s = xi / shrink;
                    let lvl = alpha * s * s / 2.0;
                    s >= r_lo && s <= r_hi && lvl > a_lo && lvl <= a_hi
                };
                let r_t = |lvl: f64| shrink * (2.0 * lvl / alpha).sqrt();
                let xi_lo = r_t(a_lo);
                let xi_hi = r_t(a_hi);
                let pad = 0.1 * (xi_hi - xi_lo);
                let spec = StripSpec {
                    xi_range: (xi_lo - pad, xi_hi + pad),
                    jacobian: &jac,
                    member: &member,
                };
                Ok(strip_mass(&spec, proposals, rng)?.mass / eps_level)
            }
            _ => Err(ScenarioError::Unsupported("fiber_mass_strip_estimate")),
        }
    }

    /// Worst one-sided level decrement over the crossed plan's rays at time
    /// t, using the nearest crossing membership to extend each ray's level
    /// off its own fiber. Negative margin means the level rises along some
    /// ray — the defect this scenario exists to exhibit.
    pub fn crossing_margin(&self, t: f64) -> Result<f64, ScenarioError> {
        let phi0 = match &self.kind {
            Kind::Crossed { phi0 } => phi0,
            _ => return Err(ScenarioError::Unsupported("crossing_margin")),
        };
        let rays = &self.plan.rays;
        let mut worst = f64::INFINITY;
        let mut any = false;
        for i in 0..rays.len() {
            let (xi, di) = (rays[i].0.from[0], rays[i].0.to[0] - rays[i].0.from[0]);
            if di.abs() < 1e-15 {
                continue;
            }
            // nearest time at which ray i passes through another ray's
            // time-t fiber point
            let mut best: Option<(f64, f64)> = None;
            for (j, (g, _)) in rays.iter().enumerate() {
                if j == i {
                    continue;
                }
                let pos_j = g.at(t)[0];
                let tau = (pos_j - xi) / di;
                if (0.0..=1.0).contains(&tau) && (tau - t).abs() > 1e-12 {
                    let closer = match best {
                        None => true,
                        Some((b, _)) => (tau - t).abs() < (b - t).abs(),
                    };
                    if closer {
                        best = Some((tau, phi0[j]));
                    }
                }
            }
            if let Some((tau, lvl)) = best {
                any = true;
                // linear extension through (t, own level) and (tau, met level)
                let slope = (lvl - phi0[i]) / (tau - t);
                worst = worst.min(-slope);
            }
        }
        if !any {
            return Err(ScenarioError::InsufficientMembership(t));
        }
        Ok(worst)
    }

    /// `true` when the scenario collapses all mass to a point at `t = 1`.
    pub fn is_collapse(&self) -> bool {
        matches!(&self.kind, Kind::Dilation { alpha, .. } if *alpha >= 1.0)
    }

    /// `true` when endpoint and interpolant densities exist at every grid
    /// time (rules out the collapse and the crossed plan).
    pub fn has_densities(&self) -> bool {
        match &self.kind {
            Kind::Crossed { .. } => false,
            Kind::Dilation { alpha, .. } => *alpha < 1.0,
            _ => true,
        }
    }

    /// Time grid the scenario's checks are meant to run on.
    pub fn default_t_grid(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Crossed { .. } => vec![0.2, 0.325, 0.45, 0.575, 0.7],
            Kind::Dilation { alpha, .. } if *alpha >= 1.0 => {
                (0..10).map(|i| i as f64 * 0.1).collect()
            }
            _ => (0..9).map(|i| i as f64 / 8.0).collect(),
        }
    }
}
