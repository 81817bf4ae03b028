//! Splitting interpolant densities along level classes, and the convexity and
//! contraction checks built on that splitting.
//!
//! At a fixed level class the interpolant density factors as
//! `rho_t = c * h_t / lambda_t`: a class constant `c`, the conditional density
//! `h` on the moving fiber, and the level speed `lambda`. The functions here
//! certify that factorization numerically: [`class_constant_drift`] measures
//! how constant `c` really is across times, [`cd_pointwise_residual`] and
//! [`cd_reduced_residual`] evaluate curvature-dimension convexity residuals
//! for `rho` (full dimension) and `h` (one dimension down),
//! [`level_speed_profile`] gates the linear-speed prediction on a monotone
//! level-to-speed relation, [`build_w2_from_monotone`] turns a class into a
//! family of discrete measures that is exactly affine in the 2-Wasserstein
//! distance, and [`measure_contraction_bounds`] brackets fiber-mass ratios
//! between model contraction rates.

use crate::distortion::{sigma, tau, DistortionError, DistortionParams};
use crate::num::{self, Point};
use crate::ot::{DiscreteMeasure, OtError};
use crate::spaces::GeodesicSegment;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("need at least {need} samples, got {got}")]
    NotEnoughSamples { need: usize, got: usize },
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("density values must be positive and finite, got {0}")]
    BadDensity(f64),
    #[error("time {0} outside [0, 1]")]
    BadTime(f64),
    #[error("interior time must sit strictly between the endpoint times")]
    BadInteriorTime,
    #[error("separation must be finite and nonnegative, got {0}")]
    BadSeparation(f64),
    #[error("speed must be positive and finite, got {0}")]
    BadSpeed(f64),
    #[error("quotient dimension {0} is below 1; the reduced check needs n - 1 >= 1")]
    BadQuotientDimension(f64),
    #[error("fractions must satisfy 0 < r <= R < 1, got r = {r}, big_r = {big_r}")]
    BadFractionPair { r: f64, big_r: f64 },
    #[error("level windows must be ordered, disjoint, and sit below the class level")]
    BadWindows,
    #[error("every class member was excluded by the window constraints")]
    NoUsableMembers,
    #[error("level-speed profile changes direction: {rising} rising and {falling} falling steps")]
    MixedProfile { rising: usize, falling: usize },
    #[error("level-speed profile is {detected:?} but {requested:?} was required")]
    ProfileMismatch {
        requested: MonotoneSense,
        detected: ProfileSense,
    },
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Ot(#[from] OtError),
}

fn ensure_density(v: f64) -> Result<f64, DecompositionError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(DecompositionError::BadDensity(v))
    }
}

/// One time slice of the factorization along a level class: the interpolant
/// density, the fiber conditional, and the level speed at the same point.
#[derive(Clone, Copy, Debug)]
pub struct DecompositionSample {
    pub t: f64,
    pub rho: f64,
    pub h: f64,
    pub lambda: f64,
}

impl DecompositionSample {
    /// The constant the factorization predicts: `rho * lambda / h`.
    pub fn class_constant(&self) -> f64 {
        self.rho * self.lambda / self.h
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassConstantReport {
    pub mean: f64,
    pub max_rel_drift: f64,
}

/// How far the per-slice constants stray from their mean, relatively.
/// A faithful factorization keeps the drift at estimator-noise level.
pub fn class_constant_drift(
    samples: &[DecompositionSample],
) -> Result<ClassConstantReport, DecompositionError> {
    if samples.is_empty() {
        return Err(DecompositionError::NotEnoughSamples { need: 1, got: 0 });
    }
    let mut vals = Vec::with_capacity(samples.len());
    for s in samples {
        ensure_density(s.rho)?;
        ensure_density(s.h)?;
        ensure_density(s.lambda)?;
        vals.push(s.class_constant());
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let max_rel_drift = vals
        .iter()
        .map(|v| (v - mean).abs() / mean)
        .fold(0.0, f64::max);
    Ok(ClassConstantReport {
        mean,
        max_rel_drift,
    })
}

/// Outcome of a convexity check: nonnegative residual means the inequality
/// holds at this point. A supercritical separation makes the comparison
/// coefficients blow up; the residual is then reported as negative infinity.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureCheck {
    pub residual: f64,
    pub supercritical: bool,
}

/// Pointwise convexity residual for the interpolant density along one
/// geodesic: `rho_t^(-1/n) - [tau^(1-t)(d) rho_0^(-1/n) + tau^(t)(d) rho_1^(-1/n)]`.
pub fn cd_pointwise_residual(
    p: DistortionParams,
    t: f64,
    separation: f64,
    rho0: f64,
    rho1: f64,
    rho_t: f64,
) -> Result<CurvatureCheck, DecompositionError> {
    if !t.is_finite() || !(0.0..=1.0).contains(&t) {
        return Err(DecompositionError::BadTime(t));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(DecompositionError::BadSeparation(separation));
    }
    ensure_density(rho0)?;
    ensure_density(rho1)?;
    ensure_density(rho_t)?;
    let back = tau(p, 1.0 - t, separation)?;
    let fwd = tau(p, t, separation)?;
    if back.is_infinite() || fwd.is_infinite() {
        return Ok(CurvatureCheck {
            residual: f64::NEG_INFINITY,
            supercritical: true,
        });
    }
    let e = -1.0 / p.n;
    let lhs = rho_t.powf(e);
    let rhs = back.to_f64() * rho0.powf(e) + fwd.to_f64() * rho1.powf(e);
    Ok(CurvatureCheck {
        residual: lhs - rhs,
        supercritical: false,
    })
}

/// Convexity residual for the fiber conditional `h` along the class, run one
/// dimension down: `h` at an interior time is compared against the
/// sigma-weighted combination of its values at two bracketing times. The
/// comparison distance is `(tau1 - tau0) * speed`.
pub fn cd_reduced_residual(
    p: DistortionParams,
    tau0: f64,
    tau_mid: f64,
    tau1: f64,
    speed: f64,
    h0: f64,
    h_mid: f64,
    h1: f64,
) -> Result<CurvatureCheck, DecompositionError> {
    for &v in &[tau0, tau_mid, tau1] {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(DecompositionError::BadTime(v));
        }
    }
    if !(tau0 < tau_mid && tau_mid < tau1) {
        return Err(DecompositionError::BadInteriorTime);
    }
    if !speed.is_finite() || speed <= 0.0 {
        return Err(DecompositionError::BadSpeed(speed));
    }
    ensure_density(h0)?;
    ensure_density(h_mid)?;
    ensure_density(h1)?;
    let n_red = p.n - 1.0;
    if n_red < 1.0 {
        return Err(DecompositionError::BadQuotientDimension(n_red));
    }
    let reduced = DistortionParams::new(p.k, n_red)?;
    let theta = (tau1 - tau0) * speed;
    let s = (tau_mid - tau0) / (tau1 - tau0);
    let c0 = sigma(reduced, 1.0 - s, theta)?;
    let c1 = sigma(reduced, s, theta)?;
    if c0.is_infinite() || c1.is_infinite() {
        return Ok(CurvatureCheck {
            residual: f64::NEG_INFINITY,
            supercritical: true,
        });
    }
    let e = -1.0 / n_red;
    let lhs = h_mid.powf(e);
    let rhs = c0.to_f64() * h0.powf(e) + c1.to_f64() * h1.powf(e);
    Ok(CurvatureCheck {
        residual: lhs - rhs,
        supercritical: false,
    })
}

/// Which monotone direction the caller demands of the level-speed profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonotoneSense {
    /// Accept either direction, reject only a direction change.
    Auto,
    NonDecreasing,
    NonIncreasing,
}

/// Direction actually detected in the profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileSense {
    Constant,
    NonDecreasing,
    NonIncreasing,
    Mixed,
}

/// The profile `F(a) = a - f(a)^2 / 2` over the classes, sorted by level,
/// with the detected direction.
#[derive(Clone, Debug)]
pub struct SpeedProfile {
    /// `(level, F)` pairs in level order.
    pub f_values: Vec<(f64, f64)>,
    pub rising: usize,
    pub falling: usize,
    pub detected: ProfileSense,
}

/// Evaluates `F(a) = a - f(a)^2 / 2` on `(level, speed)` pairs and classifies
/// its direction. Steps within `tol` of zero count as flat.
pub fn level_speed_profile(
    classes: &[(f64, f64)],
    tol: f64,
) -> Result<SpeedProfile, DecompositionError> {
    if classes.is_empty() {
        return Err(DecompositionError::NotEnoughSamples { need: 1, got: 0 });
    }
    let mut pts = Vec::with_capacity(classes.len());
    for &(a, f) in classes {
        if !a.is_finite() {
            return Err(DecompositionError::BadTime(a));
        }
        if !f.is_finite() || f < 0.0 {
            return Err(DecompositionError::BadSpeed(f));
        }
        pts.push((a, a - 0.5 * f * f));
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut rising = 0usize;
    let mut falling = 0usize;
    for w in pts.windows(2) {
        let df = w[1].1 - w[0].1;
        if df > tol {
            rising += 1;
        } else if df < -tol {
            falling += 1;
        }
    }
    let detected = match (rising > 0, falling > 0) {
        (true, true) => ProfileSense::Mixed,
        (true, false) => ProfileSense::NonDecreasing,
        (false, true) => ProfileSense::NonIncreasing,
        (false, false) => ProfileSense::Constant,
    };
    Ok(SpeedProfile {
        f_values: pts,
        rising,
        falling,
        detected,
    })
}

/// Enforces the requested direction on a detected profile. A mixed profile
/// is rejected under every setting; a constant profile satisfies all of
/// them. Returns the detected sense so reports can surface it.
pub fn require_profile(
    profile: &SpeedProfile,
    requested: MonotoneSense,
) -> Result<ProfileSense, DecompositionError> {
    match (profile.detected, requested) {
        (ProfileSense::Mixed, _) => Err(DecompositionError::MixedProfile {
            rising: profile.rising,
            falling: profile.falling,
        }),
        (ProfileSense::NonDecreasing, MonotoneSense::NonIncreasing)
        | (ProfileSense::NonIncreasing, MonotoneSense::NonDecreasing) => {
            Err(DecompositionError::ProfileMismatch {
                requested,
                detected: profile.detected,
            })
        }
        (detected, _) => Ok(detected),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AffineFitReport {
    pub intercept: f64,
    pub slope: f64,
    pub max_deviation: f64,
}

/// Least-squares affine fit of `values` over `ts` and the largest pointwise
/// deviation from that fit. Used to certify that level speeds vary linearly
/// in time.
pub fn affine_deviation(ts: &[f64], values: &[f64]) -> Result<AffineFitReport, DecompositionError> {
    if ts.len() != values.len() {
        return Err(DecompositionError::LengthMismatch(ts.len(), values.len()));
    }
    if ts.len() < 2 {
        return Err(DecompositionError::NotEnoughSamples {
            need: 2,
            got: ts.len(),
        });
    }
    for &v in ts.iter().chain(values.iter()) {
        if !v.is_finite() {
            return Err(DecompositionError::BadDensity(v));
        }
    }
    let (intercept, slope) = num::affine_fit(ts, values);
    let max_deviation = ts
        .iter()
        .zip(values)
        .map(|(&t, &v)| (v - (intercept + slope * t)).abs())
        .fold(0.0, f64::max);
    Ok(AffineFitReport {
        intercept,
        slope,
        max_deviation,
    })
}

/// A half-open band of level values, `lo < hi`.
#[derive(Clone, Copy, Debug)]
pub struct LevelWindow {
    pub lo: f64,
    pub hi: f64,
}

impl LevelWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self, DecompositionError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(DecompositionError::BadWindows)
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Discrete measures supported on two sliding level windows, one family
/// member per requested time, plus the endpoint pair set whose cyclical
/// monotonicity certifies the family is a 2-Wasserstein geodesic.
#[derive(Clone, Debug)]
pub struct W2Construction {
    pub times: Vec<f64>,
    pub measures: Vec<DiscreteMeasure>,
    pub endpoint_pairs: Vec<(Point, Point)>,
    /// Indices of members whose rays were too short to carry both windows.
    pub excluded: Vec<usize>,
}

/// Builds the sliding-window measure family over one level class.
///
/// Along a member ray of length `len`, level values decrease linearly from
/// `level` at its start, so a window `(lo, hi)` of levels below the class
/// level occupies the parameter range `[(level - hi)/len, (level - lo)/len]`.
/// At time `t` each member carries the uniform measure on the interpolated
/// window `(1-t)*upper + t*lower`, discretized at `samples_per_member`
/// midpoints. The resulting family is exactly affine in the 2-Wasserstein
/// distance. Members that cannot fit the lower window inside their span are
/// excluded and reported.
pub fn build_w2_from_monotone(
    members: &[(GeodesicSegment, f64)],
    level: f64,
    upper: LevelWindow,
    lower: LevelWindow,
    samples_per_member: usize,
    times: &[f64],
) -> Result<W2Construction, DecompositionError> {
    if members.is_empty() || times.is_empty() || samples_per_member == 0 {
        return Err(DecompositionError::NotEnoughSamples { need: 1, got: 0 });
    }
    if !(level.is_finite() && upper.hi < level && lower.hi < upper.lo) {
        return Err(DecompositionError::BadWindows);
    }
    for &t in times {
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(DecompositionError::BadTime(t));
        }
    }

    // Window endpoints as ray parameters: start of the upper window is the
    // earliest time, end of the lower window the latest; both must stay
    // inside (0, 1).
    let mut included = Vec::new();
    let mut excluded = Vec::new();
    for (idx, (seg, w)) in members.iter().enumerate() {
        let len = seg.length();
        if len > 0.0 && *w > 0.0 && lower.lo > level - len {
            let r0 = (level - upper.hi) / len;
            let l0 = upper.width() / len;
            let r1 = (level - lower.hi) / len;
            let l1 = lower.width() / len;
            included.push((seg, *w, r0, l0, r1, l1));
        } else {
            excluded.push(idx);
        }
    }
    if included.is_empty() {
        return Err(DecompositionError::NoUsableMembers);
    }

    let inv = 1.0 / samples_per_member as f64;
    let mut measures = Vec::with_capacity(times.len());
    for &t in times {
        let mut pts = Vec::new();
        let mut wts = Vec::new();
        for &(seg, w, r0, l0, r1, l1) in &included {
            let rt = (1.0 - t) * r0 + t * r1;
            let lt = (1.0 - t) * l0 + t * l1;
            for k in 0..samples_per_member {
                let s = (k as f64 + 0.5) * inv;
                pts.push(seg.at(rt + s * lt));
                wts.push(w * inv);
            }
        }
        measures.push(DiscreteMeasure::new(pts, wts)?);
    }

    let mut endpoint_pairs = Vec::new();
    for &(seg, _, r0, l0, r1, l1) in &included {
        for k in 0..samples_per_member {
            let s = (k as f64 + 0.5) * inv;
            endpoint_pairs.push((seg.at(r0 + s * l0), seg.at(r1 + s * l1)));
        }
    }

    Ok(W2Construction {
        times: times.to_vec(),
        measures,
        endpoint_pairs,
        excluded,
    })
}

/// Model contraction bounds for a fiber-mass ratio `g(r)/g(R)` along a ray,
/// with `0 < r <= R < 1` fractions of the ray and the comparison run one
/// dimension down. Nonnegative residuals mean the ratio sits inside the
/// bracket.
#[derive(Clone, Copy, Debug)]
pub struct ContractionBounds {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub lower_residual: f64,
    pub upper_residual: f64,
    pub supercritical: bool,
}

/// Brackets `mass_ratio = g(r)/g(R)` between the model rates
/// `sigma^(r/R)(R * len)^(n-1)` from the ray start and
/// `sigma^((1-R)/(1-r))((1-r) * len)^(-(n-1))` from the ray end.
pub fn measure_contraction_bounds(
    p: DistortionParams,
    r: f64,
    big_r: f64,
    ray_length: f64,
    mass_ratio: f64,
) -> Result<ContractionBounds, DecompositionError> {
    if !(r.is_finite() && big_r.is_finite() && 0.0 < r && r <= big_r && big_r < 1.0) {
        return Err(DecompositionError::BadFractionPair { r, big_r });
    }
    if !ray_length.is_finite() || ray_length <= 0.0 {
        return Err(DecompositionError::BadSpeed(ray_length));
    }
    ensure_density(mass_ratio)?;
    let n_red = p.n - 1.0;
    if n_red < 1.0 {
        return Err(DecompositionError::BadQuotientDimension(n_red));
    }
    let reduced = DistortionParams::new(p.k, n_red)?;
    let from_start = sigma(reduced, r / big_r, big_r * ray_length)?;
    let from_end = sigma(reduced, (1.0 - big_r) / (1.0 - r), (1.0 - r) * ray_length)?;
    if from_start.is_infinite() || from_end.is_infinite() {
        return Ok(ContractionBounds {
            lower_bound: f64::INFINITY,
            upper_bound: 0.0,
            lower_residual: f64::NEG_INFINITY,
            upper_residual: f64::NEG_INFINITY,
            supercritical: true,
        });
    }
    let lower_bound = from_start.to_f64().powf(n_red);
    let upper_bound = from_end.to_f64().powf(-n_red);
    Ok(ContractionBounds {
        lower_bound,
        upper_bound,
        lower_residual: mass_ratio - lower_bound,
        upper_residual: upper_bound - mass_ratio,
        supercritical: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::{check_cyclical_monotonicity, half_sq_cost, solve_w2};
    use crate::spaces::{monotone_map, monotone_map_derivative, DensityKind, WeightedSegment};
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    fn params(k: f64, n: f64) -> DistortionParams {
        DistortionParams::new(k, n).unwrap()
    }

    #[test]
    fn class_constant_recovers_shrink_flow_closed_form() {
        // Planar shrink toward the origin, rate 0.5, shell radius 1.2:
        // rho = (1-t/2)^{-2}/A, lambda = (1-t/2)/(alpha^2 r^2),
        // h = (1-t/2)^{-1}/(2 pi alpha r^2); the constant is 2 pi/(A alpha).
        let alpha = 0.5;
        let r0 = 1.2;
        let area = PI * (1.5f64.powi(2) - 0.5f64.powi(2));
        let samples: Vec<DecompositionSample> = (0..9)
            .map(|i| {
                let t = i as f64 / 8.0;
                let shrink = 1.0 - t * alpha;
                DecompositionSample {
                    t,
                    rho: shrink.powi(-2) / area,
                    lambda: shrink / (alpha * alpha * r0 * r0),
                    h: shrink.powi(-1) / (2.0 * PI * alpha * r0 * r0),
                }
            })
            .collect();
        let rep = class_constant_drift(&samples).unwrap();
        assert!((rep.mean - 2.0 * PI / (area * alpha)).abs() < 1e-12);
        assert!(rep.max_rel_drift < 1e-14);
    }

    #[test]
    fn drift_detects_broken_factorization() {
        let mut samples: Vec<DecompositionSample> = (0..5)
            .map(|i| DecompositionSample {
                t: i as f64 / 4.0,
                rho: 2.0,
                h: 0.7,
                lambda: 1.3,
            })
            .collect();
        samples[2].h *= 1.01;
        let rep = class_constant_drift(&samples).unwrap();
        assert!(rep.max_rel_drift > 5e-3);
        assert!(class_constant_drift(&[]).is_err());
    }

    #[test]
    fn flat_residual_vanishes_on_harmonic_profile() {
        // Zero curvature turns the coefficients into plain interpolation
        // weights; a density whose -1/n power is affine in t gives equality.
        let p = params(0.0, 2.0);
        for i in 1..8 {
            let t = i as f64 / 8.0;
            let mixed = (1.0 - t) * 1.0 + t * 2.0; // rho0 = 1, rho1 = 1/4
            let rho_t = mixed.powi(-2);
            let c = cd_pointwise_residual(p, t, 1.7, 1.0, 0.25, rho_t).unwrap();
            assert!(!c.supercritical);
            assert!(c.residual.abs() < 1e-12, "{}", c.residual);
        }
    }

    #[test]
    fn residual_flags_overlong_geodesic() {
        // k d^2 >= (n-1) pi^2 makes the endpoint coefficients blow up.
        let p = params(1.0, 2.0);
        let c = cd_pointwise_residual(p, 0.5, 3.2, 1.0, 1.0, 1.0).unwrap();
        assert!(c.supercritical);
        assert_eq!(c.residual, f64::NEG_INFINITY);

        let sub = cd_pointwise_residual(p, 0.5, 3.0, 1.0, 1.0, 1.0).unwrap();
        assert!(!sub.supercritical);
    }

    #[test]
    fn sine_squared_interval_meets_its_design_bound() {
        // The sin^2-weighted interval behaves like a 3-dimensional space with
        // curvature 2; monotone-map interpolants must satisfy the pointwise
        // inequality at that calibration.
        let kind = DensityKind::SinPower { exponent: 2 };
        let ambient = WeightedSegment::new(0.0, PI, kind).unwrap();
        let mu = WeightedSegment::new(0.4, 1.2, kind).unwrap();
        let nu = WeightedSegment::new(1.7, 2.6, kind).unwrap();
        let p = params(2.0, 3.0);
        let z0 = mu.mass();
        let z1 = nu.mass();
        let mut min_res = f64::INFINITY;
        for i in 0..9 {
            let x = 0.4 + 0.8 * (i as f64 + 0.5) / 9.0;
            let tx = monotone_map(&mu, &nu, x).unwrap();
            let tp = monotone_map_derivative(&mu, &nu, x).unwrap();
            let sep = (tx - x).abs();
            for j in 1..8 {
                let t = j as f64 / 8.0;
                let xt = (1.0 - t) * x + t * tx;
                let dt = (1.0 - t) + t * tp;
                let rho_t = ambient.weight(x) / (z0 * dt * ambient.weight(xt));
                let c = cd_pointwise_residual(p, t, sep, 1.0 / z0, 1.0 / z1, rho_t).unwrap();
                assert!(!c.supercritical);
                min_res = min_res.min(c.residual);
            }
        }
        assert!(min_res >= -1e-9, "{min_res}");
    }

    #[test]
    fn reduced_equality_for_sine_reciprocal_fibers() {
        // h^{-1/(n-1)} proportional to sin(position) solves the comparison
        // equation, so the reduced inequality is an identity — at the
        // midpoint and at off-center interior times alike.
        let p = params(2.0, 3.0);
        let h = |tau: f64| (0.4 + 2.0 * tau).sin().powi(-2);
        let c = cd_reduced_residual(p, 0.1, 0.3, 0.5, 2.0, h(0.1), h(0.3), h(0.5)).unwrap();
        assert!(c.residual.abs() < 1e-12, "{}", c.residual);
        let c2 = cd_reduced_residual(p, 0.1, 0.2, 0.5, 2.0, h(0.1), h(0.2), h(0.5)).unwrap();
        assert!(c2.residual.abs() < 1e-12, "{}", c2.residual);
    }

    #[test]
    fn reduced_flat_equality_and_dimension_guard() {
        // Flat reduced check: h^{-1} affine in tau gives exact equality.
        let p = params(0.0, 2.0);
        let h = |tau: f64| 1.0 / (2.0 + 0.6 * tau);
        let c = cd_reduced_residual(p, 0.2, 0.45, 0.7, 1.3, h(0.2), h(0.45), h(0.7)).unwrap();
        assert!(c.residual.abs() < 1e-14, "{}", c.residual);

        let err =
            cd_reduced_residual(params(0.0, 1.5), 0.2, 0.45, 0.7, 1.3, 1.0, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, DecompositionError::BadQuotientDimension(_)));
    }

    #[test]
    fn profile_detection_and_requirements() {
        // Crossing design: speeds are not a monotone function of the level.
        let crossed = [(0.0, 2.2), (0.5, 1.0), (0.6, 2.4)];
        let prof = level_speed_profile(&crossed, 1e-9).unwrap();
        assert_eq!(prof.detected, ProfileSense::Mixed);
        assert!(matches!(
            require_profile(&prof, MonotoneSense::Auto),
            Err(DecompositionError::MixedProfile {
                rising: 1,
                falling: 1
            })
        ));
        assert!(require_profile(&prof, MonotoneSense::NonDecreasing).is_err());

        // Shrink flow: F(a) = a (1 - alpha) rises with the level.
        let alpha = 0.5;
        let shells: Vec<(f64, f64)> = (1..6)
            .map(|i| {
                let r = i as f64 * 0.3;
                (alpha * r * r / 2.0, alpha * r)
            })
            .collect();
        let prof = level_speed_profile(&shells, 1e-12).unwrap();
        assert_eq!(prof.detected, ProfileSense::NonDecreasing);
        assert_eq!(
            require_profile(&prof, MonotoneSense::Auto).unwrap(),
            ProfileSense::NonDecreasing
        );
        assert!(require_profile(&prof, MonotoneSense::NonDecreasing).is_ok());
        assert!(matches!(
            require_profile(&prof, MonotoneSense::NonIncreasing),
            Err(DecompositionError::ProfileMismatch { .. })
        ));

        // Full collapse to a point: F vanishes identically and satisfies
        // every requested direction.
        let collapse: Vec<(f64, f64)> = (1..6)
            .map(|i| {
                let r = i as f64 * 0.3;
                (r * r / 2.0, r)
            })
            .collect();
        let prof = level_speed_profile(&collapse, 1e-12).unwrap();
        assert_eq!(prof.detected, ProfileSense::Constant);
        assert!(require_profile(&prof, MonotoneSense::NonIncreasing).is_ok());
    }

    #[test]
    fn affine_deviation_exact_and_curved() {
        let ts: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let lin: Vec<f64> = ts.iter().map(|t| 0.7 - 0.3 * t).collect();
        let rep = affine_deviation(&ts, &lin).unwrap();
        assert!((rep.intercept - 0.7).abs() < 1e-12);
        assert!((rep.slope + 0.3).abs() < 1e-12);
        assert!(rep.max_deviation < 1e-12);

        let quad: Vec<f64> = ts.iter().map(|t| t * t).collect();
        let rep = affine_deviation(&ts, &quad).unwrap();
        assert!(rep.max_deviation > 0.05);
    }

    #[test]
    fn window_family_is_exactly_affine_in_w2() {
        // Two usable member rays plus one too short to carry the windows.
        let members = vec![
            (
                GeodesicSegment {
                    from: vec![0.0, 0.0],
                    to: vec![2.0, 0.0],
                },
                0.5,
            ),
            (
                GeodesicSegment {
                    from: vec![0.0, 1.0],
                    to: vec![2.0, 1.0],
                },
                0.5,
            ),
            (
                GeodesicSegment {
                    from: vec![0.0, 2.0],
                    to: vec![1.2, 2.0],
                },
                0.5,
            ),
        ];
        let upper = LevelWindow::new(0.2, 0.8).unwrap();
        let lower = LevelWindow::new(-0.5, 0.0).unwrap();
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let built = build_w2_from_monotone(&members, 1.0, upper, lower, 4, &times).unwrap();
        assert_eq!(built.excluded, vec![2]);
        assert_eq!(built.measures.len(), 5);
        assert_eq!(built.measures[0].len(), 8);

        let base = solve_w2(&built.measures[0], &built.measures[4])
            .unwrap()
            .distance;
        assert!(base > 0.1);
        for (i, &s) in times.iter().enumerate() {
            for (j, &t) in times.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = solve_w2(&built.measures[i], &built.measures[j])
                    .unwrap()
                    .distance;
                assert!(
                    (d - (t - s).abs() * base).abs() < 1e-9,
                    "pair {i},{j}: {d} vs {}",
                    (t - s).abs() * base
                );
            }
        }

        let cert = check_cyclical_monotonicity(&built.endpoint_pairs, half_sq_cost, 3, 10_000_000)
            .unwrap();
        assert!(cert.is_monotone(1e-9), "margin {}", cert.worst_margin);
    }

    #[test]
    fn window_construction_rejects_bad_input() {
        let seg = GeodesicSegment {
            from: vec![0.0],
            to: vec![2.0],
        };
        let upper = LevelWindow::new(0.2, 0.8).unwrap();
        let lower = LevelWindow::new(-0.5, 0.0).unwrap();
        // Windows out of order (lower above upper).
        assert!(matches!(
            build_w2_from_monotone(&[(seg.clone(), 1.0)], 1.0, lower, upper, 2, &[0.0, 1.0]),
            Err(DecompositionError::BadWindows)
        ));
        // Window overlap.
        let touching = LevelWindow::new(0.3, 0.9).unwrap();
        assert!(matches!(
            build_w2_from_monotone(
                &[(seg.clone(), 1.0)],
                1.0,
                upper,
                touching,
                2,
                &[0.0, 1.0]
            ),
            Err(DecompositionError::BadWindows)
        ));
        // Every member too short.
        let short = GeodesicSegment {
            from: vec![0.0],
            to: vec![1.2],
        };
        assert!(matches!(
            build_w2_from_monotone(&[(short, 1.0)], 1.0, upper, lower, 2, &[0.0, 1.0]),
            Err(DecompositionError::NoUsableMembers)
        ));
        assert!(LevelWindow::new(0.5, 0.5).is_err());
    }

    #[test]
    fn contraction_bounds_flat_and_sine() {
        // Flat: the bracket is [(r/R)^{n-1}, ((1-r)/(1-R))^{n-1}] around 1.
        let b = measure_contraction_bounds(params(0.0, 2.0), 0.3, 0.6, 1.0, 1.0).unwrap();
        assert!((b.lower_bound - 0.5).abs() < 1e-15);
        assert!((b.upper_bound - 1.75).abs() < 1e-12);
        assert!((b.lower_residual - 0.5).abs() < 1e-12);
        assert!((b.upper_residual - 0.75).abs() < 1e-12);

        // Sine model: fiber mass along a ray in the sin^2-weighted interval
        // stays inside the curved bracket.
        let p = params(2.0, 3.0);
        let x0 = 0.3;
        let len = 2.2;
        let g = |tau: f64| (x0 + len * tau).sin().powi(2);
        for &(r, big_r) in &[(0.2, 0.5), (0.1, 0.9), (0.5, 0.5), (0.45, 0.8)] {
            let b = measure_contraction_bounds(p, r, big_r, len, g(r) / g(big_r)).unwrap();
            assert!(!b.supercritical);
            assert!(
                b.lower_residual >= -1e-12,
                "r={r} R={big_r}: {}",
                b.lower_residual
            );
            assert!(
                b.upper_residual >= -1e-12,
                "r={r} R={big_r}: {}",
                b.upper_residual
            );
        }
    }

    #[test]
    fn contraction_bounds_flag_conjugate_overrun() {
        // Reduced comparison passes its first conjugate point: flagged, not
        // silently clamped.
        let b = measure_contraction_bounds(params(2.0, 3.0), 0.5, 0.99, 3.3, 1.0).unwrap();
        assert!(b.supercritical);
        assert_eq!(b.lower_residual, f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn flat_harmonic_residual_is_zero(
            r0 in 0.1f64..5.0,
            r1 in 0.1f64..5.0,
            t in 0.01f64..0.99,
            n in 1.0f64..6.0,
        ) {
            let p = DistortionParams::new(0.0, n).unwrap();
            let mixed = (1.0 - t) * r0.powf(-1.0 / n) + t * r1.powf(-1.0 / n);
            let rho_t = mixed.powf(-n);
            let c = cd_pointwise_residual(p, t, 1.3, r0, r1, rho_t).unwrap();
            prop_assert!(c.residual.abs() < 1e-10, "{}", c.residual);
        }

        #[test]
        fn flat_bounds_bracket_unity(a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let (r, big_r) = if a <= b { (a, b) } else { (b, a) };
            let p = DistortionParams::new(0.0, 2.0).unwrap();
            let bounds = measure_contraction_bounds(p, r, big_r, 1.7, 1.0).unwrap();
            prop_assert!(bounds.lower_residual >= -1e-12);
            prop_assert!(bounds.upper_residual >= -1e-12);
        }
    }
}
