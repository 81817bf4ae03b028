//! Model geometries the laboratory runs on: Euclidean clouds and weighted
//! segments of the line, plus straight-line geodesics and dynamical transport
//! plans built from couplings.
//!
//! Weighted segments carry closed-form integrals (uniform, integer powers of
//! sine, real powers of x), so their cumulative masses, quantiles and the
//! monotone rearrangement map between two segments are available to near
//! machine precision and serve as ground truth for the sampled estimators.

use crate::num::{dist, lerp, Point};
use crate::ot::{Coupling, DiscreteMeasure, OtError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("segment needs lo < hi inside the density's domain, got [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("power density needs a finite exponent >= 0, got {0}")]
    BadExponent(f64),
    #[error("operation needs one-dimensional atoms, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("mass coordinate {0} outside [0, total mass {1}]")]
    QuantileOutOfRange(f64, f64),
    #[error(transparent)]
    Ot(#[from] OtError),
}

/// Reference density profile for a weighted segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityKind {
    /// w(x) = 1.
    Uniform,
    /// w(x) = sin(x)^m on a segment inside [0, pi].
    SinPower { exponent: u32 },
    /// w(x) = x^m on a segment inside [0, infinity).
    Power { exponent: f64 },
}

/// Interval [lo, hi] carrying the (unnormalized) density of `kind`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedSegment {
    pub lo: f64,
    pub hi: f64,
    pub kind: DensityKind,
}

/// Antiderivative of sin^m at x, anchored at 0, by the textbook recurrence.
fn sin_power_integral(m: u32, x: f64) -> f64 {
    match m {
        0 => x,
        1 => 1.0 - x.cos(),
        _ => {
            let (s, c) = x.sin_cos();
            (-s.powi(m as i32 - 1) * c + (m as f64 - 1.0) * sin_power_integral(m - 2, x))
                / m as f64
        }
    }
}

impl WeightedSegment {
    pub fn new(lo: f64, hi: f64, kind: DensityKind) -> Result<Self, SpaceError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SpaceError::BadInterval { lo, hi });
        }
        match kind {
            DensityKind::Uniform => {}
            DensityKind::SinPower { .. } => {
                if lo < 0.0 || hi > std::f64::consts::PI {
                    return Err(SpaceError::BadInterval { lo, hi });
                }
            }
            DensityKind::Power { exponent } => {
                if !(exponent.is_finite() && exponent >= 0.0) {
                    return Err(SpaceError::BadExponent(exponent));
                }
                if lo < 0.0 {
                    return Err(SpaceError::BadInterval { lo, hi });
                }
            }
        }
        Ok(Self { lo, hi, kind })
    }

    /// Density value; zero outside the segment.
    pub fn weight(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        match self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::SinPower { exponent } => x.sin().powi(exponent as i32),
            DensityKind::Power { exponent } => x.powf(exponent),
        }
    }

    fn primitive(&self, x: f64) -> f64 {
        match self.kind {
            DensityKind::Uniform => x,
            DensityKind::SinPower { exponent } => sin_power_integral(exponent, x),
            DensityKind::Power { exponent } => x.powf(exponent + 1.0) / (exponent + 1.0),
        }
    }

    /// Unnormalized mass of [lo, min(x, hi)].
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi);
        self.primitive(x) - self.primitive(self.lo)
    }

    /// Total unnormalized mass of the segment.
    pub fn mass(&self) -> f64 {
        self.cdf(self.hi)
    }

    /// Mass of [a, b] intersected with the segment.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.cdf(b) - self.cdf(a)
    }

    /// Position x with cdf(x) = target (mass units). Bisection to a tight
    /// bracket, then a Newton polish where the density is bounded away from 0.
    pub fn quantile(&self, target: f64) -> Result<f64, SpaceError> {
        let total = self.mass();
        if !(0.0..=total * (1.0 + 1e-12)).contains(&target) {
            return Err(SpaceError::QuantileOutOfRange(target, total));
        }
        let target = target.clamp(0.0, total);
        let (mut a, mut b) = (self.lo, self.hi);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if self.cdf(m) < target {
                a = m;
            } else {
                b = m;
            }
        }
        let mut x = 0.5 * (a + b);
        for _ in 0..2 {
            let w = self.weight(x);
            if w > 1e-12 {
                x = (x - (self.cdf(x) - target) / w).clamp(self.lo, self.hi);
            }
        }
        Ok(x)
    }

    /// Equal-mass quantile discretization: n atoms at the mid-mass quantiles.
    pub fn discretize(&self, n: usize) -> Result<DiscreteMeasure, SpaceError> {
        let total = self.mass();
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let frac = (i as f64 + 0.5) / n as f64;
            points.push(vec![self.quantile(frac * total)?]);
        }
        Ok(DiscreteMeasure::uniform(points)?)
    }
}

/// Monotone rearrangement sending `src`'s normalized mass onto `dst`'s:
/// T(x) = Q_dst(F_src(x)).
pub fn monotone_map(src: &WeightedSegment, dst: &WeightedSegment, x: f64) -> Result<f64, SpaceError> {
    let frac = src.cdf(x) / src.mass();
    dst.quantile(frac * dst.mass())
}

/// Derivative of the monotone rearrangement at x:
/// T'(x) = (Z_dst / Z_src) * w_src(x) / w_dst(T(x)).
pub fn monotone_map_derivative(
    src: &WeightedSegment,
    dst: &WeightedSegment,
    x: f64,
) -> Result<f64, SpaceError> {
    let t = monotone_map(src, dst, x)?;
    Ok(dst.mass() / src.mass() * src.weight(x) / dst.weight(t))
}

/// Straight segment traversed at constant speed on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSegment {
    pub from: Point,
    pub to: Point,
}

impl GeodesicSegment {
    pub fn at(&self, t: f64) -> Point {
        lerp(&self.from, &self.to, t)
    }

    pub fn length(&self) -> f64 {
        dist(&self.from, &self.to)
    }
}

/// Weighted family of geodesics: the time-t positions push the ray masses
/// forward to the interpolant measure.
#[derive(Clone, Debug)]
pub struct DynamicalPlan {
    pub rays: Vec<(GeodesicSegment, f64)>,
}

impl DynamicalPlan {
    pub fn from_coupling(c: &Coupling) -> Self {
        let rays = c
            .entries
            .iter()
            .map(|&(i, j, mass)| {
                (
                    GeodesicSegment {
                        from: c.mu.points[i].clone(),
                        to: c.nu.points[j].clone(),
                    },
                    mass,
                )
            })
            .collect();
        Self { rays }
    }

    pub fn from_pairs(pairs: &[(Point, Point)], masses: &[f64]) -> Self {
        let rays = pairs
            .iter()
            .zip(masses)
            .map(|((a, b), &m)| {
                (
                    GeodesicSegment {
                        from: a.clone(),
                        to: b.clone(),
                    },
                    m,
                )
            })
            .collect();
        Self { rays }
    }

    /// Interpolant measure at time t (atoms may coincide; that is fine for
    /// the discrete solvers downstream).
    pub fn at(&self, t: f64) -> Result<DiscreteMeasure, OtError> {
        let points = self.rays.iter().map(|(g, _)| g.at(t)).collect();
        let weights = self.rays.iter().map(|&(_, m)| m).collect();
        DiscreteMeasure::new(points, weights)
    }

    /// Shortest and longest ray lengths.
    pub fn length_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (g, _) in &self.rays {
            let l = g.length();
            lo = lo.min(l);
            hi = hi.max(l);
        }
        (lo, hi)
    }

    /// Root-mean-square ray length; for a quadratically optimal plan this is
    /// the 2-Wasserstein distance between the endpoints.
    pub fn rms_length(&self) -> f64 {
        let total: f64 = self.rays.iter().map(|&(_, m)| m).sum();
        let sq: f64 = self
            .rays
            .iter()
            .map(|(g, m)| m * g.length() * g.length())
            .sum();
        (sq / total).max(0.0).sqrt()
    }
}

/// Monotone coupling of two one-dimensional discrete measures, with dual
/// potentials assembled along the matching chain: consecutive support entries
/// share an atom, which pins each new potential by complementary slackness.
/// For costs of the form h(x - y) with h convex the result is the optimal
/// coupling and the duals are feasible; both facts are checkable on the
/// returned [`Coupling`].
pub fn quantile_coupling<F>(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: F,
) -> Result<Coupling, SpaceError>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if mu.dim() != 1 {
        return Err(SpaceError::NotOneDimensional(mu.dim()));
    }
    if nu.dim() != 1 {
        return Err(SpaceError::NotOneDimensional(nu.dim()));
    }
    let mut mu_order: Vec<usize> = (0..mu.len()).collect();
    mu_order.sort_by(|&a, &b| mu.points[a][0].total_cmp(&mu.points[b][0]).then(a.cmp(&b)));
    let mut nu_order: Vec<usize> = (0..nu.len()).collect();
    nu_order.sort_by(|&a, &b| nu.points[a][0].total_cmp(&nu.points[b][0]).then(a.cmp(&b)));

    let mut entries = Vec::new();
    let mut cost_total = 0.0;
    let mut a = 0usize;
    let mut b = 0usize;
    let mut res_a = mu.weights[mu_order[0]];
    let mut res_b = nu.weights[nu_order[0]];
    while a < mu.len() && b < nu.len() {
        let i = mu_order[a];
        let j = nu_order[b];
        let m = res_a.min(res_b);
        entries.push((i, j, m));
        cost_total += m * cost(&mu.points[i], &nu.points[j]);
        res_a -= m;
        res_b -= m;
        let a_done = res_a <= 1e-15;
        let b_done = res_b <= 1e-15;
        if a_done && b_done && a + 1 < mu.len() && b + 1 < nu.len() {
            // both atoms exhausted at once: advance one side only, so the
            // next pass emits a zero-mass cell that keeps consecutive
            // entries sharing an atom — the dual chain needs the link
            a += 1;
            res_a = mu.weights[mu_order[a]];
        } else {
            if a_done {
                a += 1;
                if a < mu.len() {
                    res_a = mu.weights[mu_order[a]];
                }
            }
            if b_done {
                b += 1;
                if b < nu.len() {
                    res_b = nu.weights[nu_order[b]];
                }
            }
        }
    }

    let mut dual_u = vec![0.0; mu.len()];
    let mut dual_v = vec![0.0; nu.len()];
    let (i0, j0, _) = entries[0];
    dual_u[i0] = 0.0;
    dual_v[j0] = cost(&mu.points[i0], &nu.points[j0]);
    for w in entries.windows(2) {
        let (pi, pj, _) = w[0];
        let (i, j, _) = w[1];
        let c = cost(&mu.points[i], &nu.points[j]);
        if i == pi {
            dual_v[j] = c - dual_u[i];
        } else {
            debug_assert_eq!(j, pj);
            dual_u[i] = c - dual_v[j];
        }
    }
    let shift = dual_u[0];
    for u in &mut dual_u {
        *u -= shift;
    }
    for v in &mut dual_v {
        *v += shift;
    }
    Ok(Coupling {
        mu: mu.clone(),
        nu: nu.clone(),
        entries,
        cost_total,
        dual_u,
        dual_v,
    })
}
