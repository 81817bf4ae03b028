//! Volume distortion coefficients for curvature bound `k` and dimension
//! bound `n`, with the extended-real conventions needed when the comparison
//! geometry closes up.
//!
//! `sigma(p, t, theta)` is the ratio `y(t)/y(1)` for the solution of
//! `y'' + theta^2 (k/n) y = 0`, `y(0) = 0`, `y'(0) = 1`; `tau` is the
//! dimension-split variant `t^{1/n} * sigma_{k,n-1}(t,theta)^{(n-1)/n}`, and
//! `varsigma = tau^n`. Past the first conjugate point the coefficients are
//! `+Infinity`, which callers must treat as "the bound is unsatisfiable".

use thiserror::Error;

/// Curvature / dimension parameter pair. `n >= 1` is required by the public
/// constructors; internal helpers also evaluate the `n - 1` slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionParams {
    pub k: f64,
    pub n: f64,
}

impl DistortionParams {
    pub fn new(k: f64, n: f64) -> Result<Self, DistortionError> {
        if !k.is_finite() {
            return Err(DistortionError::BadCurvature(k));
        }
        if !n.is_finite() || n < 1.0 {
            return Err(DistortionError::BadDimension(n));
        }
        Ok(Self { k, n })
    }
}

/// A nonnegative value or the formal `+Infinity` that marks parameters at or
/// beyond the conjugate-point threshold. Variant order makes the derived
/// comparison place every finite value below `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinite => None,
        }
    }

    /// Value with `+Infinity` mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinite => f64::INFINITY,
        }
    }

    /// Power with a strictly positive exponent (the only case the coefficient
    /// algebra needs); `Infinite^p = Infinite`.
    pub fn powf(self, p: f64) -> ExtendedReal {
        debug_assert!(p > 0.0);
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v.powf(p)),
            ExtendedReal::Infinite => ExtendedReal::Infinite,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DistortionError {
    #[error("curvature must be finite, got {0}")]
    BadCurvature(f64),
    #[error("dimension must be finite and >= 1, got {0}")]
    BadDimension(f64),
    #[error("interpolation time must lie in [0, 1], got {0}")]
    BadTime(f64),
    #[error("separation must be finite and nonnegative, got {0}")]
    BadSeparation(f64),
    #[error("k*theta^2 = {product} is at or beyond the finite-domain bound {bound}")]
    Supercritical { product: f64, bound: f64 },
    #[error("grid step must lie in (0, 0.5), got {0}")]
    BadGridStep(f64),
}

/// Below this |k*theta^2| the trigonometric ratio is evaluated by a three-term
/// series; the direct quotient is still well conditioned here, but the series
/// guarantees the exact `t` limit is approached smoothly from both signs.
const SERIES_SWITCH: f64 = 1e-9;

fn validate_t_theta(t: f64, theta: f64) -> Result<(), DistortionError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(DistortionError::BadTime(t));
    }
    if !theta.is_finite() || theta < 0.0 {
        return Err(DistortionError::BadSeparation(theta));
    }
    Ok(())
}

/// Core ratio sin(t x)/sin(x) with x = theta*sqrt(k/n), continued to k <= 0
/// via sinh; assumes the subcritical test was already done. `n > 0` here.
fn sigma_core(k: f64, n: f64, t: f64, theta: f64) -> f64 {
    let u = k * theta * theta / n;
    if (k * theta * theta).abs() < SERIES_SWITCH {
        // sin(t sqrt(u))/sin(sqrt(u)) = t (1 + (1-t^2) u/6 + (7-10t^2+3t^4) u^2/360 + ...)
        let t2 = t * t;
        return t * (1.0 + (1.0 - t2) * u / 6.0 + (7.0 - 10.0 * t2 + 3.0 * t2 * t2) * u * u / 360.0);
    }
    if u > 0.0 {
        let x = u.sqrt();
        (t * x).sin() / x.sin()
    } else {
        let x = (-u).sqrt();
        (t * x).sinh() / x.sinh()
    }
}

/// Distortion coefficient along an `n`-dimensional comparison geometry:
/// `t` for `k*theta^2 = 0`, the sine ratio while `k*theta^2 < n*pi^2`, the
/// sinh ratio for negative curvature, `+Infinity` at or past `n*pi^2`.
pub fn sigma(p: DistortionParams, t: f64, theta: f64) -> Result<ExtendedReal, DistortionError> {
    validate_t_theta(t, theta)?;
    let product = p.k * theta * theta;
    if product >= p.n * std::f64::consts::PI * std::f64::consts::PI {
        return Ok(ExtendedReal::Infinite);
    }
    if product == 0.0 {
        return Ok(ExtendedReal::Finite(t));
    }
    Ok(ExtendedReal::Finite(sigma_core(p.k, p.n, t, theta)))
}

/// Dimension-split coefficient `t^{1/n} * sigma_{k,n-1}^{(n-1)/n}`. Finite
/// exactly when `k*theta^2 < (n-1)*pi^2`; for `n = 1` this degenerates to `t`
/// for nonpositive `k*theta^2` and `+Infinity` otherwise. `k = 0` returns `t`
/// exactly so that the flat case suffers no roundoff.
pub fn tau(p: DistortionParams, t: f64, theta: f64) -> Result<ExtendedReal, DistortionError> {
    validate_t_theta(t, theta)?;
    let product = p.k * theta * theta;
    if p.n == 1.0 {
        return Ok(if product > 0.0 {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite(t)
        });
    }
    let bound = (p.n - 1.0) * std::f64::consts::PI * std::f64::consts::PI;
    if product >= bound {
        return Ok(ExtendedReal::Infinite);
    }
    if product == 0.0 {
        return Ok(ExtendedReal::Finite(t));
    }
    let s = sigma_core(p.k, p.n - 1.0, t, theta);
    Ok(ExtendedReal::Finite(
        t.powf(1.0 / p.n) * s.powf((p.n - 1.0) / p.n),
    ))
}

/// `tau^n`, with `Infinite` absorbing the power.
pub fn varsigma(p: DistortionParams, t: f64, theta: f64) -> Result<ExtendedReal, DistortionError> {
    Ok(tau(p, t, theta)?.powf(p.n))
}

/// Maximum defect of the generating equation `y'' + theta^2 (k/n) y = 0` for
/// `y(t) = sigma(p, t, theta)`, measured by second central differences of
/// step `grid_step` over the interior grid `{grid_step, 2*grid_step, ...}`.
/// Requires subcritical parameters.
pub fn ode_residual(
    p: DistortionParams,
    theta: f64,
    grid_step: f64,
) -> Result<f64, DistortionError> {
    if !(grid_step > 0.0 && grid_step < 0.5) {
        return Err(DistortionError::BadGridStep(grid_step));
    }
    let product = p.k * theta * theta;
    let bound = p.n * std::f64::consts::PI * std::f64::consts::PI;
    if product >= bound {
        return Err(DistortionError::Supercritical { product, bound });
    }
    let h = grid_step;
    let steps = (1.0 / h).floor() as usize;
    let omega2 = theta * theta * p.k / p.n;
    let value = |i: usize| sigma_core(p.k, p.n, i as f64 * h, theta);
    let mut prev = value(0);
    let mut cur = value(1);
    let mut worst = 0.0f64;
    for i in 1..steps {
        let next = value(i + 1);
        let d2 = (prev - 2.0 * cur + next) / (h * h);
        let r = (d2 + omega2 * cur).abs();
        if r > worst {
            worst = r;
        }
        prev = cur;
        cur = next;
    }
    Ok(worst)
}
