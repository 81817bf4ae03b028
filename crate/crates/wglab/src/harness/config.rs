//! Run configuration schema (JSON, versioned).

use super::HarnessError;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One verification run: which scenario to build, which grids to probe, and
/// which checks to execute.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub name: String,
    pub space: SpaceConfig,
    /// Optional curvature-dimension override; defaults to the scenario's
    /// design calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureConfig>,
    #[serde(default)]
    pub grids: GridConfig,
    /// Check names to run; empty means all of them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
    /// Required sense of the level-speed profile.
    #[serde(default)]
    pub orientation: OrientationConfig,
    /// Optional window family for the two-window interpolation construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2: Option<W2Config>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {} (this build reads {})",
                cfg.schema_version, SCHEMA_VERSION
            )));
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    /// Uniform box rigidly shifted by `-v`.
    Translation {
        v: [f64; 2],
        lo: [f64; 2],
        hi: [f64; 2],
        per_side: usize,
    },
    /// Uniform annulus scaled toward the origin by `1 - t * alpha`.
    Dilation {
        alpha: f64,
        r_lo: f64,
        r_hi: f64,
        n_radii: usize,
        n_angles: usize,
    },
    /// Full collapse of the annulus (`alpha = 1`).
    RadialToPoint {
        r_lo: f64,
        r_hi: f64,
        n_radii: usize,
        n_angles: usize,
    },
    /// Monotone rearrangement on `(0, pi)` with weight `sin^exponent`.
    IntervalSinPower {
        exponent: u32,
        mu: [f64; 2],
        nu: [f64; 2],
        n: usize,
    },
    /// Monotone rearrangement on `(0, 1)` with weight `x^exponent`.
    IntervalCone {
        exponent: f64,
        mu: [f64; 2],
        nu: [f64; 2],
        n: usize,
    },
    /// The shipped broken plan with crossing rays and inconsistent levels.
    CrossedLevels,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub k: f64,
    pub n: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Interpolation times; `null` takes the scenario's default grid.
    pub t_grid: Option<Vec<f64>>,
    /// Strip width in level (and in time) for Monte Carlo estimators.
    pub eps: f64,
    /// Number of level bins for class partitions.
    pub bins: usize,
    /// Proposal budget for Monte Carlo strips and cycle enumeration.
    pub budget: u64,
    /// Root seed; every check derives its own stream from it.
    pub seed: u64,
    /// Target-support sample count for the inf-convolution doubling check.
    pub hopf_lax_grid: usize,
    /// Cap on per-check probe count (rays, (ray, time) pairs).
    pub n_quantiles: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_grid: None,
            eps: 1e-3,
            bins: 32,
            budget: 100_000,
            seed: 0,
            hopf_lax_grid: 24,
            n_quantiles: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationConfig {
    #[default]
    Auto,
    NonDecreasing,
    NonIncreasing,
}

/// Windows for the interpolated two-window family: all level values, with
/// `upper` strictly below `level` and `lower` strictly below `upper`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct W2Config {
    pub level: f64,
    pub upper: [f64; 2],
    pub lower: [f64; 2],
    pub samples: usize,
    #[serde(default = "default_w2_times")]
    pub times: Vec<f64>,
}

fn default_w2_times() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
