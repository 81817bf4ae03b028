//! Configured verification runs: a JSON config names a scenario and a set of
//! checks; the runner executes the checks (in parallel, with per-check seed
//! streams) and produces a versioned report whose JSON and CSV renderings are
//! byte-identical for a fixed config and seed, regardless of thread count.

mod config;
mod report;
mod runner;

pub use config::{
    CurvatureConfig, GridConfig, OrientationConfig, RunConfig, SpaceConfig, W2Config,
    SCHEMA_VERSION,
};
pub use report::{CheckResult, CheckStatus, RunReport};
pub use runner::{build_scenario, resolve_t_grid, run_config, selected_checks, CHECK_NAMES};

use crate::distortion::DistortionError;
use crate::scenario::ScenarioError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
