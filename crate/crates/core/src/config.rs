//! JSON model configuration.
//!
//! ```json
//! {
//!   "T": 1.0,
//!   "generator": [[-1.0, 1.0], [1.0, -1.0]],
//!   "market": {
//!     "delta_floor": 1e-10,
//!     "regimes": [
//!       [{"t_start": 0.0, "r": 0.05, "mu": [0.3], "sigma": [[0.5]]}],
//!       [{"t_start": 0.0, "r": 0.15, "mu": [0.25], "sigma": [[0.5]]}]
//!     ]
//!   },
//!   "horizon": {"epsilon": 0.05, "density": [{"t_start": 0.0, "f": 0.5}]},
//!   "initial": {"x0": 1.0, "regime": 1},
//!   "run": {"h": 1e-4, "sim": {"n_paths": 100000, "euler_step": 0.001, "base_seed": 7}},
//!   "z_targets": [1.15, 1.2, 1.3]
//! }
//! ```
//!
//! Regimes are numbered from 1 in configs and output files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainError, Generator};
use crate::horizon::{build_horizon, DensitySegment, HorizonError, DEFAULT_EPSILON};
use crate::market::{build_market, MarketError, SegmentSpec, DEFAULT_DELTA_FLOOR};
use crate::model::{Model, ModelError};
use crate::montecarlo::SimConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("initial regime {regime} must lie in 1..={n_regimes}")]
    InitialRegime { regime: usize, n_regimes: usize },
    #[error("invalid run parameters: {0}")]
    InvalidRun(&'static str),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    #[serde(default = "default_delta_floor")]
    pub delta_floor: f64,
    pub regimes: Vec<Vec<SegmentSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub density: Vec<DensitySegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x0: f64,
    /// 1-based.
    pub regime: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Backward-solver step; defaults to `1e-4·T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "T")]
    pub terminal_time: f64,
    pub generator: Vec<Vec<f64>>,
    pub market: MarketSection,
    #[serde(rename = "horizon")]
    pub exit: HorizonSection,
    pub initial: InitialState,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z_targets: Vec<f64>,
}

fn default_delta_floor() -> f64 {
    DEFAULT_DELTA_FLOOR
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// A validated config.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltConfig {
    pub model: Model,
    pub x0: f64,
    /// 0-based.
    pub i0: usize,
    pub step: f64,
    pub sim: SimConfig,
    pub z_targets: Vec<f64>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The same config with a constant exit density `f`.
    pub fn with_constant_density(&self, f: f64) -> Self {
        let mut out = self.clone();
        out.exit.density = vec![DensitySegment { t_start: 0.0, f }];
        out
    }

    /// Validates every section, in the order generator, market, horizon,
    /// initial state, run parameters.
    pub fn build(&self) -> Result<BuiltConfig, ConfigError> {
        let generator = Generator::new(&self.generator)?;
        let market = build_market(&self.market.regimes, self.terminal_time, self.market.delta_floor)?;
        let horizon =
            build_horizon(&self.exit.density, self.terminal_time, self.exit.epsilon)?;
        let model = Model::new(generator, market, horizon)?;
        let n_regimes = model.n_regimes();
        let regime = self.initial.regime;
        if regime == 0 || regime > n_regimes {
            return Err(ConfigError::InitialRegime { regime, n_regimes });
        }
        if !self.initial.x0.is_finite() {
            return Err(ConfigError::InvalidRun("x0 must be finite"));
        }
        let step = self.run.h.unwrap_or(1e-4 * self.terminal_time);
        if !(step > 0.0 && step <= self.terminal_time) {
            return Err(ConfigError::InvalidRun("h must lie in (0, T]"));
        }
        let sim = self.run.sim.unwrap_or_default();
        if self.z_targets.iter().any(|z| !z.is_finite()) {
            return Err(ConfigError::InvalidRun("z targets must be finite"));
        }
        Ok(BuiltConfig {
            model,
            x0: self.initial.x0,
            i0: regime - 1,
            step,
            sim,
            z_targets: self.z_targets.clone(),
        })
    }
}
