//! TOML configuration.
//!
//! ```toml
//! [property]
//! name = "Hotel 1"
//! capacity = 120
//! horizon = 100
//! ladder = { min = 7000, max = 17000, step = 1000 }   # minor units
//!
//! [backtest]
//! k = 15
//! g_low = 0.4
//! g_high = 0.7
//!
//! [service]
//! bind = "127.0.0.1:8080"
//! ```
//!
//! `reference = 1..4` in `[property]` selects one of the built-in ladders
//! instead of an explicit `ladder` table.

use std::path::Path;

use rmcurve_core::domain::{BookingHorizon, LadderSpec, RateLadder};
use rmcurve_core::lp::Tolerances;
use rmcurve_core::pipeline::BacktestConfig;
use rmcurve_core::sim::{SensitivityConfig, SimConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("property `{0}`: give exactly one of `ladder` and `reference`")]
    LadderChoice(String),
    #[error("property `{0}`: unknown reference property")]
    UnknownReference(String),
    #[error("property `{0}`: capacity must be positive")]
    ZeroCapacity(String),
    #[error("property `{name}`: {source}")]
    Domain { name: String, source: rmcurve_core::domain::DomainError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyConfig {
    pub name: String,
    pub capacity: u32,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default)]
    pub ladder: Option<LadderSpec>,
    #[serde(default)]
    pub reference: Option<usize>,
}

fn default_horizon() -> u32 {
    100
}

impl PropertyConfig {
    pub fn ladder(&self) -> Result<RateLadder, ConfigError> {
        match (&self.ladder, self.reference) {
            (Some(spec), None) => RateLadder::try_from(*spec).map_err(|source| ConfigError::Domain { name: self.name.clone(), source }),
            (None, Some(i)) => RateLadder::reference_property(i).ok_or_else(|| ConfigError::UnknownReference(self.name.clone())),
            _ => Err(ConfigError::LadderChoice(self.name.clone())),
        }
    }

    pub fn horizon(&self) -> Result<BookingHorizon, ConfigError> {
        BookingHorizon::new(self.horizon).map_err(|source| ConfigError::Domain { name: self.name.clone(), source })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.capacity == 0 {
            return Err(ConfigError::ZeroCapacity(self.name.clone()));
        }
        self.ladder()?;
        self.horizon()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { bind: "127.0.0.1:8080".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AppConfig {
    pub property: Option<PropertyConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub simulation: SimConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub backtest: BacktestConfig,
    #[serde(default)]
    pub service: ServiceConfig,
}

impl AppConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: AppConfig = toml::from_str(text)?;
        if let Some(p) = &cfg.property {
            p.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }
}
