use std::path::Path;

use archery_core::a2c::TrainConfig;
use archery_core::apf::ApfParams;
use archery_core::ballistics::{default_gates, BowModel, Gate};
use archery_core::env::EnvConfig;
use archery_core::policy::PolicyKind;
use archery_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatesConfig {
    /// Release point the gate range is measured from.
    pub shooter: Vec3,
    pub range: f64,
    /// Replaces the grey/blue/red defaults when non-empty. Shots go to gates
    /// in list order.
    pub custom: Vec<Gate>,
    pub shots_per_gate: u32,
}

impl Default for GatesConfig {
    fn default() -> Self {
        Self {
            shooter: Vec3::new(0.0, -1.75, 1.2),
            range: 2.5,
            custom: Vec::new(),
            shots_per_gate: 3,
        }
    }
}

impl GatesConfig {
    pub fn gates(&self) -> Vec<Gate> {
        if self.custom.is_empty() {
            default_gates(self.shooter, self.range)
        } else {
            self.custom.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub host: String,
    pub port: u16,
    /// Telemetry messages per second.
    pub tick_hz: f64,
    /// Sample spacing of the trajectory polyline sent to the UI, s.
    pub preview_dt: f64,
    pub policy: PolicyKind,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8765,
            tick_hz: 20.0,
            preview_dt: 0.02,
            policy: PolicyKind::Apf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub bow: BowModel,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub apf: ApfParams,
    pub gates: GatesConfig,
    pub serve: ServeConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    /// Field-level checks across every section.
    pub fn validate(&self) -> Result<(), CliError> {
        self.bow.validate()?;
        self.env.validate()?;
        self.train.validate()?;
        self.apf.validate()?;
        let gates = self.gates.gates();
        if gates.is_empty() {
            return Err(CliError::config("gates: at least one gate is required"));
        }
        for g in &gates {
            g.validate()?;
        }
        if !(self.gates.range > 0.0 && self.gates.range.is_finite()) {
            return Err(CliError::config("gates.range: must be finite and > 0"));
        }
        if self.gates.shots_per_gate == 0 {
            return Err(CliError::config("gates.shots_per_gate: must be >= 1"));
        }
        if !(self.serve.tick_hz > 0.0 && self.serve.tick_hz <= 1000.0) {
            return Err(CliError::config("serve.tick_hz: must lie in (0, 1000]"));
        }
        if !(self.serve.preview_dt > 0.0 && self.serve.preview_dt.is_finite()) {
            return Err(CliError::config("serve.preview_dt: must be finite and > 0"));
        }
        if self.serve.policy == PolicyKind::Random || self.serve.policy == PolicyKind::Zero {
            return Err(CliError::config("serve.policy: must be `drl` or `apf`"));
        }
        Ok(())
    }
}
