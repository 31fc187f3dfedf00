use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::mobility::{preset, Scenario};
use crate::radio::{ChannelParams, MacParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Plain periodic beacons, no tables on the air.
    Baseline,
    /// Beacons carry the neighbor table once per NT period.
    Crnt,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Crnt => "crnt",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "crnt" => Ok(Mode::Crnt),
            other => Err(format!("unknown mode {other:?} (expected baseline or crnt)")),
        }
    }
}

/// Drops otherwise delivered frames with a fixed probability during a time
/// window, to force a lossy channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injector {
    pub drop_probability: f64,
    pub from_s: f64,
    pub to_s: f64,
}

impl Injector {
    pub fn active_at(&self, t_us: u64) -> bool {
        let t = t_us as f64 / 1e6;
        t >= self.from_s && t < self.to_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name (`freeway`, `cross`, `t_junction`, `merge`) or a path to
    /// a scenario file.
    pub scenario: String,
    pub seed: u64,
    pub mode: Mode,
    pub duration_s: u32,
    pub beacon_period_ms: u64,
    pub nt_period_ms: u64,
    pub cp_threshold_pct: f64,
    pub pnt_lifetime_ms: u64,
    pub mobility_step_ms: u64,
    /// Vehicle whose per-second trace is reported; defaults to the one
    /// nearest the centroid at t = 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracked_vehicle: Option<u32>,
    pub channel: ChannelParams,
    pub mac: MacParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injector: Option<Injector>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "freeway".into(),
            seed: 1,
            mode: Mode::Crnt,
            duration_s: 10,
            beacon_period_ms: 100,
            nt_period_ms: 1000,
            cp_threshold_pct: 50.0,
            pnt_lifetime_ms: 1000,
            mobility_step_ms: 100,
            tracked_vehicle: None,
            channel: ChannelParams::default(),
            mac: MacParams::default(),
            injector: None,
        }
    }
}

fn bad(field: &str, reason: impl Into<String>) -> EngineError {
    EngineError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, EngineError> {
        toml::from_str(text).map_err(|e| EngineError::ConfigFile {
            path: path.to_string(),
            reason: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::ConfigFile {
            path: shown.clone(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text, &shown)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        for (field, v) in [
            ("beacon_period_ms", self.beacon_period_ms),
            ("nt_period_ms", self.nt_period_ms),
            ("pnt_lifetime_ms", self.pnt_lifetime_ms),
            ("mobility_step_ms", self.mobility_step_ms),
        ] {
            if v == 0 {
                return Err(bad(field, "must be > 0"));
            }
        }
        if self.beacon_period_ms > u64::from(u16::MAX) {
            return Err(bad("beacon_period_ms", "must fit the 16-bit interval field"));
        }
        if !(0.0..=100.0).contains(&self.cp_threshold_pct) {
            return Err(bad(
                "cp_threshold_pct",
                format!("must be within [0, 100], got {}", self.cp_threshold_pct),
            ));
        }
        if let Some(inj) = &self.injector {
            if !(0.0..=1.0).contains(&inj.drop_probability) {
                return Err(bad("injector.drop_probability", "must be within [0, 1]"));
            }
            if !(inj.from_s >= 0.0 && inj.from_s < inj.to_s) {
                return Err(bad("injector.from_s", "window must satisfy 0 <= from_s < to_s"));
            }
        }
        self.channel.validate().map_err(|e| bad("channel", e.to_string()))?;
        self.mac.validate().map_err(|e| bad("mac", e.to_string()))?;
        Ok(())
    }

    /// Looks the scenario up as a preset first, then as a file.
    pub fn resolve_scenario(&self) -> Result<Scenario, EngineError> {
        match preset(&self.scenario) {
            Ok(s) => Ok(s),
            Err(_) if Path::new(&self.scenario).exists() => Ok(Scenario::load(Path::new(&self.scenario))?),
            Err(e) => Err(e.into()),
        }
    }

    /// Every setting as sorted dotted `key=value` pairs.
    pub fn flatten(&self) -> Vec<(String, String)> {
        fn walk(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
            match v {
                toml::Value::Table(t) => {
                    for (k, v) in t {
                        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        walk(&key, v, out);
                    }
                }
                toml::Value::String(s) => out.push((prefix.to_string(), s.clone())),
                other => out.push((prefix.to_string(), other.to_string())),
            }
        }
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut out = Vec::new();
        walk("", &value, &mut out);
        out.sort();
        out
    }
}
