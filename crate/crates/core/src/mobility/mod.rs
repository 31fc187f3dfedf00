//! Road networks, vehicle kinematics, and building occlusion.

mod geometry;
mod presets;
mod traffic;

use serde::{Deserialize, Serialize};

use crate::proto::{Heading, Position, VehicleId};

pub use geometry::{line_of_sight, Rect};
pub use presets::{cross_golden, preset, PRESET_NAMES};
pub use traffic::{spawn_scenario, step, Arrivals, MIN_GAP_M};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("scenario {scenario}: {reason}")]
    Invalid { scenario: String, reason: String },
    #[error("scenario {scenario}: {requested} vehicles exceed capacity {capacity} of segment {segment} at the minimum gap")]
    OverCapacity {
        scenario: String,
        segment: String,
        requested: u32,
        capacity: u32,
    },
    #[error("unknown scenario preset {0:?} (expected one of freeway, cross, t_junction, merge)")]
    UnknownPreset(String),
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario file {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Freeway,
    CrossJunction,
    TJunction,
    HighSpeedMerge,
}

/// Directed road segment. Lanes lie to the right of the direction of travel,
/// lane 0 outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub name: String,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub lanes: u32,
    pub lane_width_m: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    fn unit(&self) -> (f64, f64) {
        let len = self.length();
        ((self.end[0] - self.start[0]) / len, (self.end[1] - self.start[1]) / len)
    }

    pub fn heading(&self) -> Heading {
        Heading::from_vector(self.end[0] - self.start[0], self.end[1] - self.start[1])
    }

    /// World position of a point `offset` metres along lane `lane`.
    pub fn lane_point(&self, lane: u32, offset: f64) -> Position {
        let (ux, uy) = self.unit();
        let lateral = (f64::from(self.lanes - 1 - lane.min(self.lanes - 1)) + 0.5) * self.lane_width_m;
        Position::new(
            self.start[0] + ux * offset + uy * lateral,
            self.start[1] + uy * offset - ux * lateral,
        )
    }

    /// Paved footprint: centerline to the outer edge.
    pub fn corridor(&self) -> [Position; 4] {
        let (ux, uy) = self.unit();
        let w = f64::from(self.lanes) * self.lane_width_m;
        let (rx, ry) = (uy * w, -ux * w);
        let s = Position::new(self.start[0], self.start[1]);
        let e = Position::new(self.end[0], self.end[1]);
        [s, e, Position::new(e.x + rx, e.y + ry), Position::new(s.x + rx, s.y + ry)]
    }
}

/// Vehicles to place on one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnSpec {
    pub segment: String,
    /// Vehicles present at t = 0.
    #[serde(default)]
    pub count: u32,
    /// Poisson arrivals at the segment start, vehicles per second.
    #[serde(default)]
    pub arrival_rate_per_s: f64,
    pub speed_mps: [f64; 2],
    /// Alternative continuations, one picked uniformly per vehicle. Empty
    /// means the vehicle leaves at the segment end.
    #[serde(default)]
    pub routes: Vec<Vec<String>>,
    /// Restricts placement to these lanes; all lanes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanes: Option<Vec<u32>>,
}

/// A vehicle placed by hand, e.g. for the junction walkthrough.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedVehicle {
    pub id: u32,
    pub segment: String,
    pub lane: u32,
    pub offset_m: f64,
    pub speed_mps: f64,
    #[serde(default)]
    pub route: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    #[serde(default)]
    pub spawns: Vec<SpawnSpec>,
    #[serde(default)]
    pub scripted: Vec<ScriptedVehicle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub position: Position,
    /// m/s
    pub speed: f64,
    pub heading: Heading,
    pub lane: u32,
    /// Index into `Scenario::segments`.
    pub segment: usize,
    /// Distance travelled along the current segment.
    pub offset_m: f64,
    /// Segments still to drive after the current one.
    pub route: Vec<usize>,
}

impl Scenario {
    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }

    pub fn line_of_sight(&self, a: Position, b: Position) -> bool {
        line_of_sight(a, b, &self.obstacles)
    }

    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            source: Box::new(e),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        Self::from_toml(&text, &shown)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn invalid(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            scenario: self.name.clone(),
            reason: reason.into(),
        }
    }

    fn resolve_route(&self, from: usize, names: &[String]) -> Result<Vec<usize>, ConfigError> {
        let mut prev = from;
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let idx = self
                .segment_index(name)
                .ok_or_else(|| self.invalid(format!("route names unknown segment {name:?}")))?;
            let (a, b) = (self.segments[prev].end, self.segments[idx].start);
            if (a[0] - b[0]).hypot(a[1] - b[1]) > 1e-6 {
                return Err(self.invalid(format!(
                    "route step {} -> {} is not connected",
                    self.segments[prev].name, name
                )));
            }
            out.push(idx);
            prev = idx;
        }
        Ok(out)
    }

    pub(crate) fn resolve_routes(&self, spec: &SpawnSpec) -> Result<Vec<Vec<usize>>, ConfigError> {
        let from = self
            .segment_index(&spec.segment)
            .ok_or_else(|| self.invalid(format!("spawn names unknown segment {:?}", spec.segment)))?;
        spec.routes.iter().map(|r| self.resolve_route(from, r)).collect()
    }

    pub(crate) fn spawn_lanes(&self, spec: &SpawnSpec) -> Vec<u32> {
        let seg = self.segment_index(&spec.segment).map(|i| &self.segments[i]);
        match (&spec.lanes, seg) {
            (Some(l), _) => l.clone(),
            (None, Some(s)) => (0..s.lanes).collect(),
            (None, None) => Vec::new(),
        }
    }

    /// Structural checks. Capacity is checked by `spawn_scenario`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.segments.is_empty() {
            return Err(self.invalid("no segments"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if self.segments[..i].iter().any(|o| o.name == s.name) {
                return Err(self.invalid(format!("duplicate segment name {:?}", s.name)));
            }
            if s.lanes == 0 {
                return Err(self.invalid(format!("segment {}: lanes must be >= 1", s.name)));
            }
            if !(s.lane_width_m > 0.0) {
                return Err(self.invalid(format!("segment {}: lane_width_m must be > 0", s.name)));
            }
            if !s.start.iter().chain(&s.end).all(|v| v.is_finite()) || !(s.length() > 0.0) {
                return Err(self.invalid(format!("segment {}: endpoints must differ", s.name)));
            }
        }
        for (i, r) in self.obstacles.iter().enumerate() {
            if !r.is_valid() {
                return Err(self.invalid(format!("obstacle {i}: min must be below max")));
            }
            for s in &self.segments {
                if r.overlaps_convex(&s.corridor()) {
                    return Err(self.invalid(format!("obstacle {i} overlaps segment {}", s.name)));
                }
            }
        }
        let mut seen_spawn = Vec::new();
        for spec in &self.spawns {
            let idx = self
                .segment_index(&spec.segment)
                .ok_or_else(|| self.invalid(format!("spawn names unknown segment {:?}", spec.segment)))?;
            if seen_spawn.contains(&idx) {
                return Err(self.invalid(format!("segment {} has two spawn specs", spec.segment)));
            }
            seen_spawn.push(idx);
            let [lo, hi] = spec.speed_mps;
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(self.invalid(format!("spawn on {}: speed range must satisfy 0 < min <= max", spec.segment)));
            }
            if !(spec.arrival_rate_per_s >= 0.0 && spec.arrival_rate_per_s.is_finite()) {
                return Err(self.invalid(format!("spawn on {}: arrival_rate_per_s must be >= 0", spec.segment)));
            }
            let lanes = self.spawn_lanes(spec);
            if lanes.is_empty() || lanes.iter().any(|&l| l >= self.segments[idx].lanes) {
                return Err(self.invalid(format!("spawn on {}: lane list out of range", spec.segment)));
            }
            self.resolve_routes(spec)?;
        }
        let mut ids = Vec::new();
        for v in &self.scripted {
            if ids.contains(&v.id) {
                return Err(self.invalid(format!("scripted id {} repeated", v.id)));
            }
            ids.push(v.id);
            let idx = self
                .segment_index(&v.segment)
                .ok_or_else(|| self.invalid(format!("scripted V{} on unknown segment {:?}", v.id, v.segment)))?;
            let seg = &self.segments[idx];
            if v.lane >= seg.lanes || !(0.0..=seg.length()).contains(&v.offset_m) {
                return Err(self.invalid(format!("scripted V{} is off its segment", v.id)));
            }
            if !(v.speed_mps > 0.0 && v.speed_mps.is_finite()) {
                return Err(self.invalid(format!("scripted V{}: speed must be > 0", v.id)));
            }
            if self.spawns.iter().any(|s| s.segment == v.segment && self.spawn_lanes(s).contains(&v.lane)) {
                return Err(self.invalid(format!(
                    "scripted V{} shares lane {} of {} with spawned traffic",
                    v.id, v.lane, v.segment
                )));
            }
            self.resolve_route(idx, &v.route)?;
        }
        for (i, a) in self.scripted.iter().enumerate() {
            for b in &self.scripted[..i] {
                if a.segment == b.segment && a.lane == b.lane && (a.offset_m - b.offset_m).abs() < MIN_GAP_M {
                    return Err(self.invalid(format!("scripted V{} and V{} closer than {MIN_GAP_M} m", a.id, b.id)));
                }
            }
        }
        Ok(())
    }
}
