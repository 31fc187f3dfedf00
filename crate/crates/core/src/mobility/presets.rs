use super::{ConfigError, Rect, Scenario, ScenarioKind, ScriptedVehicle, Segment, SpawnSpec};

pub const PRESET_NAMES: [&str; 4] = ["freeway", "cross", "t_junction", "merge"];

const LANE_W: f64 = 3.5;
const SLOW: [f64; 2] = [20.0 / 3.6, 60.0 / 3.6];
const FAST: [f64; 2] = [80.0 / 3.6, 120.0 / 3.6];
const RAMP: [f64; 2] = [20.0 / 3.6, 40.0 / 3.6];

fn seg(name: &str, start: [f64; 2], end: [f64; 2], lanes: u32) -> Segment {
    Segment {
        name: name.into(),
        start,
        end,
        lanes,
        lane_width_m: LANE_W,
    }
}

fn spawn(segment: &str, count: u32, speed: [f64; 2], routes: &[&[&str]]) -> SpawnSpec {
    SpawnSpec {
        segment: segment.into(),
        count,
        arrival_rate_per_s: 0.0,
        speed_mps: speed,
        routes: routes
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect(),
        lanes: None,
    }
}

/// 40 m square buildings, 5 m back from a single-lane-each-way curb.
fn corner_blocks(quadrants: &[(f64, f64)]) -> Vec<Rect> {
    let (near, far) = (LANE_W + 5.0, LANE_W + 45.0);
    quadrants
        .iter()
        .map(|&(sx, sy)| {
            let (x0, x1) = if sx > 0.0 { (near, far) } else { (-far, -near) };
            let (y0, y1) = if sy > 0.0 { (near, far) } else { (-far, -near) };
            Rect::new(x0, y0, x1, y1)
        })
        .collect()
}

fn freeway() -> Scenario {
    Scenario {
        name: "freeway".into(),
        kind: ScenarioKind::Freeway,
        segments: vec![seg("main", [0.0, 0.0], [2000.0, 0.0], 3)],
        obstacles: Vec::new(),
        spawns: vec![spawn("main", 200, SLOW, &[])],
        scripted: Vec::new(),
    }
}

fn cross() -> Scenario {
    Scenario {
        name: "cross".into(),
        kind: ScenarioKind::CrossJunction,
        segments: vec![
            seg("eb", [-500.0, 0.0], [500.0, 0.0], 1),
            seg("wb", [500.0, 0.0], [-500.0, 0.0], 1),
            seg("nb", [0.0, -500.0], [0.0, 500.0], 1),
            seg("sb", [0.0, 500.0], [0.0, -500.0], 1),
        ],
        obstacles: corner_blocks(&[(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]),
        spawns: ["eb", "wb", "nb", "sb"]
            .iter()
            .map(|s| spawn(s, 20, SLOW, &[]))
            .collect(),
        scripted: Vec::new(),
    }
}

fn t_junction() -> Scenario {
    let mut obstacles = corner_blocks(&[(1.0, -1.0), (-1.0, -1.0)]);
    obstacles.push(Rect::new(-60.0, LANE_W + 5.0, 60.0, LANE_W + 45.0));
    Scenario {
        name: "t_junction".into(),
        kind: ScenarioKind::TJunction,
        segments: vec![
            seg("eb_w", [-500.0, 0.0], [0.0, 0.0], 1),
            seg("eb_e", [0.0, 0.0], [500.0, 0.0], 1),
            seg("wb_e", [500.0, 0.0], [0.0, 0.0], 1),
            seg("wb_w", [0.0, 0.0], [-500.0, 0.0], 1),
            seg("nb", [0.0, -500.0], [0.0, 0.0], 1),
            seg("sb", [0.0, 0.0], [0.0, -500.0], 1),
        ],
        obstacles,
        spawns: vec![
            spawn("eb_w", 15, SLOW, &[&["eb_e"], &["sb"]]),
            spawn("wb_e", 15, SLOW, &[&["wb_w"], &["sb"]]),
            spawn("nb", 15, SLOW, &[&["eb_e"], &["wb_w"]]),
            spawn("eb_e", 10, SLOW, &[]),
            spawn("wb_w", 10, SLOW, &[]),
            spawn("sb", 10, SLOW, &[]),
        ],
        scripted: Vec::new(),
    }
}

fn merge() -> Scenario {
    Scenario {
        name: "merge".into(),
        kind: ScenarioKind::HighSpeedMerge,
        segments: vec![
            seg("main_a", [-1000.0, 0.0], [0.0, 0.0], 2),
            seg("main_b", [0.0, 0.0], [1000.0, 0.0], 2),
            seg("ramp", [-400.0, -120.0], [0.0, 0.0], 1),
        ],
        // hides the ramp from the upstream main road
        obstacles: vec![Rect::new(-300.0, -50.0, -200.0, -15.0)],
        spawns: vec![
            spawn("main_a", 40, FAST, &[&["main_b"]]),
            spawn("main_b", 30, FAST, &[]),
            spawn("ramp", 6, RAMP, &[&["main_b"]]),
        ],
        scripted: Vec::new(),
    }
}

fn scripted(id: u32, segment: &str, offset_m: f64) -> ScriptedVehicle {
    ScriptedVehicle {
        id,
        segment: segment.into(),
        lane: 0,
        offset_m,
        speed_mps: 5.0,
        route: Vec::new(),
    }
}

/// The cross junction with five placed vehicles around the north-east
/// building. V5 (westbound, 60 m out) cannot see V3 (southbound, 60 m out);
/// V4 stands in the box and sees both. Background traffic runs northbound
/// only, so the placed lanes stay free.
pub fn cross_golden() -> Scenario {
    let mut s = cross();
    s.name = "cross_golden".into();
    s.spawns.retain(|sp| sp.segment == "nb");
    s.scripted = vec![
        scripted(3, "sb", 440.0),
        scripted(4, "wb", 497.0),
        scripted(5, "wb", 440.0),
        scripted(6, "wb", 400.0),
        scripted(7, "eb", 530.0),
    ];
    s
}

/// Built-in scenario by name.
pub fn preset(name: &str) -> Result<Scenario, ConfigError> {
    match name {
        "freeway" => Ok(freeway()),
        "cross" => Ok(cross()),
        "t_junction" => Ok(t_junction()),
        "merge" => Ok(merge()),
        other => Err(ConfigError::UnknownPreset(other.to_string())),
    }
}
