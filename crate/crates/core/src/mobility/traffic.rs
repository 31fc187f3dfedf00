use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{ConfigError, Scenario, SpawnSpec, VehicleState};
use crate::proto::VehicleId;
use crate::radio::stream_seed;

/// Bumper-to-bumper floor between vehicles sharing a lane.
pub const MIN_GAP_M: f64 = 5.0;

const SPAWN_STREAM: u64 = 0x5350_4157;
const ARRIVAL_STREAM: u64 = 0x4152_5256;

fn place(scenario: &Scenario, mut v: VehicleState) -> VehicleState {
    let seg = &scenario.segments[v.segment];
    v.position = seg.lane_point(v.lane, v.offset_m);
    v.heading = seg.heading();
    v
}

fn new_vehicle(
    scenario: &Scenario,
    id: u32,
    segment: usize,
    lane: u32,
    offset_m: f64,
    speed: f64,
    route: Vec<usize>,
) -> VehicleState {
    place(
        scenario,
        VehicleState {
            id: VehicleId(id),
            position: Default::default(),
            speed,
            heading: Default::default(),
            lane,
            segment,
            offset_m,
            route,
        },
    )
}

fn draw_speed(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn draw_route(rng: &mut ChaCha8Rng, routes: &[Vec<usize>]) -> Vec<usize> {
    match routes.len() {
        0 => Vec::new(),
        n => routes[rng.random_range(0..n)].clone(),
    }
}

/// Initial vehicles. Each spawn spec splits its count evenly over its lanes;
/// within a lane, `k` positions are drawn as sorted uniforms on
/// `[0, len - 5k]` shifted by `5i`, which is uniform over all placements with
/// gaps of at least 5 m. Ids follow the scripted ones.
pub fn spawn_scenario(scenario: &Scenario, seed: u64) -> Result<Vec<VehicleState>, ConfigError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[seed, SPAWN_STREAM]));
    let mut out = Vec::new();
    for v in &scenario.scripted {
        let seg = scenario.segment_index(&v.segment).expect("validated");
        let route = v
            .route
            .iter()
            .map(|n| scenario.segment_index(n).expect("validated"))
            .collect();
        out.push(new_vehicle(scenario, v.id, seg, v.lane, v.offset_m, v.speed_mps, route));
    }
    let mut next_id = scenario.scripted.iter().map(|v| v.id + 1).max().unwrap_or(0);
    for spec in &scenario.spawns {
        let seg_idx = scenario.segment_index(&spec.segment).expect("validated");
        let seg = &scenario.segments[seg_idx];
        let len = seg.length();
        let lanes = scenario.spawn_lanes(spec);
        let per_lane_cap = (len / MIN_GAP_M).floor() as u32;
        let capacity = per_lane_cap * lanes.len() as u32;
        if spec.count > capacity {
            return Err(ConfigError::OverCapacity {
                scenario: scenario.name.clone(),
                segment: spec.segment.clone(),
                requested: spec.count,
                capacity,
            });
        }
        let routes = scenario.resolve_routes(spec)?;
        let n_lanes = lanes.len() as u32;
        for (i, &lane) in lanes.iter().enumerate() {
            let k = spec.count / n_lanes + u32::from((i as u32) < spec.count % n_lanes);
            let slack = len - MIN_GAP_M * f64::from(k);
            let mut u: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..=slack.max(0.0))).collect();
            u.sort_by(f64::total_cmp);
            for (j, base) in u.into_iter().enumerate() {
                let offset = base + MIN_GAP_M * j as f64;
                let speed = draw_speed(&mut rng, spec.speed_mps);
                let route = draw_route(&mut rng, &routes);
                out.push(new_vehicle(scenario, next_id, seg_idx, lane, offset, speed, route));
                next_id += 1;
            }
        }
    }
    Ok(out)
}

/// Advances every vehicle by `dt` seconds.
///
/// Within each lane, vehicles move front to back at constant speed; one that
/// would end up closer than 5 m to its leader stops at the 5 m mark and takes
/// the leader's speed if slower. Vehicles running past a segment end enter the
/// next route segment (in id order, behind whatever already occupies the
/// target lane) or leave the road when the route is empty. A vehicle that
/// cannot enter waits at the end of its segment.
pub fn step(states: &[VehicleState], dt: f64, scenario: &Scenario) -> Vec<VehicleState> {
    let mut lanes: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for (i, v) in states.iter().enumerate() {
        lanes.entry((v.segment, v.lane)).or_default().push(i);
    }
    let mut next: Vec<Option<VehicleState>> = states.iter().cloned().map(Some).collect();
    let mut overflow: Vec<(VehicleId, usize, f64)> = Vec::new();

    for ((seg_idx, _), mut members) in lanes {
        members.sort_by(|&a, &b| {
            states[b]
                .offset_m
                .total_cmp(&states[a].offset_m)
                .then(states[b].id.cmp(&states[a].id))
        });
        let len = scenario.segments[seg_idx].length();
        let mut leader: Option<(f64, f64)> = None;
        for i in members {
            let v = &states[i];
            let mut speed = v.speed;
            let mut off = v.offset_m + speed * dt;
            if let Some((lead_off, lead_speed)) = leader {
                if off > lead_off - MIN_GAP_M {
                    off = (lead_off - MIN_GAP_M).max(v.offset_m);
                    speed = speed.min(lead_speed);
                }
            }
            if off > len {
                if v.route.is_empty() {
                    next[i] = None;
                    continue;
                }
                overflow.push((v.id, i, off - len));
                off = len;
            }
            let n = next[i].as_mut().expect("present");
            n.offset_m = off;
            n.speed = speed;
            leader = Some((off, speed));
        }
    }

    overflow.sort_by_key(|&(id, _, _)| id);
    for (_, i, extra) in overflow {
        let cur = next[i].clone().expect("present");
        let target = cur.route[0];
        let tseg = &scenario.segments[target];
        let lane = cur.lane.min(tseg.lanes - 1);
        let rear = next
            .iter()
            .flatten()
            .filter(|o| o.segment == target && o.lane == lane && o.id != cur.id)
            .map(|o| (o.offset_m, o.speed))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let mut entry = extra.min(tseg.length());
        let mut speed = cur.speed;
        if let Some((rear_off, rear_speed)) = rear {
            if entry > rear_off - MIN_GAP_M {
                entry = rear_off - MIN_GAP_M;
                speed = speed.min(rear_speed);
            }
        }
        let n = next[i].as_mut().expect("present");
        n.speed = speed;
        if entry >= 0.0 {
            n.segment = target;
            n.lane = lane;
            n.offset_m = entry;
            n.route.remove(0);
        }
    }

    next.into_iter().flatten().map(|v| place(scenario, v)).collect()
}

/// Poisson entries at the start of segments with a nonzero arrival rate.
/// An arrival is dropped when the entry point is occupied.
#[derive(Debug, Clone)]
pub struct Arrivals {
    rng: ChaCha8Rng,
    next_id: u32,
    dropped: u64,
}

impl Arrivals {
    pub fn new(seed: u64, existing: &[VehicleState]) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(stream_seed(&[seed, ARRIVAL_STREAM])),
            next_id: existing.iter().map(|v| v.id.0 + 1).max().unwrap_or(0),
            dropped: 0,
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// New vehicles entering during the next `dt` seconds.
    pub fn tick(&mut self, states: &[VehicleState], dt: f64, scenario: &Scenario) -> Vec<VehicleState> {
        let mut born: Vec<VehicleState> = Vec::new();
        let specs: Vec<&SpawnSpec> = scenario
            .spawns
            .iter()
            .filter(|s| s.arrival_rate_per_s > 0.0)
            .collect();
        for spec in specs {
            let seg_idx = scenario.segment_index(&spec.segment).expect("validated");
            let routes = scenario.resolve_routes(spec).expect("validated");
            let lanes = scenario.spawn_lanes(spec);
            let lambda = spec.arrival_rate_per_s * dt;
            let n = Poisson::new(lambda).expect("positive rate").sample(&mut self.rng) as u64;
            for _ in 0..n {
                let lane = lanes[self.rng.random_range(0..lanes.len())];
                let blocked = states
                    .iter()
                    .chain(&born)
                    .any(|o| o.segment == seg_idx && o.lane == lane && o.offset_m < MIN_GAP_M);
                let speed = draw_speed(&mut self.rng, spec.speed_mps);
                let route = draw_route(&mut self.rng, &routes);
                if blocked {
                    self.dropped += 1;
                    continue;
                }
                born.push(new_vehicle(scenario, self.next_id, seg_idx, lane, 0.0, speed, route));
                self.next_id += 1;
            }
        }
        born
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{preset, ScriptedVehicle, Segment};

    fn road(len: f64, lanes: u32) -> Scenario {
        let mut s = preset("freeway").unwrap();
        s.segments = vec![Segment {
            name: "main".into(),
            start: [0.0, 0.0],
            end: [len, 0.0],
            lanes,
            lane_width_m: 3.5,
        }];
        s.spawns.clear();
        s
    }

    fn scripted(id: u32, offset: f64, speed: f64) -> ScriptedVehicle {
        ScriptedVehicle {
            id,
            segment: "main".into(),
            lane: 0,
            offset_m: offset,
            speed_mps: speed,
            route: Vec::new(),
        }
    }

    fn lane_gaps_ok(states: &[VehicleState]) -> bool {
        let mut by_lane: BTreeMap<(usize, u32), Vec<f64>> = BTreeMap::new();
        for v in states {
            by_lane.entry((v.segment, v.lane)).or_default().push(v.offset_m);
        }
        by_lane.values_mut().all(|offs| {
            offs.sort_by(f64::total_cmp);
            offs.windows(2).all(|w| w[1] - w[0] >= MIN_GAP_M - 1e-9)
        })
    }

    #[test]
    fn freeway_spawn_matches_scale() {
        let s = preset("freeway").unwrap();
        let v = spawn_scenario(&s, 1).unwrap();
        assert_eq!(v.len(), 200);
        assert!(lane_gaps_ok(&v));
        let ids: Vec<u32> = v.iter().map(|x| x.id.0).collect();
        assert_eq!(ids, (0..200).collect::<Vec<_>>());
        for x in &v {
            assert!(x.speed >= 20.0 / 3.6 && x.speed <= 60.0 / 3.6);
            assert!((x.heading.degrees() - 90.0).abs() < 1e-9);
            assert!((0.0..2000.0).contains(&x.position.x));
        }
        let per_lane: Vec<usize> = (0..3).map(|l| v.iter().filter(|x| x.lane == l).count()).collect();
        assert_eq!(per_lane, vec![67, 67, 66]);
    }

    #[test]
    fn spawn_is_seeded() {
        let s = preset("cross").unwrap();
        assert_eq!(spawn_scenario(&s, 9).unwrap(), spawn_scenario(&s, 9).unwrap());
        assert_ne!(spawn_scenario(&s, 9).unwrap(), spawn_scenario(&s, 10).unwrap());
    }

    #[test]
    fn single_car_is_deterministic() {
        let mut s = preset("freeway").unwrap();
        s.spawns[0].count = 1;
        let a = spawn_scenario(&s, 3).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, spawn_scenario(&s, 3).unwrap());
    }

    #[test]
    fn over_capacity_rejected() {
        let mut s = preset("freeway").unwrap();
        s.spawns[0].count = 10_000;
        match spawn_scenario(&s, 0) {
            Err(ConfigError::OverCapacity { capacity, .. }) => assert_eq!(capacity, 3 * 400),
            other => panic!("{other:?}"),
        }
        s.spawns[0].count = 1200;
        let full = spawn_scenario(&s, 0).unwrap();
        assert!(lane_gaps_ok(&full));
    }

    #[test]
    fn constant_speed_advance() {
        let mut s = road(1000.0, 1);
        s.scripted = vec![scripted(0, 100.0, 20.0)];
        let v = spawn_scenario(&s, 0).unwrap();
        let n = step(&v, 0.1, &s);
        assert!((n[0].position.x - 102.0).abs() < 1e-9);
        assert_eq!(n[0].speed, 20.0);
    }

    #[test]
    fn follower_adopts_leader_speed() {
        let mut s = road(1000.0, 1);
        s.scripted = vec![scripted(0, 105.0, 20.0), scripted(1, 100.0, 30.0)];
        let v = spawn_scenario(&s, 0).unwrap();
        let n = step(&v, 0.1, &s);
        let f = n.iter().find(|x| x.id == VehicleId(1)).unwrap();
        assert_eq!(f.speed, 20.0);
        assert!((f.offset_m - 102.0).abs() < 1e-9);
    }

    #[test]
    fn leaves_at_road_end() {
        let mut s = road(100.0, 1);
        s.scripted = vec![scripted(0, 99.0, 20.0), scripted(1, 50.0, 10.0)];
        let v = spawn_scenario(&s, 0).unwrap();
        let n = step(&v, 0.1, &s);
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].id, VehicleId(1));
    }

    #[test]
    fn junction_turn_follows_route() {
        let mut s = preset("t_junction").unwrap();
        s.spawns.clear();
        s.scripted = vec![ScriptedVehicle {
            id: 7,
            segment: "nb".into(),
            lane: 0,
            offset_m: 499.0,
            speed_mps: 20.0,
            route: vec!["wb_w".into()],
        }];
        let v = spawn_scenario(&s, 0).unwrap();
        let n = step(&v, 0.1, &s);
        assert_eq!(s.segments[n[0].segment].name, "wb_w");
        assert!((n[0].offset_m - 1.0).abs() < 1e-9);
        assert!((n[0].position.x + 1.0).abs() < 1e-9 && (n[0].position.y - 1.75).abs() < 1e-9);
        assert!(n[0].route.is_empty());
    }

    #[test]
    fn blocked_entry_waits_at_segment_end() {
        let mut s = preset("t_junction").unwrap();
        s.spawns.clear();
        s.scripted = vec![
            ScriptedVehicle {
                id: 1,
                segment: "nb".into(),
                lane: 0,
                offset_m: 499.0,
                speed_mps: 20.0,
                route: vec!["eb_e".into()],
            },
            ScriptedVehicle {
                id: 2,
                segment: "eb_e".into(),
                lane: 0,
                offset_m: 0.5,
                speed_mps: 1.0,
                route: Vec::new(),
            },
        ];
        let v = spawn_scenario(&s, 0).unwrap();
        let n = step(&v, 0.1, &s);
        let a = n.iter().find(|x| x.id == VehicleId(1)).unwrap();
        assert_eq!(s.segments[a.segment].name, "nb");
        assert_eq!(a.offset_m, 500.0);
        assert_eq!(a.speed, 1.0);
    }

    #[test]
    fn arrivals_respect_entry_gap() {
        let mut s = road(2000.0, 1);
        s.spawns = vec![SpawnSpec {
            segment: "main".into(),
            count: 0,
            arrival_rate_per_s: 50.0,
            speed_mps: [10.0, 10.0],
            routes: Vec::new(),
            lanes: None,
        }];
        let mut states = spawn_scenario(&s, 0).unwrap();
        let mut arr = Arrivals::new(0, &states);
        for _ in 0..100 {
            states = step(&states, 0.1, &s);
            let born = arr.tick(&states, 0.1, &s);
            states.extend(born);
            assert!(lane_gaps_ok(&states));
        }
        assert!(states.len() >= 10);
        assert!(arr.dropped() > 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn gaps_survive_any_number_of_steps(seed in any::<u64>(), name in prop::sample::select(&["freeway", "cross", "t_junction", "merge"][..]), steps in 1usize..150) {
                let s = preset(name).unwrap();
                let mut v = spawn_scenario(&s, seed).unwrap();
                let lo = s.spawns.iter().map(|x| x.speed_mps[0]).fold(f64::INFINITY, f64::min);
                let hi = s.spawns.iter().map(|x| x.speed_mps[1]).fold(0.0, f64::max);
                for _ in 0..steps {
                    v = step(&v, 0.1, &s);
                    prop_assert!(lane_gaps_ok(&v));
                    for x in &v {
                        let len = s.segments[x.segment].length();
                        prop_assert!(x.offset_m >= 0.0 && x.offset_m <= len + 1e-9);
                        prop_assert!(x.speed >= lo - 1e-9 && x.speed <= hi + 1e-9);
                    }
                }
            }

            #[test]
            fn spawn_gaps(seed in any::<u64>(), count in 1u32..1200) {
                let mut s = preset("freeway").unwrap();
                s.spawns[0].count = count;
                let v = spawn_scenario(&s, seed).unwrap();
                prop_assert_eq!(v.len(), count as usize);
                prop_assert!(lane_gaps_ok(&v));
            }
        }
    }
}
