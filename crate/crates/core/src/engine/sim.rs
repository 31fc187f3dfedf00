use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EngineError, EventKind, EventQueue, Mode, RunConfig};
use crate::metrics::{cars_sensed, visibility, Collector, MetricsReport, RunMeta};
use crate::mobility::{spawn_scenario, step, Arrivals, Scenario, VehicleState};
use crate::proto::{
    accept_pnt, build_nt, compute_congestion_with, decode_beacon, encode_beacon, gate_open,
    make_pnt, should_inspect, Beacon, CongestionSample, Crnt, Heading, Millis, NeighborTable,
    Pnt, PntVerdict, Position, SequenceList, VehicleId, HEADER_LEN, MAX_FRAME_LEN,
};
use crate::radio::{
    airtime_us, resolve_frame, schedule_tx, stream_seed, KeyedFading, Micros, ReceptionOutcome,
    RxNode, Transmission,
};

const OFFSET_STREAM: u64 = 0x4f46_4653;
const MAC_STREAM: u64 = 0x4d41_4321;
const FADING_STREAM: u64 = 0x4641_4445;
const INJECT_STREAM: u64 = 0x494e_4a21;

/// Transmissions are kept this long after ending, for overlap and carrier
/// sense lookups.
const ON_AIR_MARGIN_US: Micros = 5_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep one text line per processed protocol event.
    pub event_log: bool,
    /// Keep every per-receiver radio outcome.
    pub radio_log: bool,
}

/// What one NT timer firing decided.
#[derive(Debug, Clone, PartialEq)]
pub struct NtDecision {
    pub time_us: Micros,
    pub vehicle: VehicleId,
    /// `None` when nothing was heard (sparse area).
    pub cp_pct: Option<f64>,
    pub neighbors: usize,
    /// Rows of the table armed for the next beacon, if any.
    pub pnt_rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioRecord {
    pub time_us: Micros,
    pub frame: u64,
    pub sender: VehicleId,
    pub receiver: VehicleId,
    pub outcome: ReceptionOutcome,
    /// Delivered by the channel but dropped by the interference injector.
    pub injected: bool,
}

impl RadioRecord {
    pub fn delivered(&self) -> bool {
        self.outcome.is_delivered() && !self.injected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub frame: u64,
    pub sender: VehicleId,
    pub generated_us: Micros,
    pub start_us: Micros,
    pub end_us: Micros,
    pub bytes: usize,
    pub has_pnt: bool,
    pub delivered_to: u32,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub event_log: Vec<String>,
    pub radio_log: Vec<RadioRecord>,
    pub nt_decisions: Vec<NtDecision>,
    pub transmissions: Vec<TxRecord>,
}

/// Result of an NT timer: the congestion estimate and, if the gate was open
/// and someone was heard, the table to piggyback.
#[derive(Debug, Clone, PartialEq)]
pub struct NtTick {
    pub cp_pct: Option<f64>,
    pub neighbors: usize,
    pub pnt: Option<Pnt>,
}

/// NT timer logic. Counts the beacons heard per sender over the last
/// `nt_period_ms` (capped at the expected count), computes CP, and builds a
/// table only while CP is under the threshold. Nothing heard means nothing
/// to send.
pub fn vehicle_tick_nt(
    owner: VehicleId,
    owner_pos: Position,
    received: &[(Micros, Beacon)],
    now_us: Micros,
    next_sn: u16,
    cfg: &RunConfig,
) -> NtTick {
    let window_us = cfg.nt_period_ms * 1000;
    let recent: Vec<Beacon> = received
        .iter()
        .filter(|(t, b)| *t <= now_us && now_us - *t < window_us && b.sender != owner)
        .map(|(_, b)| b.clone())
        .collect();
    let expected = (cfg.nt_period_ms / cfg.beacon_period_ms).max(1) as u32;
    let mut sample = CongestionSample::new();
    for b in &recent {
        sample.record(b.sender);
    }
    sample.clamp_counts(expected);
    let neighbors = sample.n();
    let Ok(cp) = compute_congestion_with(&sample, expected) else {
        return NtTick {
            cp_pct: None,
            neighbors,
            pnt: None,
        };
    };
    let mut tick = NtTick {
        cp_pct: Some(cp),
        neighbors,
        pnt: None,
    };
    if gate_open(cp, cfg.cp_threshold_pct) {
        let now_ms = now_us / 1000;
        let nt = build_nt(owner, owner_pos, &recent, now_ms);
        tick.pnt = make_pnt(&nt, now_ms, next_sn, cfg.pnt_lifetime_ms, MAX_FRAME_LEN - HEADER_LEN).ok();
    }
    tick
}

#[derive(Debug, Clone)]
struct Queued {
    payload: Vec<u8>,
    generated_us: Micros,
    has_pnt: bool,
}

#[derive(Debug, Clone)]
struct Node {
    alive: bool,
    position: Position,
    speed: f64,
    heading: Heading,
    mac_rng: ChaCha8Rng,
    rx_log: VecDeque<(Micros, Beacon)>,
    crnt: Crnt,
    sl: SequenceList,
    inspected: BTreeMap<VehicleId, Millis>,
    next_sn: u16,
    pending_pnt: Option<Pnt>,
    last_cp: Option<f64>,
    backlog: VecDeque<Queued>,
    access_pending: bool,
    on_air: bool,
}

#[derive(Debug, Clone)]
struct InFlight {
    tx: Transmission,
    generated_us: Micros,
    has_pnt: bool,
}

/// One simulation instance. Drive it with [`Simulation::run_until`] to
/// inspect intermediate state, or call [`Simulation::finish`].
pub struct Simulation {
    cfg: RunConfig,
    scenario: Scenario,
    opts: RunOptions,
    end_us: Micros,
    now_us: Micros,
    queue: EventQueue,
    vehicles: Vec<VehicleState>,
    nodes: BTreeMap<VehicleId, Node>,
    arrivals: Arrivals,
    on_air: Vec<InFlight>,
    next_frame: u64,
    fading: KeyedFading,
    history: VecDeque<(Millis, BTreeMap<VehicleId, Position>)>,
    collector: Collector,
    tracked: Option<VehicleId>,
    event_log: Vec<String>,
    radio_log: Vec<RadioRecord>,
    nt_decisions: Vec<NtDecision>,
    transmissions: Vec<TxRecord>,
}

fn runtime(e: impl std::fmt::Display) -> EngineError {
    EngineError::Runtime(e.to_string())
}

impl Simulation {
    pub fn new(cfg: RunConfig, opts: RunOptions) -> Result<Self, EngineError> {
        cfg.validate()?;
        let scenario = cfg.resolve_scenario()?;
        Self::with_scenario(cfg, scenario, opts)
    }

    pub fn with_scenario(cfg: RunConfig, scenario: Scenario, opts: RunOptions) -> Result<Self, EngineError> {
        cfg.validate()?;
        let vehicles = spawn_scenario(&scenario, cfg.seed)?;
        let tracked = cfg.tracked_vehicle.map(VehicleId).or_else(|| nearest_to_centroid(&vehicles));
        let mut sim = Self {
            end_us: u64::from(cfg.duration_s) * 1_000_000,
            now_us: 0,
            queue: EventQueue::new(),
            arrivals: Arrivals::new(cfg.seed, &vehicles),
            nodes: BTreeMap::new(),
            on_air: Vec::new(),
            next_frame: 1,
            fading: KeyedFading::new(stream_seed(&[cfg.seed, FADING_STREAM]), cfg.channel.m),
            history: VecDeque::new(),
            collector: Collector::new(cfg.duration_s),
            tracked,
            event_log: Vec::new(),
            radio_log: Vec::new(),
            nt_decisions: Vec::new(),
            transmissions: Vec::new(),
            vehicles: Vec::new(),
            cfg,
            scenario,
            opts,
        };
        if sim.end_us == 0 {
            return Ok(sim);
        }
        for s in 1..=sim.cfg.duration_s {
            sim.queue.push(u64::from(s) * 1_000_000, EventKind::MetricsTick(s));
        }
        let step_us = sim.cfg.mobility_step_ms * 1000;
        if step_us < sim.end_us {
            sim.queue.push(step_us, EventKind::MobilityStep);
        }
        sim.admit(vehicles, 0);
        sim.record_history();
        Ok(sim)
    }

    /// Adds vehicles and starts their timers at a seeded offset within one
    /// beacon period. The NT timer is queued first so that, at equal times,
    /// its table rides the beacon generated in the same instant.
    fn admit(&mut self, born: Vec<VehicleState>, now: Micros) {
        let period_us = self.cfg.beacon_period_ms * 1000;
        for v in &born {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[self.cfg.seed, OFFSET_STREAM, u64::from(v.id.0)]));
            let first = now + rng.random_range(0..period_us);
            self.nodes.insert(
                v.id,
                Node {
                    alive: true,
                    position: v.position,
                    speed: v.speed,
                    heading: v.heading,
                    mac_rng: ChaCha8Rng::seed_from_u64(stream_seed(&[self.cfg.seed, MAC_STREAM, u64::from(v.id.0)])),
                    rx_log: VecDeque::new(),
                    crnt: Crnt::new(v.id),
                    sl: SequenceList::new(),
                    inspected: BTreeMap::new(),
                    next_sn: 0,
                    pending_pnt: None,
                    last_cp: None,
                    backlog: VecDeque::new(),
                    access_pending: false,
                    on_air: false,
                },
            );
            if first < self.end_us {
                if self.cfg.mode == Mode::Crnt {
                    self.queue.push(first, EventKind::NtTimer(v.id));
                }
                self.queue.push(first, EventKind::BeaconTimer(v.id));
            }
        }
        self.vehicles.extend(born);
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn now_us(&self) -> Micros {
        self.now_us
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn position(&self, id: VehicleId) -> Option<Position> {
        self.nodes.get(&id).map(|n| n.position)
    }

    /// The vehicle's combined table, without purging.
    pub fn crnt(&self, id: VehicleId) -> Option<&Crnt> {
        self.nodes.get(&id).map(|n| &n.crnt)
    }

    /// Direct neighbors with a beacon no older than the table lifetime.
    pub fn direct_table(&self, id: VehicleId) -> Option<NeighborTable> {
        let node = self.nodes.get(&id)?;
        Some(self.direct_of(id, node))
    }

    fn direct_of(&self, id: VehicleId, node: &Node) -> NeighborTable {
        let now_ms = self.now_us / 1000;
        let fresh: Vec<Beacon> = node
            .rx_log
            .iter()
            .filter(|(_, b)| now_ms.saturating_sub(b.ts) <= self.cfg.pnt_lifetime_ms)
            .map(|(_, b)| b.clone())
            .collect();
        build_nt(id, node.position, &fresh, now_ms)
    }

    pub fn nt_decisions(&self) -> &[NtDecision] {
        &self.nt_decisions
    }

    pub fn radio_log(&self) -> &[RadioRecord] {
        &self.radio_log
    }

    /// Processes every event up to and including `t_us`.
    pub fn run_until(&mut self, t_us: Micros) -> Result<(), EngineError> {
        while self.queue.peek_time().is_some_and(|t| t <= t_us) {
            let ev = self.queue.pop().expect("peeked");
            self.now_us = ev.time_us;
            match ev.kind {
                EventKind::BeaconTimer(v) => self.on_beacon_timer(v)?,
                EventKind::NtTimer(v) => self.on_nt_timer(v),
                EventKind::TxStart(v) => self.on_tx_start(v),
                EventKind::TxEnd(f) => self.on_tx_end(f)?,
                EventKind::MobilityStep => self.on_mobility_step(),
                EventKind::MetricsTick(s) => self.on_metrics_tick(s),
            }
        }
        self.now_us = self.now_us.max(t_us.min(self.end_us));
        Ok(())
    }

    /// Runs to completion, draining frames still queued at the end.
    pub fn finish(mut self) -> Result<RunOutput, EngineError> {
        self.run_until(Micros::MAX)?;
        let meta = RunMeta {
            scenario: self.scenario.name.clone(),
            mode: self.cfg.mode.to_string(),
            seed: self.cfg.seed,
            duration_s: self.cfg.duration_s,
            tracked: self.tracked,
            config: self.cfg.flatten(),
        };
        Ok(RunOutput {
            report: self.collector.finish(meta),
            event_log: self.event_log,
            radio_log: self.radio_log,
            nt_decisions: self.nt_decisions,
            transmissions: self.transmissions,
        })
    }

    fn log(&mut self, line: impl FnOnce() -> String) {
        if self.opts.event_log {
            let l = format!("{} {}", self.now_us, line());
            self.event_log.push(l);
        }
    }

    fn on_beacon_timer(&mut self, v: VehicleId) -> Result<(), EngineError> {
        let now = self.now_us;
        let crnt_mode = self.cfg.mode == Mode::Crnt;
        let interval = self.cfg.beacon_period_ms as u16;
        let Some(node) = self.nodes.get_mut(&v).filter(|n| n.alive) else {
            return Ok(());
        };
        let beacon = Beacon {
            sender: v,
            ts: now / 1000,
            interval_ms: interval,
            position: node.position,
            speed: node.speed,
            heading: node.heading,
            pnt: if crnt_mode { node.pending_pnt.take() } else { None },
        };
        let payload = encode_beacon(&beacon).map_err(runtime)?;
        let has_pnt = beacon.pnt.is_some();
        let bytes = payload.len();
        node.backlog.push_back(Queued {
            payload,
            generated_us: now,
            has_pnt,
        });
        let idle = !node.access_pending && !node.on_air;
        self.log(|| format!("beacon {v} bytes={bytes} pnt={has_pnt}"));
        if idle {
            self.request_access(v);
        }
        let next = now + self.cfg.beacon_period_ms * 1000;
        if next < self.end_us {
            self.queue.push(next, EventKind::BeaconTimer(v));
        }
        Ok(())
    }

    fn on_nt_timer(&mut self, v: VehicleId) {
        let now = self.now_us;
        let Some(node) = self.nodes.get(&v).filter(|n| n.alive) else {
            return;
        };
        let log: Vec<(Micros, Beacon)> = node.rx_log.iter().cloned().collect();
        let tick = vehicle_tick_nt(v, node.position, &log, now, node.next_sn, &self.cfg);
        let node = self.nodes.get_mut(&v).expect("present");
        node.last_cp = tick.cp_pct;
        let rows = tick.pnt.as_ref().map(|p| p.entries.len());
        if let Some(pnt) = tick.pnt {
            node.next_sn = node.next_sn.wrapping_add(1);
            node.pending_pnt = Some(pnt);
        }
        self.nt_decisions.push(NtDecision {
            time_us: now,
            vehicle: v,
            cp_pct: tick.cp_pct,
            neighbors: tick.neighbors,
            pnt_rows: rows,
        });
        self.log(|| match (tick.cp_pct, rows) {
            (None, _) => format!("nt {v} sparse"),
            (Some(cp), Some(r)) => format!("nt {v} cp={cp:.3} armed rows={r}"),
            (Some(cp), None) => format!("nt {v} cp={cp:.3} gated"),
        });
        let next = now + self.cfg.nt_period_ms * 1000;
        if next < self.end_us {
            self.queue.push(next, EventKind::NtTimer(v));
        }
    }

    /// Latest end of any earlier-started frame `v` can hear.
    fn sensed_busy_until(&self, v: VehicleId) -> Option<Micros> {
        let pos = self.nodes[&v].position;
        let range = self.cfg.channel.comm_range_m;
        self.on_air
            .iter()
            .filter(|f| f.tx.sender != v && f.tx.start_us < self.now_us)
            .filter(|f| f.tx.sender_pos.distance_to(&pos) <= range)
            .filter(|f| self.scenario.line_of_sight(f.tx.sender_pos, pos))
            .map(|f| f.tx.end_us)
            .max()
    }

    fn request_access(&mut self, v: VehicleId) {
        let now = self.now_us;
        let busy = self.sensed_busy_until(v);
        let mac = self.cfg.mac.clone();
        let node = self.nodes.get_mut(&v).expect("present");
        let start = match busy {
            Some(b) => schedule_tx(now, b, &mut node.mac_rng, &mac),
            None => now,
        };
        node.access_pending = true;
        self.queue.push(start, EventKind::TxStart(v));
    }

    fn on_tx_start(&mut self, v: VehicleId) {
        let now = self.now_us;
        if let Some(b) = self.sensed_busy_until(v) {
            if b + self.cfg.mac.difs_us > now {
                self.request_access(v);
                return;
            }
        }
        let node = self.nodes.get_mut(&v).expect("present");
        node.access_pending = false;
        let Some(frame) = node.backlog.pop_front() else {
            return;
        };
        node.on_air = true;
        let id = self.next_frame;
        self.next_frame += 1;
        let end = now + airtime_us(frame.payload.len(), &self.cfg.channel);
        let bytes = frame.payload.len();
        let tx = Transmission {
            id,
            sender: v,
            payload: frame.payload,
            start_us: now,
            end_us: end,
            sender_pos: node.position,
        };
        self.collector.record_tx(now, v, frame.has_pnt);
        self.on_air.push(InFlight {
            tx,
            generated_us: frame.generated_us,
            has_pnt: frame.has_pnt,
        });
        self.queue.push(end, EventKind::TxEnd(id));
        self.log(|| format!("tx {v} frame={id} bytes={bytes} end={end}"));
    }

    fn injected_drop(&self, frame: u64, rx: VehicleId) -> bool {
        let Some(inj) = &self.cfg.injector else {
            return false;
        };
        if !inj.active_at(self.now_us) {
            return false;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[self.cfg.seed, INJECT_STREAM, frame, u64::from(rx.0)]));
        rng.random::<f64>() < inj.drop_probability
    }

    fn on_tx_end(&mut self, frame: u64) -> Result<(), EngineError> {
        let now = self.now_us;
        let idx = self
            .on_air
            .iter()
            .position(|f| f.tx.id == frame)
            .ok_or_else(|| runtime(format!("frame {frame} ended but was never on the air")))?;
        let target = self.on_air[idx].tx.clone();
        let (generated_us, has_pnt) = (self.on_air[idx].generated_us, self.on_air[idx].has_pnt);
        let receivers: Vec<RxNode> = self
            .nodes
            .iter()
            .filter(|(_, n)| n.alive)
            .map(|(&id, n)| RxNode { id, position: n.position })
            .collect();
        let receptions = {
            let others: Vec<&Transmission> = self
                .on_air
                .iter()
                .map(|f| &f.tx)
                .filter(|t| t.id != frame && t.overlaps(&target))
                .collect();
            let scenario = &self.scenario;
            let los = |a: Position, b: Position| scenario.line_of_sight(a, b);
            resolve_frame(&target, &others, &receivers, &los, &self.cfg.channel, &mut self.fading)
        };
        let decoded = decode_beacon(&target.payload).map_err(runtime)?;
        let mut delivered_to = 0u32;
        let mut collided = 0u32;
        for r in &receptions {
            let injected = r.outcome.is_delivered() && self.injected_drop(frame, r.receiver);
            let ok = r.outcome.is_delivered() && !injected;
            self.collector.record_reception(now, r.receiver, ok, r.outcome.is_collision());
            collided += u32::from(r.outcome.is_collision());
            if self.opts.radio_log {
                self.radio_log.push(RadioRecord {
                    time_us: now,
                    frame,
                    sender: r.sender,
                    receiver: r.receiver,
                    outcome: r.outcome,
                    injected,
                });
            }
            if ok {
                delivered_to += 1;
                self.deliver(r.receiver, &decoded);
            }
        }
        if delivered_to > 0 {
            self.collector.record_delivery(now, target.sender, now - generated_us);
        }
        self.transmissions.push(TxRecord {
            frame,
            sender: target.sender,
            generated_us,
            start_us: target.start_us,
            end_us: target.end_us,
            bytes: target.payload.len(),
            has_pnt,
            delivered_to,
        });
        self.log(|| format!("end frame={frame} delivered={delivered_to} collided={collided}"));
        let node = self.nodes.get_mut(&target.sender).expect("present");
        node.on_air = false;
        if !node.backlog.is_empty() && !node.access_pending {
            self.request_access(target.sender);
        }
        self.on_air.retain(|f| f.tx.end_us + ON_AIR_MARGIN_US >= now);
        Ok(())
    }

    /// Receive path: direct table update, then the piggybacked table unless
    /// this peer's tables were inspected within the hold-off.
    fn deliver(&mut self, rx: VehicleId, beacon: &Beacon) {
        let now = self.now_us;
        let now_ms = now / 1000;
        let horizon_us = (self.cfg.nt_period_ms.max(self.cfg.pnt_lifetime_ms) + 1000) * 1000;
        let node = self.nodes.get_mut(&rx).expect("receiver exists");
        node.rx_log.push_back((now, Beacon { pnt: None, ..beacon.clone() }));
        while node.rx_log.front().is_some_and(|(t, _)| now - t > horizon_us) {
            node.rx_log.pop_front();
        }
        node.crnt.observe_direct(beacon);
        if beacon.pnt.is_none() || !should_inspect(beacon.sender, now_ms, &node.inspected) {
            return;
        }
        node.inspected.insert(beacon.sender, now_ms);
        let verdict = accept_pnt(&mut node.crnt, &mut node.sl, beacon, now_ms);
        if verdict != PntVerdict::NoPnt {
            let sender = beacon.sender;
            self.log(|| format!("pnt {rx} from {sender} {verdict:?}"));
        }
    }

    fn on_mobility_step(&mut self) {
        let now = self.now_us;
        let dt = self.cfg.mobility_step_ms as f64 / 1000.0;
        let next = step(&self.vehicles, dt, &self.scenario);
        let born = self.arrivals.tick(&next, dt, &self.scenario);
        let alive: BTreeMap<VehicleId, &VehicleState> = next.iter().map(|v| (v.id, v)).collect();
        for (id, node) in self.nodes.iter_mut().filter(|(_, n)| n.alive) {
            match alive.get(id) {
                Some(v) => {
                    node.position = v.position;
                    node.speed = v.speed;
                    node.heading = v.heading;
                }
                None => node.alive = false,
            }
        }
        let (gone, n) = (self.vehicles.len() + born.len() - next.len() - born.len(), next.len());
        self.vehicles = next;
        if !born.is_empty() {
            self.admit(born, now);
        }
        self.record_history();
        self.log(|| format!("step vehicles={n} left={gone}"));
        let t = now + self.cfg.mobility_step_ms * 1000;
        if t < self.end_us {
            self.queue.push(t, EventKind::MobilityStep);
        }
    }

    fn record_history(&mut self) {
        let now_ms = self.now_us / 1000;
        let snap = self
            .nodes
            .iter()
            .filter(|(_, n)| n.alive)
            .map(|(&id, n)| (id, n.position))
            .collect();
        self.history.push_back((now_ms, snap));
        let keep_ms = self.cfg.pnt_lifetime_ms + self.cfg.nt_period_ms + 2000;
        while self.history.len() > 1 && now_ms - self.history[0].0 > keep_ms {
            self.history.pop_front();
        }
    }

    /// Where `id` stood at `t_ms`, from the per-step snapshots.
    fn position_at(&self, id: VehicleId, t_ms: Millis) -> Option<Position> {
        let upto = self.history.partition_point(|(t, _)| *t <= t_ms);
        self.history
            .range(..upto)
            .rev()
            .find_map(|(_, snap)| snap.get(&id).copied())
            .or_else(|| self.history.iter().find_map(|(_, snap)| snap.get(&id).copied()))
    }

    fn on_metrics_tick(&mut self, second: u32) {
        let now_ms = self.now_us / 1000;
        let horizon = self.cfg.pnt_lifetime_ms;
        let ids: Vec<VehicleId> = self.nodes.iter().filter(|(_, n)| n.alive).map(|(&id, _)| id).collect();
        for id in ids {
            let node = self.nodes.get_mut(&id).expect("present");
            node.crnt.purge_stale(now_ms, horizon);
            let node = &self.nodes[&id];
            let direct = self.direct_of(id, node);
            let here = node.position;
            let vis = visibility(&direct, &node.crnt, |t| self.position_at(id, t).unwrap_or(here));
            let cars = cars_sensed(&direct, &node.crnt);
            let cp = node.last_cp;
            self.collector.snapshot(second, id, vis, cars, cp);
        }
    }
}

fn nearest_to_centroid(vehicles: &[VehicleState]) -> Option<VehicleId> {
    if vehicles.is_empty() {
        return None;
    }
    let n = vehicles.len() as f64;
    let c = Position::new(
        vehicles.iter().map(|v| v.position.x).sum::<f64>() / n,
        vehicles.iter().map(|v| v.position.y).sum::<f64>() / n,
    );
    vehicles
        .iter()
        .min_by(|a, b| {
            a.position
                .distance_to(&c)
                .total_cmp(&b.position.distance_to(&c))
                .then(a.id.cmp(&b.id))
        })
        .map(|v| v.id)
}

/// Runs one configuration to completion.
pub fn run(cfg: &RunConfig, opts: RunOptions) -> Result<RunOutput, EngineError> {
    Simulation::new(cfg.clone(), opts)?.finish()
}
