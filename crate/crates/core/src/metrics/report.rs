use std::collections::BTreeMap;
use std::path::Path;

use super::{CarsSensed, MetricsError, Visibility};
use crate::proto::VehicleId;
use crate::radio::Micros;

/// Column order of every CSV the report writes.
pub const CSV_COLUMNS: [&str; 13] = [
    "kind",
    "second",
    "vehicle",
    "direct_m",
    "crnt_m",
    "direct_count",
    "crnt_count",
    "cp_pct",
    "tx_frames",
    "pnt_frames",
    "rx_frames",
    "collisions",
    "mean_delay_us",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub scenario: String,
    pub mode: String,
    pub seed: u64,
    pub duration_s: u32,
    pub tracked: Option<VehicleId>,
    /// Effective configuration as flattened `key=value` pairs.
    pub config: Vec<(String, String)>,
}

/// One vehicle during second `second` (the interval `(second - 1, second]`).
#[derive(Debug, Clone, PartialEq)]
pub struct DetailRow {
    pub second: u32,
    pub vehicle: VehicleId,
    pub direct_m: f64,
    pub crnt_m: f64,
    pub direct_count: usize,
    pub crnt_count: usize,
    /// CP measured at this vehicle's last NT tick, if it had neighbors.
    pub cp_pct: Option<f64>,
    pub tx_frames: u64,
    pub pnt_frames: u64,
    pub rx_frames: u64,
    /// Frames addressed to this receiver lost to interference.
    pub collisions: u64,
    /// Over this vehicle's own frames delivered during the second.
    pub mean_delay_us: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub direct_m: f64,
    pub crnt_m: f64,
    pub direct_count: f64,
    pub crnt_count: f64,
    pub cp_pct: Option<f64>,
}

/// Mean, max and min over the vehicles alive at the end of a second.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub second: u32,
    pub vehicles: usize,
    pub mean: Stats,
    pub max: Stats,
    pub min: Stats,
}

/// Network-wide channel figures for one second.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkRow {
    pub second: u32,
    pub tx_frames: u64,
    pub pnt_frames: u64,
    pub rx_frames: u64,
    pub collisions: u64,
    pub delivered_frames: u64,
    pub delay_sum_us: u64,
}

impl NetworkRow {
    pub fn mean_delay_us(&self) -> Option<f64> {
        (self.delivered_frames > 0).then(|| self.delay_sum_us as f64 / self.delivered_frames as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub meta: RunMeta,
    pub detail: Vec<DetailRow>,
    pub summary: Vec<SummaryRow>,
    pub network: Vec<NetworkRow>,
    /// Frames put on the air per vehicle over the whole run.
    pub tx_counts: BTreeMap<VehicleId, u64>,
}

impl MetricsReport {
    pub fn total_collisions(&self) -> u64 {
        self.network.iter().map(|n| n.collisions).sum()
    }

    /// Delivered-frame delay averaged over the run.
    pub fn mean_delay_us(&self) -> Option<f64> {
        let (sum, n) = self
            .network
            .iter()
            .fold((0u64, 0u64), |(s, n), r| (s + r.delay_sum_us, n + r.delivered_frames));
        (n > 0).then(|| sum as f64 / n as f64)
    }

    pub fn tracked_rows(&self) -> impl Iterator<Item = &DetailRow> {
        let t = self.meta.tracked;
        self.detail.iter().filter(move |r| Some(r.vehicle) == t)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    tx: u64,
    pnt: u64,
    rx: u64,
    collisions: u64,
    delay_sum: u64,
    delivered: u64,
}

/// Accumulates events during a run and assembles the report.
#[derive(Debug, Clone)]
pub struct Collector {
    duration_s: u32,
    per_vehicle: BTreeMap<(u32, VehicleId), Counters>,
    network: Vec<NetworkRow>,
    snapshots: Vec<DetailRow>,
    tx_counts: BTreeMap<VehicleId, u64>,
}

impl Collector {
    pub fn new(duration_s: u32) -> Self {
        Self {
            duration_s,
            per_vehicle: BTreeMap::new(),
            network: (1..=duration_s)
                .map(|second| NetworkRow {
                    second,
                    ..Default::default()
                })
                .collect(),
            snapshots: Vec::new(),
            tx_counts: BTreeMap::new(),
        }
    }

    /// 1-based second holding `t_us`; frames finishing after the end of the
    /// run count toward the last second.
    fn second_of(&self, t_us: Micros) -> u32 {
        ((t_us / 1_000_000) as u32 + 1).clamp(1, self.duration_s.max(1))
    }

    fn bump(&mut self, t_us: Micros, vehicle: VehicleId, f: impl Fn(&mut Counters)) {
        let s = self.second_of(t_us);
        f(self.per_vehicle.entry((s, vehicle)).or_default());
    }

    fn net(&mut self, t_us: Micros) -> Option<&mut NetworkRow> {
        let s = self.second_of(t_us);
        self.network.get_mut(s as usize - 1)
    }

    pub fn record_tx(&mut self, t_us: Micros, sender: VehicleId, has_pnt: bool) {
        *self.tx_counts.entry(sender).or_default() += 1;
        self.bump(t_us, sender, |c| {
            c.tx += 1;
            c.pnt += u64::from(has_pnt);
        });
        if let Some(n) = self.net(t_us) {
            n.tx_frames += 1;
            n.pnt_frames += u64::from(has_pnt);
        }
    }

    /// One per-receiver outcome. A collision is a frame strong enough alone
    /// but sunk by overlapping traffic.
    pub fn record_reception(&mut self, t_us: Micros, receiver: VehicleId, delivered: bool, collided: bool) {
        self.bump(t_us, receiver, |c| {
            c.rx += u64::from(delivered);
            c.collisions += u64::from(collided);
        });
        if let Some(n) = self.net(t_us) {
            n.rx_frames += u64::from(delivered);
            n.collisions += u64::from(collided);
        }
    }

    /// A frame that reached at least one receiver, `delay_us` after generation.
    pub fn record_delivery(&mut self, t_us: Micros, sender: VehicleId, delay_us: Micros) {
        self.bump(t_us, sender, |c| {
            c.delay_sum += delay_us;
            c.delivered += 1;
        });
        if let Some(n) = self.net(t_us) {
            n.delivered_frames += 1;
            n.delay_sum_us += delay_us;
        }
    }

    pub fn snapshot(
        &mut self,
        second: u32,
        vehicle: VehicleId,
        vis: Visibility,
        cars: CarsSensed,
        cp_pct: Option<f64>,
    ) {
        self.snapshots.push(DetailRow {
            second,
            vehicle,
            direct_m: vis.direct_m,
            crnt_m: vis.crnt_m,
            direct_count: cars.direct,
            crnt_count: cars.crnt,
            cp_pct,
            tx_frames: 0,
            pnt_frames: 0,
            rx_frames: 0,
            collisions: 0,
            mean_delay_us: None,
        });
    }

    pub fn finish(self, meta: RunMeta) -> MetricsReport {
        let mut detail = self.snapshots;
        for row in &mut detail {
            let c = self
                .per_vehicle
                .get(&(row.second, row.vehicle))
                .copied()
                .unwrap_or_default();
            row.tx_frames = c.tx;
            row.pnt_frames = c.pnt;
            row.rx_frames = c.rx;
            row.collisions = c.collisions;
            row.mean_delay_us = (c.delivered > 0).then(|| c.delay_sum as f64 / c.delivered as f64);
        }
        detail.sort_by_key(|r| (r.second, r.vehicle));
        let summary = (1..=self.duration_s)
            .map(|s| summarize(s, detail.iter().filter(|r| r.second == s)))
            .collect();
        MetricsReport {
            meta,
            detail,
            summary,
            network: self.network,
            tx_counts: self.tx_counts,
        }
    }
}

fn summarize<'a>(second: u32, rows: impl Iterator<Item = &'a DetailRow>) -> SummaryRow {
    let rows: Vec<&DetailRow> = rows.collect();
    let col = |f: &dyn Fn(&DetailRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let cols = [
        col(&|r| r.direct_m),
        col(&|r| r.crnt_m),
        col(&|r| r.direct_count as f64),
        col(&|r| r.crnt_count as f64),
    ];
    let cps: Vec<f64> = rows.iter().filter_map(|r| r.cp_pct).collect();
    let reduce = |xs: &[f64], how: fn(&[f64]) -> f64| if xs.is_empty() { 0.0 } else { how(xs) };
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    let stats = |how: fn(&[f64]) -> f64| Stats {
        direct_m: reduce(&cols[0], how),
        crnt_m: reduce(&cols[1], how),
        direct_count: reduce(&cols[2], how),
        crnt_count: reduce(&cols[3], how),
        cp_pct: (!cps.is_empty()).then(|| how(&cps)),
    };
    SummaryRow {
        second,
        vehicles: rows.len(),
        mean: stats(mean),
        max: stats(max),
        min: stats(min),
    }
}

fn num(v: f64) -> String {
    format!("{v:.3}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub(super) fn metadata_lines(meta: &RunMeta, out: &mut Vec<u8>) {
    let mut line = |k: &str, v: &str| out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
    line("scenario", &meta.scenario);
    line("mode", &meta.mode);
    line("seed", &meta.seed.to_string());
    line("duration_s", &meta.duration_s.to_string());
    if let Some(t) = meta.tracked {
        line("tracked_vehicle", &t.0.to_string());
    }
    for (k, v) in &meta.config {
        line(&format!("config.{k}"), v);
    }
}

pub(super) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), MetricsError> {
    std::fs::write(path, bytes).map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn detail_record(kind: &str, r: &DetailRow) -> Vec<String> {
    vec![
        kind.into(),
        r.second.to_string(),
        r.vehicle.0.to_string(),
        num(r.direct_m),
        num(r.crnt_m),
        r.direct_count.to_string(),
        r.crnt_count.to_string(),
        opt(r.cp_pct),
        r.tx_frames.to_string(),
        r.pnt_frames.to_string(),
        r.rx_frames.to_string(),
        r.collisions.to_string(),
        opt(r.mean_delay_us),
    ]
}

fn stats_record(kind: &str, second: u32, s: &Stats) -> Vec<String> {
    let mut rec = vec![
        kind.into(),
        second.to_string(),
        String::new(),
        num(s.direct_m),
        num(s.crnt_m),
        num(s.direct_count),
        num(s.crnt_count),
        opt(s.cp_pct),
    ];
    rec.resize(CSV_COLUMNS.len(), String::new());
    rec
}

fn network_record(n: &NetworkRow) -> Vec<String> {
    let mut rec = vec!["network".to_string(), n.second.to_string()];
    rec.resize(8, String::new());
    rec.extend([
        n.tx_frames.to_string(),
        n.pnt_frames.to_string(),
        n.rx_frames.to_string(),
        n.collisions.to_string(),
        opt(n.mean_delay_us()),
    ]);
    rec
}

/// Renders the report: `# key=value` metadata lines, the header row, one
/// `detail` row per (second, vehicle), then per second the `mean`, `max`,
/// `min`, `tracked` and `network` rows.
pub fn render_csv(report: &MetricsReport) -> Vec<u8> {
    let mut out = Vec::new();
    metadata_lines(&report.meta, &mut out);
    let mut w = csv::Writer::from_writer(out);
    let rows = std::iter::once(CSV_COLUMNS.iter().map(|s| s.to_string()).collect())
        .chain(report.detail.iter().map(|r| detail_record("detail", r)))
        .chain(report.summary.iter().flat_map(|s| {
            let tracked = report
                .detail
                .iter()
                .filter(|r| r.second == s.second && Some(r.vehicle) == report.meta.tracked)
                .map(|r| detail_record("tracked", r));
            [
                stats_record("mean", s.second, &s.mean),
                stats_record("max", s.second, &s.max),
                stats_record("min", s.second, &s.min),
            ]
            .into_iter()
            .chain(tracked)
            .chain(report.network.get(s.second as usize - 1).map(network_record))
        }));
    for rec in rows {
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn emit_csv(report: &MetricsReport, path: &Path) -> Result<(), MetricsError> {
    write_file(path, &render_csv(report))
}
