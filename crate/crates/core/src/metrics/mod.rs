//! Per-second evaluation quantities: visibility, cars sensed, collisions and
//! delay, plus CSV output and baseline-vs-CRNT comparison.

mod compare;
mod report;

use std::collections::BTreeSet;

use crate::proto::{Crnt, Millis, NeighborTable, Position, VehicleId};

pub use compare::{compare_runs, emit_comparison_csv, render_comparison_csv, Comparison, ComparisonRow, Pair};
pub use report::{
    emit_csv, render_csv, Collector, DetailRow, MetricsReport, NetworkRow, RunMeta, Stats, SummaryRow,
    CSV_COLUMNS,
};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("incomparable runs: {0}")]
    IncomparableRuns(String),
    #[error("transmission counts differ for {vehicle}: baseline {baseline}, crnt {crnt}")]
    TransmissionParity {
        vehicle: VehicleId,
        baseline: u64,
        crnt: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Visibility {
    pub direct_m: f64,
    pub crnt_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CarsSensed {
    pub direct: usize,
    pub crnt: usize,
}

/// Farthest known vehicle, measured from where the observer stood when each
/// row was current (`observer_at(last_update)`). The CRNT figure covers the
/// union, so it never falls below the direct one.
pub fn visibility(
    direct: &NeighborTable,
    crnt: &Crnt,
    observer_at: impl Fn(Millis) -> Position,
) -> Visibility {
    let far = |it: &mut dyn Iterator<Item = (Position, Millis)>| {
        it.map(|(p, t)| observer_at(t).distance_to(&p)).fold(0.0, f64::max)
    };
    let direct_m = far(&mut direct.entries.iter().map(|e| (e.position, e.last_update)));
    let relayed = far(&mut crnt.entries().map(|e| (e.position, e.last_update)));
    Visibility {
        direct_m,
        crnt_m: direct_m.max(relayed),
    }
}

pub fn cars_sensed(direct: &NeighborTable, crnt: &Crnt) -> CarsSensed {
    let union: BTreeSet<VehicleId> = direct
        .entries
        .iter()
        .map(|e| e.id)
        .chain(crnt.entries().map(|e| e.id))
        .filter(|&id| id != crnt.owner)
        .collect();
    CarsSensed {
        direct: direct.len(),
        crnt: union.len(),
    }
}
