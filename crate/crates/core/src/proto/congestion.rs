use std::collections::BTreeMap;

use super::{ProtoError, VehicleId};

/// Beacons a neighbor sends per second at the nominal 100 ms interval.
pub const BEACONS_PER_NEIGHBOR: u32 = 10;

/// Neighbor tables are only built while the congestion probability is below this.
pub const CP_THRESHOLD_PCT: f64 = 50.0;

/// Beacons received from each neighbor over the last second.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CongestionSample {
    counts: BTreeMap<VehicleId, u32>,
}

impl CongestionSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (VehicleId, u32)>) -> Self {
        Self {
            counts: counts.into_iter().collect(),
        }
    }

    pub fn record(&mut self, peer: VehicleId) {
        *self.counts.entry(peer).or_insert(0) += 1;
    }

    /// Caps every count at `max`. Jittered transmissions can land eleven
    /// beacons inside a sliding one-second window.
    pub fn clamp_counts(&mut self, max: u32) {
        for c in self.counts.values_mut() {
            *c = (*c).min(max);
        }
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn counts(&self) -> &BTreeMap<VehicleId, u32> {
        &self.counts
    }
}

/// Congestion probability in percent: the share of expected beacons that
/// never arrived, `(1 - ΣB / (N × 10)) × 100`.
pub fn compute_congestion(sample: &CongestionSample) -> Result<f64, ProtoError> {
    compute_congestion_with(sample, BEACONS_PER_NEIGHBOR)
}

/// As [`compute_congestion`] with a configurable per-neighbor expectation.
pub fn compute_congestion_with(
    sample: &CongestionSample,
    expected_per_neighbor: u32,
) -> Result<f64, ProtoError> {
    if sample.n() == 0 {
        return Err(ProtoError::NoNeighbors);
    }
    if let Some((&peer, &count)) = sample
        .counts
        .iter()
        .find(|(_, &c)| c > expected_per_neighbor)
    {
        return Err(ProtoError::CountOutOfRange {
            peer,
            count,
            max: expected_per_neighbor,
        });
    }
    let expected = sample.n() as u64 * u64::from(expected_per_neighbor);
    let missing = expected - sample.total();
    // integer numerator keeps exact percentages exact (e.g. 18/50 -> 36.0)
    Ok((missing * 100) as f64 / expected as f64)
}

pub fn should_build_nt(cp: f64) -> bool {
    gate_open(cp, CP_THRESHOLD_PCT)
}

/// At exactly the threshold the gate is closed.
pub fn gate_open(cp: f64, threshold_pct: f64) -> bool {
    cp < threshold_pct
}
