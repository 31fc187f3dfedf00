use std::collections::BTreeMap;

use super::codec::pnt_entry_capacity;
use super::{Beacon, Millis, NeighborEntry, NeighborTable, Pnt, Position, ProtoError, VehicleId};

pub const DEFAULT_PNT_LIFETIME_MS: Millis = 1000;

/// Builds the owner's neighbor table from the beacons heard during the last
/// period: one row per sender from its freshest beacon, nearest first, equal
/// distances ordered by id.
pub fn build_nt(
    owner: VehicleId,
    owner_pos: Position,
    recent_beacons: &[Beacon],
    now: Millis,
) -> NeighborTable {
    let mut freshest: BTreeMap<VehicleId, NeighborEntry> = BTreeMap::new();
    for b in recent_beacons.iter().filter(|b| b.sender != owner) {
        let entry = b.as_entry();
        freshest
            .entry(b.sender)
            .and_modify(|e| {
                if entry.last_update >= e.last_update {
                    *e = entry;
                }
            })
            .or_insert(entry);
    }
    let mut entries: Vec<NeighborEntry> = freshest.into_values().collect();
    sort_nearest_first(&mut entries, owner_pos);
    NeighborTable {
        owner,
        entries,
        built_at: now,
    }
}

pub(crate) fn sort_nearest_first(entries: &mut [NeighborEntry], from: Position) {
    entries.sort_by(|a, b| {
        from.distance_to(&a.position)
            .total_cmp(&from.distance_to(&b.position))
            .then(a.id.cmp(&b.id))
    });
}

/// Stamps a table for piggybacking. Keeps the longest nearest-first prefix
/// that fits `byte_budget` (the frame cap minus the base beacon); every kept
/// row takes the table's build time as its freshness since the wire carries
/// no per-row age.
pub fn make_pnt(
    nt: &NeighborTable,
    now: Millis,
    next_sn: u16,
    lifetime_ms: Millis,
    byte_budget: usize,
) -> Result<Pnt, ProtoError> {
    if nt.is_empty() {
        return Err(ProtoError::EmptyTable);
    }
    if lifetime_ms == 0 {
        return Err(ProtoError::ZeroLifetime);
    }
    let capacity = pnt_entry_capacity(byte_budget);
    if capacity == 0 {
        return Err(ProtoError::BudgetTooSmall {
            budget: byte_budget,
        });
    }
    let entries = nt
        .entries
        .iter()
        .take(capacity)
        .map(|e| NeighborEntry {
            last_update: now,
            ..*e
        })
        .collect();
    Ok(Pnt {
        ts: now,
        lt: now + lifetime_ms,
        sn: next_sn,
        entries,
    })
}
