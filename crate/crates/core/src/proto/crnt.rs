use std::collections::BTreeMap;

use super::sequence::{check_sequence, SeqCheck, SequenceList};
use super::{Beacon, Millis, NeighborEntry, VehicleId};

/// After inspecting a table from a peer, further beacons from that peer are
/// not inspected for this long.
pub const INSPECT_HOLDOFF_MS: Millis = 99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrntRecord {
    pub entry: NeighborEntry,
    /// Who told us: the subject itself for direct beacons, otherwise the
    /// peer whose table carried the row.
    pub reporter: VehicleId,
}

impl CrntRecord {
    fn supersedes(&self, other: &CrntRecord) -> bool {
        (self.entry.last_update, self.reporter) > (other.entry.last_update, other.reporter)
    }
}

/// Union of the owner's direct neighbors and every row of the tables it accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct Crnt {
    pub owner: VehicleId,
    entries: BTreeMap<VehicleId, CrntRecord>,
    pub last_refresh: Millis,
}

impl Crnt {
    pub fn new(owner: VehicleId) -> Self {
        Self {
            owner,
            entries: BTreeMap::new(),
            last_refresh: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: VehicleId) -> Option<&CrntRecord> {
        self.entries.get(&id)
    }

    pub fn contains(&self, id: VehicleId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn records(&self) -> impl Iterator<Item = &CrntRecord> {
        self.entries.values()
    }

    pub fn entries(&self) -> impl Iterator<Item = &NeighborEntry> {
        self.entries.values().map(|r| &r.entry)
    }

    /// Inserts or refreshes one row. Freshest `last_update` wins, ties go to
    /// the higher reporter id; rows about the owner are ignored. Returns
    /// whether the table changed.
    pub fn merge(&mut self, entry: NeighborEntry, reporter: VehicleId) -> bool {
        if entry.id == self.owner {
            return false;
        }
        let incoming = CrntRecord { entry, reporter };
        match self.entries.get_mut(&entry.id) {
            Some(existing) if !incoming.supersedes(existing) => false,
            Some(existing) => {
                *existing = incoming;
                true
            }
            None => {
                self.entries.insert(entry.id, incoming);
                true
            }
        }
    }

    /// Folds the sender's own state from a directly received beacon.
    pub fn observe_direct(&mut self, beacon: &Beacon) -> bool {
        self.merge(beacon.as_entry(), beacon.sender)
    }

    /// Drops rows older than `horizon_ms`.
    pub fn purge_stale(&mut self, now: Millis, horizon_ms: Millis) {
        self.entries
            .retain(|_, r| now.saturating_sub(r.entry.last_update) <= horizon_ms);
        self.last_refresh = now;
    }

    pub fn purged(mut self, now: Millis, horizon_ms: Millis) -> Self {
        self.purge_stale(now, horizon_ms);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PntVerdict {
    Merged,
    RejectedStaleSn,
    RejectedExpired,
    NoPnt,
}

/// Receive path for a decoded beacon's table: duplicate check against the
/// sequence list, then lifetime, then union into the CRNT.
pub fn accept_pnt(
    crnt: &mut Crnt,
    sl: &mut SequenceList,
    beacon: &Beacon,
    now: Millis,
) -> PntVerdict {
    let Some(pnt) = &beacon.pnt else {
        return PntVerdict::NoPnt;
    };
    if check_sequence(sl, beacon.sender, pnt.sn) == SeqCheck::Stale {
        sl.touch(beacon.sender);
        return PntVerdict::RejectedStaleSn;
    }
    if now > pnt.lt {
        return PntVerdict::RejectedExpired;
    }
    for entry in &pnt.entries {
        crnt.merge(*entry, beacon.sender);
    }
    sl.record(beacon.sender, pnt.sn, now);
    PntVerdict::Merged
}

/// Whether a beacon from `peer` should be tested for a table at all.
pub fn should_inspect(
    peer: VehicleId,
    now: Millis,
    last_pnt_inspect: &BTreeMap<VehicleId, Millis>,
) -> bool {
    last_pnt_inspect
        .get(&peer)
        .is_none_or(|&t| now.saturating_sub(t) >= INSPECT_HOLDOFF_MS)
}
