use super::{Millis, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqCheck {
    Fresh,
    Stale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceRow {
    pub peer: VehicleId,
    pub sn: u16,
    pub received_at: Millis,
}

/// Last accepted table sequence number per peer, most recently confirmed first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SequenceList {
    rows: Vec<SequenceRow>,
}

impl SequenceList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[SequenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, peer: VehicleId) -> Option<&SequenceRow> {
        self.rows.iter().find(|r| r.peer == peer)
    }

    /// Stores `sn` as the latest from `peer` and moves its row to the top.
    pub fn record(&mut self, peer: VehicleId, sn: u16, now: Millis) {
        self.rows.retain(|r| r.peer != peer);
        self.rows.insert(
            0,
            SequenceRow {
                peer,
                sn,
                received_at: now,
            },
        );
    }

    /// Moves an existing row to the top without changing it.
    pub fn touch(&mut self, peer: VehicleId) {
        if let Some(i) = self.rows.iter().position(|r| r.peer == peer) {
            let row = self.rows.remove(i);
            self.rows.insert(0, row);
        }
    }
}

/// Serial-number comparison on a `bits`-wide counter: `incoming` is newer
/// than `stored` iff it lies strictly within the half window ahead of it.
pub fn serial_newer(incoming: u32, stored: u32, bits: u32) -> bool {
    let modulus = 1u64 << bits;
    let diff = (u64::from(incoming) + modulus - u64::from(stored)) % modulus;
    diff != 0 && diff < modulus / 2
}

pub fn sn_is_newer(incoming: u16, stored: u16) -> bool {
    serial_newer(u32::from(incoming), u32::from(stored), 16)
}

/// Equal or older sequence numbers are duplicates.
pub fn check_sequence(sl: &SequenceList, peer: VehicleId, sn: u16) -> SeqCheck {
    match sl.get(peer) {
        Some(row) if !sn_is_newer(sn, row.sn) => SeqCheck::Stale,
        _ => SeqCheck::Fresh,
    }
}
