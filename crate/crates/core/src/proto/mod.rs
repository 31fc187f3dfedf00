//! Beacon piggybacking protocol: neighbor tables, their wire form, and the
//! send/receive state machines. Everything here is pure logic over explicit
//! state; the engine supplies the clock and the channel.

mod codec;
mod congestion;
mod crnt;
mod sequence;
mod table;

use std::fmt;

pub use codec::{
    decode_beacon, encode_beacon, encoded_len, peek_has_pnt, pnt_entry_capacity, EncodeError,
    MalformedBeacon, ENTRY_LEN, FLAG_PNT, HEADER_LEN, MAGIC, MAX_FRAME_LEN, PNT_HEADER_LEN,
    VERSION,
};
pub use congestion::{
    compute_congestion, compute_congestion_with, gate_open, should_build_nt, CongestionSample,
    BEACONS_PER_NEIGHBOR, CP_THRESHOLD_PCT,
};
pub use crnt::{accept_pnt, should_inspect, Crnt, CrntRecord, PntVerdict, INSPECT_HOLDOFF_MS};
pub use sequence::{check_sequence, serial_newer, sn_is_newer, SeqCheck, SequenceList, SequenceRow};
pub use table::{build_nt, make_pnt, DEFAULT_PNT_LIFETIME_MS};

/// Simulation time in milliseconds.
pub type Millis = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

/// Planar scenario coordinates in meters (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Compass heading in degrees, clockwise from north, normalized to `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Heading(f64);

impl Heading {
    pub fn from_degrees(degrees: f64) -> Self {
        let d = degrees.rem_euclid(360.0);
        // rem_euclid can return exactly 360.0 for tiny negative inputs
        Self(if d >= 360.0 { 0.0 } else { d })
    }

    /// Heading of travel along the vector `(dx, dy)`.
    pub fn from_vector(dx: f64, dy: f64) -> Self {
        Self::from_degrees(dx.atan2(dy).to_degrees())
    }

    pub fn degrees(&self) -> f64 {
        self.0
    }

    pub fn compass8(&self) -> Compass8 {
        let sector = ((self.0 + 22.5) / 45.0).floor() as usize % 8;
        Compass8::ALL[sector]
    }
}

/// Eight-point compass label; each covers a 45° sector centered on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compass8 {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Compass8 {
    pub const ALL: [Compass8; 8] = [
        Compass8::N,
        Compass8::NE,
        Compass8::E,
        Compass8::SE,
        Compass8::S,
        Compass8::SW,
        Compass8::W,
        Compass8::NW,
    ];
}

impl fmt::Display for Compass8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One vehicle's last-known state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub id: VehicleId,
    pub position: Position,
    /// Meters per second.
    pub speed: f64,
    pub heading: Heading,
    pub last_update: Millis,
}

/// Direct neighbors heard in the last NT period, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    pub owner: VehicleId,
    pub entries: Vec<NeighborEntry>,
    pub built_at: Millis,
}

impl NeighborTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn contains(&self, id: VehicleId) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }
}

/// A neighbor table in its piggybacked form.
#[derive(Debug, Clone, PartialEq)]
pub struct Pnt {
    /// Build time.
    pub ts: Millis,
    /// Expiry deadline; receivers reject the table once `now > lt`.
    pub lt: Millis,
    pub sn: u16,
    pub entries: Vec<NeighborEntry>,
}

/// The periodic safety message.
#[derive(Debug, Clone, PartialEq)]
pub struct Beacon {
    pub sender: VehicleId,
    pub ts: Millis,
    pub interval_ms: u16,
    pub position: Position,
    pub speed: f64,
    pub heading: Heading,
    pub pnt: Option<Pnt>,
}

impl Beacon {
    /// The sender's own state as a table row.
    pub fn as_entry(&self) -> NeighborEntry {
        NeighborEntry {
            id: self.sender,
            position: self.position,
            speed: self.speed,
            heading: self.heading,
            last_update: self.ts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtoError {
    #[error("no neighbors in the congestion sample")]
    NoNeighbors,
    #[error("beacon count {count} for {peer} outside [0, {max}]")]
    CountOutOfRange { peer: VehicleId, count: u32, max: u32 },
    #[error("neighbor table is empty")]
    EmptyTable,
    #[error("byte budget {budget} cannot hold a single table entry")]
    BudgetTooSmall { budget: usize },
    #[error("lifetime must be positive")]
    ZeroLifetime,
}
