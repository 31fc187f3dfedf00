//! Big-endian wire format for beacons and their piggybacked tables.
//!
//! ```text
//! header (31 bytes)
//!   0  magic      u8   0xCB
//!   1  version    u8   1
//!   2  flags      u8   bit 0 = PNT present, other bits zero
//!   3  length     u16  total frame length in bytes
//!   5  sender     u32
//!   9  ts         u64  ms
//!  17  interval   u16  ms, nonzero
//!  19  x, y       i32  cm
//!  27  speed      u16  cm/s
//!  29  heading    u16  centidegrees, < 36000
//! PNT section (19 bytes + 10 per row), present iff flag bit 0
//!  31  ts         u64  ms
//!  39  lt         u64  ms, > ts
//!  47  sn         u16
//!  49  count      u8
//!  50  rows       id u32, dx i16 dm, dy i16 dm, speed u8 (0.25 m/s), heading u8 (1/256 turn)
//! ```
//!
//! Row positions are offsets from the header position as it appears on the
//! wire, so a row costs 10 bytes and a 512-byte frame carries 46 of them.
//! Decoded rows take the table's `ts` as their `last_update`.

use super::{Beacon, Heading, Millis, NeighborEntry, Pnt, Position, VehicleId};

pub const MAGIC: u8 = 0xCB;
pub const VERSION: u8 = 1;
pub const FLAG_PNT: u8 = 0x01;
pub const HEADER_LEN: usize = 31;
pub const PNT_HEADER_LEN: usize = 19;
pub const ENTRY_LEN: usize = 10;
pub const MAX_FRAME_LEN: usize = 512;

const ROW_HEADING_UNIT_DEG: f64 = 360.0 / 256.0;
const ROW_SPEED_UNIT_MPS: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error("{field} = {value} does not fit its wire field")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("interval must be nonzero")]
    ZeroInterval,
    #[error("table lifetime {lt} is not after its timestamp {ts}")]
    LifetimeNotAfterTimestamp { ts: Millis, lt: Millis },
    #[error("{0} table rows exceed the 255-row limit")]
    TooManyRows(usize),
    #[error("encoded frame of {0} bytes exceeds the {MAX_FRAME_LEN}-byte cap")]
    FrameTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MalformedBeacon {
    #[error("truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("reserved flag bits set: {0:#04x}")]
    ReservedFlags(u8),
    #[error("length field says {declared} bytes, buffer has {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("{count} rows inconsistent with {len}-byte frame")]
    EntryCountMismatch { count: usize, len: usize },
    #[error("field {0} out of range")]
    InvalidField(&'static str),
}

/// Encoded size of a beacon carrying `rows` table rows (or none).
pub fn encoded_len(rows: Option<usize>) -> usize {
    HEADER_LEN + rows.map_or(0, |n| PNT_HEADER_LEN + n * ENTRY_LEN)
}

/// Most table rows that fit a PNT section of `byte_budget` bytes.
pub fn pnt_entry_capacity(byte_budget: usize) -> usize {
    byte_budget
        .checked_sub(PNT_HEADER_LEN)
        .map_or(0, |b| (b / ENTRY_LEN).min(u8::MAX as usize))
}

/// Reads the PNT flag without decoding the rest of the frame.
pub fn peek_has_pnt(bytes: &[u8]) -> Option<bool> {
    match bytes {
        [MAGIC, VERSION, flags, ..] => Some(flags & FLAG_PNT != 0),
        _ => None,
    }
}

fn quantize<T: TryFrom<i64>>(field: &'static str, value: f64, scale: f64) -> Result<T, EncodeError> {
    let scaled = (value * scale).round();
    if !scaled.is_finite() || scaled.abs() > i64::MAX as f64 {
        return Err(EncodeError::OutOfRange { field, value });
    }
    T::try_from(scaled as i64).map_err(|_| EncodeError::OutOfRange { field, value })
}

fn centidegrees(h: Heading) -> u16 {
    ((h.degrees() * 100.0).round() as u32 % 36_000) as u16
}

fn row_heading(h: Heading) -> u8 {
    ((h.degrees() / ROW_HEADING_UNIT_DEG).round() as u32 % 256) as u8
}

pub fn encode_beacon(b: &Beacon) -> Result<Vec<u8>, EncodeError> {
    if b.interval_ms == 0 {
        return Err(EncodeError::ZeroInterval);
    }
    let x_cm: i32 = quantize("x", b.position.x, 100.0)?;
    let y_cm: i32 = quantize("y", b.position.y, 100.0)?;
    let speed_cms: u16 = quantize("speed", b.speed, 100.0)?;

    let len = encoded_len(b.pnt.as_ref().map(|p| p.entries.len()));
    if len > MAX_FRAME_LEN {
        return Err(EncodeError::FrameTooLarge(len));
    }
    let mut out = Vec::with_capacity(len);
    out.push(MAGIC);
    out.push(VERSION);
    out.push(if b.pnt.is_some() { FLAG_PNT } else { 0 });
    out.extend_from_slice(&(len as u16).to_be_bytes());
    out.extend_from_slice(&b.sender.0.to_be_bytes());
    out.extend_from_slice(&b.ts.to_be_bytes());
    out.extend_from_slice(&b.interval_ms.to_be_bytes());
    out.extend_from_slice(&x_cm.to_be_bytes());
    out.extend_from_slice(&y_cm.to_be_bytes());
    out.extend_from_slice(&speed_cms.to_be_bytes());
    out.extend_from_slice(&centidegrees(b.heading).to_be_bytes());

    if let Some(pnt) = &b.pnt {
        if pnt.lt <= pnt.ts {
            return Err(EncodeError::LifetimeNotAfterTimestamp {
                ts: pnt.ts,
                lt: pnt.lt,
            });
        }
        let count =
            u8::try_from(pnt.entries.len()).map_err(|_| EncodeError::TooManyRows(pnt.entries.len()))?;
        // offsets are taken from the position exactly as the receiver will decode it
        let origin = Position::new(f64::from(x_cm) / 100.0, f64::from(y_cm) / 100.0);
        out.extend_from_slice(&pnt.ts.to_be_bytes());
        out.extend_from_slice(&pnt.lt.to_be_bytes());
        out.extend_from_slice(&pnt.sn.to_be_bytes());
        out.push(count);
        for e in &pnt.entries {
            let dx: i16 = quantize("row dx", e.position.x - origin.x, 10.0)?;
            let dy: i16 = quantize("row dy", e.position.y - origin.y, 10.0)?;
            let speed: u8 = quantize("row speed", e.speed, 1.0 / ROW_SPEED_UNIT_MPS)?;
            out.extend_from_slice(&e.id.0.to_be_bytes());
            out.extend_from_slice(&dx.to_be_bytes());
            out.extend_from_slice(&dy.to_be_bytes());
            out.push(speed);
            out.push(row_heading(e.heading));
        }
    }
    debug_assert_eq!(out.len(), len);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        // callers check lengths up front
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..self.pos + N]);
        self.pos += N;
        a
    }
    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_be_bytes(self.take())
    }
    fn i16(&mut self) -> i16 {
        i16::from_be_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_be_bytes(self.take())
    }
    fn i32(&mut self) -> i32 {
        i32::from_be_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_be_bytes(self.take())
    }
}

pub fn decode_beacon(bytes: &[u8]) -> Result<Beacon, MalformedBeacon> {
    if bytes.len() < HEADER_LEN {
        return Err(MalformedBeacon::Truncated {
            needed: HEADER_LEN,
            have: bytes.len(),
        });
    }
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.u8();
    if magic != MAGIC {
        return Err(MalformedBeacon::BadMagic(magic));
    }
    let version = r.u8();
    if version != VERSION {
        return Err(MalformedBeacon::UnsupportedVersion(version));
    }
    let flags = r.u8();
    if flags & !FLAG_PNT != 0 {
        return Err(MalformedBeacon::ReservedFlags(flags));
    }
    let declared = usize::from(r.u16());
    if declared != bytes.len() {
        return Err(MalformedBeacon::LengthMismatch {
            declared,
            actual: bytes.len(),
        });
    }
    let sender = VehicleId(r.u32());
    let ts = r.u64();
    let interval_ms = r.u16();
    if interval_ms == 0 {
        return Err(MalformedBeacon::InvalidField("interval"));
    }
    let position = Position::new(f64::from(r.i32()) / 100.0, f64::from(r.i32()) / 100.0);
    let speed = f64::from(r.u16()) / 100.0;
    let heading_cd = r.u16();
    if heading_cd >= 36_000 {
        return Err(MalformedBeacon::InvalidField("heading"));
    }
    let heading = Heading::from_degrees(f64::from(heading_cd) / 100.0);

    let pnt = if flags & FLAG_PNT == 0 {
        if bytes.len() != HEADER_LEN {
            return Err(MalformedBeacon::LengthMismatch {
                declared: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        None
    } else {
        if bytes.len() < HEADER_LEN + PNT_HEADER_LEN {
            return Err(MalformedBeacon::Truncated {
                needed: HEADER_LEN + PNT_HEADER_LEN,
                have: bytes.len(),
            });
        }
        let pnt_ts = r.u64();
        let lt = r.u64();
        if lt <= pnt_ts {
            return Err(MalformedBeacon::InvalidField("lt"));
        }
        let sn = r.u16();
        let count = usize::from(r.u8());
        if encoded_len(Some(count)) != bytes.len() {
            return Err(MalformedBeacon::EntryCountMismatch {
                count,
                len: bytes.len(),
            });
        }
        let entries = (0..count)
            .map(|_| {
                let id = VehicleId(r.u32());
                let dx = f64::from(r.i16()) / 10.0;
                let dy = f64::from(r.i16()) / 10.0;
                let speed = f64::from(r.u8()) * ROW_SPEED_UNIT_MPS;
                let heading = Heading::from_degrees(f64::from(r.u8()) * ROW_HEADING_UNIT_DEG);
                NeighborEntry {
                    id,
                    position: Position::new(position.x + dx, position.y + dy),
                    speed,
                    heading,
                    last_update: pnt_ts,
                }
            })
            .collect();
        Some(Pnt {
            ts: pnt_ts,
            lt,
            sn,
            entries,
        })
    };
    Ok(Beacon {
        sender,
        ts,
        interval_ms,
        position,
        speed,
        heading,
        pnt,
    })
}
