use super::channel::{db_to_linear, dbm_to_mw, mean_rx_power_dbm, mw_to_dbm, FadingSource};
use super::{ChannelParams, Micros};
use crate::proto::{Position, VehicleId};

/// One frame on the air.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    /// Unique per run; keys the fading draws.
    pub id: u64,
    pub sender: VehicleId,
    pub payload: Vec<u8>,
    pub start_us: Micros,
    pub end_us: Micros,
    pub sender_pos: Position,
}

impl Transmission {
    pub fn overlaps(&self, other: &Transmission) -> bool {
        self.start_us < other.end_us && other.start_us < self.end_us
    }

    pub fn airtime_us(&self) -> Micros {
        self.end_us - self.start_us
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReceptionOutcome {
    Delivered { rx_power_dbm: f64, sinr_db: f64 },
    /// Too weak even without interference.
    LostFading { rx_power_dbm: f64, sinr_db: f64 },
    /// Strong enough alone, sunk by overlapping frames.
    LostCollision { rx_power_dbm: f64, sinr_db: f64 },
    LostBlocked,
}

impl ReceptionOutcome {
    pub fn is_delivered(&self) -> bool {
        matches!(self, ReceptionOutcome::Delivered { .. })
    }

    pub fn is_collision(&self) -> bool {
        matches!(self, ReceptionOutcome::LostCollision { .. })
    }

    pub fn sinr_db(&self) -> Option<f64> {
        match *self {
            ReceptionOutcome::Delivered { sinr_db, .. }
            | ReceptionOutcome::LostFading { sinr_db, .. }
            | ReceptionOutcome::LostCollision { sinr_db, .. } => Some(sinr_db),
            ReceptionOutcome::LostBlocked => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ReceptionOutcome::Delivered { .. } => "delivered",
            ReceptionOutcome::LostFading { .. } => "lost_fading",
            ReceptionOutcome::LostCollision { .. } => "lost_collision",
            ReceptionOutcome::LostBlocked => "lost_blocked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reception {
    pub frame: u64,
    pub sender: VehicleId,
    pub receiver: VehicleId,
    pub outcome: ReceptionOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxNode {
    pub id: VehicleId,
    pub position: Position,
}

/// Line-of-sight test between two points.
pub trait LosOracle {
    fn clear(&self, a: Position, b: Position) -> bool;
}

impl<F: Fn(Position, Position) -> bool> LosOracle for F {
    fn clear(&self, a: Position, b: Position) -> bool {
        self(a, b)
    }
}

/// Outcomes of `target` at every receiver in range. `others` are the frames
/// overlapping it in time; any of them sent by a receiver makes that receiver
/// deaf to `target`. Each interferer contributes its full power.
pub fn resolve_frame(
    target: &Transmission,
    others: &[&Transmission],
    receivers: &[RxNode],
    los: &dyn LosOracle,
    params: &ChannelParams,
    fading: &mut dyn FadingSource,
) -> Vec<Reception> {
    let noise_mw = dbm_to_mw(params.noise_floor_dbm);
    let threshold = db_to_linear(params.sinr_threshold_db);
    let mut out = Vec::new();
    for rx in receivers {
        if rx.id == target.sender {
            continue;
        }
        let transmitting = others
            .iter()
            .any(|o| o.sender == rx.id && o.id != target.id && o.overlaps(target));
        if transmitting {
            continue;
        }
        if target.sender_pos.distance_to(&rx.position) > params.comm_range_m {
            continue;
        }
        let outcome = if !los.clear(target.sender_pos, rx.position) {
            ReceptionOutcome::LostBlocked
        } else {
            let signal_mw = dbm_to_mw(mean_rx_power_dbm(target.sender_pos, rx.position, params))
                * fading.gain(target.id, rx.id);
            let interference_mw: f64 = others
                .iter()
                .filter(|o| o.id != target.id && o.sender != target.sender && o.overlaps(target))
                .filter(|o| los.clear(o.sender_pos, rx.position))
                .map(|o| {
                    dbm_to_mw(mean_rx_power_dbm(o.sender_pos, rx.position, params))
                        * fading.gain(o.id, rx.id)
                })
                .sum();
            let sinr = signal_mw / (noise_mw + interference_mw);
            let rx_power_dbm = mw_to_dbm(signal_mw);
            let sinr_db = mw_to_dbm(sinr);
            if sinr >= threshold {
                ReceptionOutcome::Delivered { rx_power_dbm, sinr_db }
            } else if signal_mw / noise_mw >= threshold {
                ReceptionOutcome::LostCollision { rx_power_dbm, sinr_db }
            } else {
                ReceptionOutcome::LostFading { rx_power_dbm, sinr_db }
            }
        };
        out.push(Reception {
            frame: target.id,
            sender: target.sender,
            receiver: rx.id,
            outcome,
        });
    }
    out
}

/// Resolves every frame of a window against the others that overlap it.
pub fn resolve_receptions(
    transmissions: &[Transmission],
    receivers: &[RxNode],
    los: &dyn LosOracle,
    params: &ChannelParams,
    fading: &mut dyn FadingSource,
) -> Vec<Reception> {
    let mut out = Vec::new();
    for t in transmissions {
        let others: Vec<&Transmission> = transmissions
            .iter()
            .filter(|o| o.id != t.id && o.overlaps(t))
            .collect();
        out.extend(resolve_frame(t, &others, receivers, los, params, fading));
    }
    out
}
