use rand::Rng;

use super::{MacParams, Micros};

/// Start time for a broadcast frame. A medium that has been idle for at
/// least DIFS is taken at once; otherwise the station waits out the busy
/// period plus DIFS plus a backoff drawn uniformly from `0..=cw_min` slots.
/// Broadcast has no ACK, so the window never grows.
pub fn schedule_tx<R: Rng + ?Sized>(
    now_us: Micros,
    medium_busy_until: Micros,
    rng: &mut R,
    mac: &MacParams,
) -> Micros {
    if medium_busy_until + mac.difs_us <= now_us {
        return now_us;
    }
    let slots = rng.random_range(0..=u64::from(mac.cw_min));
    medium_busy_until + mac.difs_us + slots * mac.slot_us
}
