//! Packet transport between vehicles: log-distance path loss, Nakagami-m
//! block fading, SINR capture, and 802.11p broadcast channel access.

mod channel;
mod mac;
mod reception;

use serde::{Deserialize, Serialize};

pub use channel::{
    airtime_us, calibrate_tx_power, db_to_linear, dbm_to_mw, mean_rx_power_dbm, mw_to_dbm,
    sample_fading_gain, FadingSource, KeyedFading,
};
pub(crate) use channel::stream_seed;
pub use mac::schedule_tx;
pub use reception::{
    resolve_frame, resolve_receptions, LosOracle, Reception, ReceptionOutcome, RxNode,
    Transmission,
};

/// Simulation time in microseconds.
pub type Micros = u64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ParamError {
    ParamError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Nakagami shape.
    pub m: f64,
    /// `None` calibrates the power so the mean-fading edge sits at `comm_range_m`.
    pub tx_power_dbm: Option<f64>,
    pub pathloss_exponent: f64,
    /// Loss at 1 m.
    pub reference_loss_db: f64,
    pub noise_floor_dbm: f64,
    pub sinr_threshold_db: f64,
    pub data_rate_bps: u64,
    pub plcp_header_us: Micros,
    pub symbol_us: Micros,
    /// Nominal DSRC range; nothing is received or sensed beyond it.
    pub comm_range_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            m: 3.0,
            tx_power_dbm: None,
            pathloss_exponent: 2.2,
            reference_loss_db: 47.0,
            noise_floor_dbm: -99.0,
            sinr_threshold_db: 10.0,
            data_rate_bps: 6_000_000,
            plcp_header_us: 8,
            symbol_us: 8,
            comm_range_m: 300.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.m >= 0.5) {
            return Err(invalid("channel.m", format!("must be >= 0.5, got {}", self.m)));
        }
        if !(self.sinr_threshold_db > 0.0) {
            return Err(invalid("channel.sinr_threshold_db", "must be > 0"));
        }
        if self.data_rate_bps == 0 {
            return Err(invalid("channel.data_rate_bps", "must be > 0"));
        }
        if self.symbol_us == 0 {
            return Err(invalid("channel.symbol_us", "must be > 0"));
        }
        if !(self.comm_range_m > 0.0) {
            return Err(invalid("channel.comm_range_m", "must be > 0"));
        }
        if !(self.pathloss_exponent > 0.0) {
            return Err(invalid("channel.pathloss_exponent", "must be > 0"));
        }
        for (field, v) in [
            ("channel.reference_loss_db", self.reference_loss_db),
            ("channel.noise_floor_dbm", self.noise_floor_dbm),
        ] {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        if let Some(p) = self.tx_power_dbm {
            if !p.is_finite() {
                return Err(invalid("channel.tx_power_dbm", "must be finite"));
            }
        }
        Ok(())
    }

    /// Transmit power in effect: configured, or calibrated to the range.
    pub fn effective_tx_power_dbm(&self) -> f64 {
        self.tx_power_dbm
            .unwrap_or_else(|| calibrate_tx_power(self.comm_range_m, self))
    }
}

/// Broadcast channel access timing. CW bounds are slot counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacParams {
    pub cw_min: u32,
    /// Carried for completeness; broadcast never widens the window.
    pub cw_max: u32,
    pub slot_us: Micros,
    /// Unused by broadcast traffic (no ACKs).
    pub sifs_us: Micros,
    pub difs_us: Micros,
}

impl Default for MacParams {
    fn default() -> Self {
        Self {
            cw_min: 15,
            cw_max: 1023,
            slot_us: 16,
            sifs_us: 32,
            difs_us: 64,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.cw_min > self.cw_max {
            return Err(invalid("mac.cw_min", "must not exceed cw_max"));
        }
        for (field, v) in [
            ("mac.slot_us", self.slot_us),
            ("mac.sifs_us", self.sifs_us),
            ("mac.difs_us", self.difs_us),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be > 0"));
            }
        }
        Ok(())
    }
}
