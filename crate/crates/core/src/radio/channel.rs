use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::{ChannelParams, Micros};
use crate::proto::{Position, VehicleId};

/// PLCP header plus payload, the payload rounded up to whole OFDM symbols.
pub fn airtime_us(payload_bytes: usize, params: &ChannelParams) -> Micros {
    let bits = payload_bytes as u128 * 8;
    let per_symbol = u128::from(params.data_rate_bps) * u128::from(params.symbol_us);
    let symbols = (bits * 1_000_000).div_ceil(per_symbol);
    params.plcp_header_us + symbols as Micros * params.symbol_us
}

/// Log-distance mean received power; distances under 1 m count as 1 m.
pub fn mean_rx_power_dbm(tx: Position, rx: Position, params: &ChannelParams) -> f64 {
    let d = tx.distance_to(&rx).max(1.0);
    params.effective_tx_power_dbm()
        - params.reference_loss_db
        - 10.0 * params.pathloss_exponent * d.log10()
}

/// Transmit power that puts the mean SINR at `range_m` exactly on the threshold.
pub fn calibrate_tx_power(range_m: f64, params: &ChannelParams) -> f64 {
    params.noise_floor_dbm
        + params.sinr_threshold_db
        + params.reference_loss_db
        + 10.0 * params.pathloss_exponent * range_m.max(1.0).log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Unit-mean power gain of a Nakagami-m envelope: Gamma(m, 1/m).
pub fn sample_fading_gain<R: Rng + ?Sized>(rng: &mut R, m: f64) -> f64 {
    Gamma::new(m, 1.0 / m)
        .expect("shape validated >= 0.5")
        .sample(rng)
}

/// Block-fading gains, one per (frame, receiver) pair.
pub trait FadingSource {
    fn gain(&mut self, frame: u64, rx: VehicleId) -> f64;
}

/// Derives each (frame, receiver) gain from its own seeded stream, so the same
/// pair always sees the same gain whether it is the signal or interference and
/// regardless of evaluation order.
#[derive(Debug, Clone)]
pub struct KeyedFading {
    seed: u64,
    m: f64,
}

impl KeyedFading {
    pub fn new(seed: u64, m: f64) -> Self {
        Self { seed, m }
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes several words into one stream seed.
pub(crate) fn stream_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |acc, &p| splitmix64(acc ^ p))
}

impl FadingSource for KeyedFading {
    fn gain(&mut self, frame: u64, rx: VehicleId) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[self.seed, frame, u64::from(rx.0)]));
        sample_fading_gain(&mut rng, self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Exp};

    fn defaults() -> ChannelParams {
        ChannelParams::default()
    }

    #[test]
    fn airtime_examples() {
        // 512 B: 4096 bits / 6 Mb/s = 682.67 us -> 86 symbols = 688 us
        assert_eq!(airtime_us(512, &defaults()), 696);
        // 31 B: 41.3 us -> 6 symbols
        assert_eq!(airtime_us(31, &defaults()), 56);
        // exactly one symbol holds 48 bits
        assert_eq!(airtime_us(6, &defaults()), 16);
        assert_eq!(airtime_us(7, &defaults()), 24);
    }

    #[test]
    fn airtime_payload_part_at_least_doubles() {
        let p = defaults();
        for n in 1..600 {
            let one = airtime_us(n, &p) - p.plcp_header_us;
            let two = airtime_us(2 * n, &p) - p.plcp_header_us;
            assert!(two >= 2 * one - p.symbol_us, "{n}");
            assert!(airtime_us(n + 1, &p) >= airtime_us(n, &p));
        }
    }

    #[test]
    fn calibration_puts_threshold_at_range() {
        let p = defaults();
        let tx = calibrate_tx_power(300.0, &p);
        let closed_form = -99.0 + 10.0 + 47.0 + 22.0 * 300f64.log10();
        assert!((tx - closed_form).abs() < 1e-12);
        let cal = ChannelParams { tx_power_dbm: Some(tx), ..p.clone() };
        let rx = mean_rx_power_dbm(Position::new(0.0, 0.0), Position::new(300.0, 0.0), &cal);
        assert!((rx - cal.noise_floor_dbm - cal.sinr_threshold_db).abs() < 1e-9);
        // halving the range saves 10 n log10(2) dB
        let tx150 = calibrate_tx_power(150.0, &p);
        assert!((tx - tx150 - 22.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn path_loss_reference_and_monotonicity() {
        let p = defaults();
        let o = Position::default();
        let at1 = mean_rx_power_dbm(o, Position::new(1.0, 0.0), &p);
        assert!((at1 - (p.effective_tx_power_dbm() - p.reference_loss_db)).abs() < 1e-12);
        assert_eq!(mean_rx_power_dbm(o, o, &p), at1);
        let mut prev = at1;
        for d in (2..2000).step_by(7) {
            let now = mean_rx_power_dbm(o, Position::new(d as f64, 0.0), &p);
            assert!(now < prev);
            assert!(now < p.effective_tx_power_dbm());
            prev = now;
        }
    }

    #[test]
    fn rayleigh_case_matches_exponential_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_fading_gain(&mut rng, 1.0)).collect();
        xs.sort_by(f64::total_cmp);
        let exp = Exp::new(1.0).unwrap();
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = exp.cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // Kolmogorov critical value at alpha = 0.01
        let critical = 1.628 / (n as f64).sqrt();
        assert!(d < critical, "D = {d}, critical {critical}");
    }

    #[test]
    fn keyed_fading_is_order_independent() {
        let mut a = KeyedFading::new(11, 3.0);
        let mut b = KeyedFading::new(11, 3.0);
        let g1 = a.gain(5, VehicleId(2));
        let _ = b.gain(9, VehicleId(1));
        assert_eq!(b.gain(5, VehicleId(2)), g1);
        assert_ne!(a.gain(5, VehicleId(3)), g1);
        assert_ne!(KeyedFading::new(12, 3.0).gain(5, VehicleId(2)), g1);
    }
}
