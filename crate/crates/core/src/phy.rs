//! Radio propagation, SINR capture, frame airtime, and link-budget coverage
//! math.
//!
//! Everything here is a pure function over value types; the event engine
//! calls into this module but keeps all mutable state itself.

use serde::{Deserialize, Serialize};

/// 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Log-distance path loss with an optional exterior-wall penetration term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossModel {
    /// Path loss exponent; 4 is the typical indoor-to-outdoor value.
    pub exponent: f64,
    /// Loss in dB at the reference distance.
    pub reference_loss_db: f64,
    /// Reference distance in meters.
    pub reference_distance_m: f64,
    /// Extra loss applied when the link crosses the indoor/outdoor boundary.
    pub wall_penetration_db: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        PathLossModel {
            exponent: 4.0,
            reference_loss_db: 40.0,
            reference_distance_m: 1.0,
            wall_penetration_db: 0.0,
        }
    }
}

impl PathLossModel {
    /// Path loss in dB at `distance_m`. Distances at or below the reference
    /// distance clamp to the reference loss.
    pub fn path_loss_db(&self, distance_m: f64, crosses_wall: bool) -> f64 {
        let wall = if crosses_wall { self.wall_penetration_db } else { 0.0 };
        if distance_m <= self.reference_distance_m {
            return self.reference_loss_db + wall;
        }
        self.reference_loss_db
            + 10.0 * self.exponent * (distance_m / self.reference_distance_m).log10()
            + wall
    }
}

/// Transmit/receive budget of one link end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// EIRP of the transmitter in dBm.
    pub tx_power_dbm: f64,
    /// Minimum decodable receive power in dBm.
    pub sensitivity_dbm: f64,
    pub noise_floor_dbm: f64,
    /// SINR a frame needs over concurrent interference to be captured.
    pub capture_threshold_db: f64,
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// SINR in dB of a target signal against the linear-domain sum of all
/// overlapping interferer powers plus noise.
pub fn sinr_db(target_rx_dbm: f64, interferer_rx_dbm: &[f64], noise_floor_dbm: f64) -> f64 {
    let interference_mw: f64 = interferer_rx_dbm.iter().copied().map(dbm_to_mw).sum();
    let denom_mw = interference_mw + dbm_to_mw(noise_floor_dbm);
    mw_to_dbm(dbm_to_mw(target_rx_dbm) / denom_mw)
}

/// 802.11a OFDM framing parameters. The data rate applies to data payloads;
/// MAC ACKs and CTS-to-Self go out at the control (basic) rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyParams {
    pub data_rate_mbps: f64,
    pub control_rate_mbps: f64,
    pub preamble_us: u64,
    pub symbol_us: u64,
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            data_rate_mbps: 54.0,
            control_rate_mbps: 24.0,
            preamble_us: 20,
            symbol_us: 4,
        }
    }
}

/// OFDM SERVICE field bits prepended to every PSDU.
const SERVICE_BITS: u64 = 16;
/// Convolutional-coder tail bits appended to every PSDU.
const TAIL_BITS: u64 = 6;

impl PhyParams {
    /// Data bits carried per OFDM symbol at `rate_mbps`.
    pub fn bits_per_symbol(&self, rate_mbps: f64) -> u64 {
        (rate_mbps * self.symbol_us as f64).round() as u64
    }

    /// On-air duration of a frame: preamble plus however many whole symbols
    /// the service, payload, and tail bits need.
    pub fn frame_airtime_us(&self, payload_bytes: u64, rate_mbps: f64) -> u64 {
        let bits = SERVICE_BITS + TAIL_BITS + 8 * payload_bytes;
        let bps = self.bits_per_symbol(rate_mbps);
        let symbols = bits.div_ceil(bps);
        self.preamble_us + symbols * self.symbol_us
    }
}

/// Largest distance at which `budget.tx_power_dbm` still meets sensitivity
/// under `model`. Returns 0.0 when unsatisfiable at the reference distance.
pub fn max_range_m(budget: &LinkBudget, model: &PathLossModel, crosses_wall: bool) -> f64 {
    let wall = if crosses_wall { model.wall_penetration_db } else { 0.0 };
    let margin_db = budget.tx_power_dbm - model.reference_loss_db - wall - budget.sensitivity_dbm;
    if margin_db < 0.0 {
        return 0.0;
    }
    model.reference_distance_m * 10f64.powf(margin_db / (10.0 * model.exponent))
}

/// Range gain obtained by raising transmit power from `p_low_mw` to
/// `p_high_mw` under a given path loss exponent.
pub fn range_ratio(p_high_mw: f64, p_low_mw: f64, exponent: f64) -> f64 {
    (p_high_mw / p_low_mw).powf(1.0 / exponent)
}

/// Area coverage gain corresponding to [`range_ratio`].
pub fn area_ratio(p_high_mw: f64, p_low_mw: f64, exponent: f64) -> f64 {
    range_ratio(p_high_mw, p_low_mw, exponent).powi(2)
}

/// Whether a signal at `rx_dbm` decodes against the worst concurrent
/// interference it saw. This single rule drives all capture behavior: the
/// strongest frame survives only if it clears the threshold against
/// everything else, and a frame that starts mid-reception is held to the
/// same standard over its own full duration.
pub fn decodes(rx_dbm: f64, worst_interference_mw: f64, budget: &LinkBudget) -> bool {
    if rx_dbm < budget.sensitivity_dbm {
        return false;
    }
    let sinr = mw_to_dbm(dbm_to_mw(rx_dbm) / (worst_interference_mw + dbm_to_mw(budget.noise_floor_dbm)));
    sinr >= budget.capture_threshold_db
}

/// One frame of an overlap group at a receiver.
#[derive(Debug, Clone, Copy)]
pub struct CandidateFrame {
    pub rx_dbm: f64,
    pub start_us: u64,
    pub end_us: u64,
}

/// Static capture decision over a group of time-overlapping frames.
///
/// Returns the index of the decoded frame, or `None` if every frame is lost.
/// At most one frame per overlap group can decode: only the strongest is
/// even considered, and it must hold the capture threshold against the sum
/// of all concurrent frames at every instant of its own airtime.
pub fn capture_decision(frames: &[CandidateFrame], budget: &LinkBudget) -> Option<usize> {
    if frames.is_empty() {
        return None;
    }
    let strongest = frames
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.rx_dbm.total_cmp(&b.1.rx_dbm))
        .map(|(i, _)| i)
        .expect("non-empty");
    let target = frames[strongest];
    let mut worst_mw = 0.0f64;
    // Interference changes only at frame boundaries; evaluate the sum of
    // concurrent frames at each boundary inside the target's airtime.
    for probe in frames.iter().flat_map(|f| [f.start_us, f.end_us]) {
        if probe < target.start_us || probe >= target.end_us {
            continue;
        }
        let sum: f64 = frames
            .iter()
            .enumerate()
            .filter(|(i, f)| *i != strongest && f.start_us <= probe && probe < f.end_us)
            .map(|(_, f)| dbm_to_mw(f.rx_dbm))
            .sum();
        worst_mw = worst_mw.max(sum);
    }
    decodes(target.rx_dbm, worst_mw, budget).then_some(strongest)
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn path_loss_monotone_in_distance(
            exponent in 0.5f64..8.0,
            d1 in 0.1f64..1000.0,
            d2 in 0.1f64..1000.0,
        ) {
            let m = PathLossModel { exponent, ..PathLossModel::default() };
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(m.path_loss_db(near, false) <= m.path_loss_db(far, false) + 1e-12);
        }

        #[test]
        fn airtime_monotone_in_payload(a in 0u64..4000, b in 0u64..4000) {
            let phy = PhyParams::default();
            let (small, large) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(phy.frame_airtime_us(small, 54.0) <= phy.frame_airtime_us(large, 54.0));
        }

        #[test]
        fn airtime_exact_on_symbol_boundaries(payload in 0u64..4000) {
            let phy = PhyParams::default();
            let t = phy.frame_airtime_us(payload, 54.0);
            prop_assert_eq!((t - phy.preamble_us) % phy.symbol_us, 0);
        }
    }
}
