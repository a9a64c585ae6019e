//! CSMA/CA DCF parameters and the pure pieces of the per-station state
//! machine: contention-window evolution and the slotted backoff grid.
//!
//! The live state machine (deferral, freezing, ACK timers) runs inside the
//! event engine; the arithmetic it relies on lives here where it can be
//! tested in isolation.

use serde::{Deserialize, Serialize};

use crate::kernel::SimTime;

/// Retry budget for a data frame. The analytic-oracle comparison runs with
/// `Unlimited`; the 802.11 default is 7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RetryLimit {
    Count(u32),
    Named(RetryLimitName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetryLimitName {
    Unlimited,
}

impl RetryLimit {
    pub fn exceeded_by(&self, retry_count: u32) -> bool {
        match self {
            RetryLimit::Count(limit) => retry_count > *limit,
            RetryLimit::Named(RetryLimitName::Unlimited) => false,
        }
    }
}

impl Default for RetryLimit {
    fn default() -> Self {
        RetryLimit::Count(7)
    }
}

/// 802.11a DCF timing and contention parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacParams {
    pub slot_us: u64,
    pub sifs_us: u64,
    pub difs_us: u64,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Contention window the AP drops to when every associated client runs
    /// hybrid integration: with all uplink redirected to LTE no one else
    /// contends, so the window can sit at the minimum level to cut protocol
    /// overhead.
    pub integrated_cw_min: u32,
    pub retry_limit: RetryLimit,
    /// Time a transmitter waits for the MAC ACK before declaring loss.
    /// `None` derives the standard value: SIFS + ACK airtime + 2 slots.
    pub ack_timeout_us: Option<u64>,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            slot_us: 9,
            sifs_us: 16,
            difs_us: 34,
            cw_min: 15,
            cw_max: 1023,
            integrated_cw_min: 0,
            retry_limit: RetryLimit::default(),
            ack_timeout_us: None,
        }
    }
}

impl MacParams {
    pub fn resolved_ack_timeout_us(&self, ack_airtime_us: u64) -> u64 {
        self.ack_timeout_us
            .unwrap_or(self.sifs_us + ack_airtime_us + 2 * self.slot_us)
    }
}

/// Contention window after one more failed attempt: binary exponential
/// growth capped at `cw_max`.
pub fn next_cw(current_cw: u32, cw_max: u32) -> u32 {
    ((current_cw + 1) * 2 - 1).min(cw_max)
}

/// Phase of a station's DCF machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacPhase {
    /// Nothing queued.
    Idle,
    /// Counting idle slots toward transmission (or frozen waiting for the
    /// medium to go idle again).
    Backoff,
    /// A frame of this station is on the air.
    Transmitting,
    /// Frame sent, MAC ACK timer armed.
    AwaitingAck,
    /// AP only: inside its own CTS-to-Self reservation, sending
    /// SIFS-separated downlink frames without contention.
    Burst,
}

/// Slotted backoff arithmetic shared by scheduling and freezing.
///
/// A station that (re)enters backoff anchors a slot grid at the latest of
/// its perceived idle start, its NAV expiry, and the entry instant. The
/// transmission fires after DIFS plus `remaining` idle slots; when the
/// medium goes busy first, `slots_elapsed` tells how many of those slots
/// completed so the countdown resumes where it stopped.
#[derive(Debug, Clone, Copy)]
pub struct BackoffGrid {
    pub anchor: SimTime,
    pub difs_us: u64,
    pub slot_us: u64,
}

impl BackoffGrid {
    pub fn tx_time(&self, remaining_slots: u32) -> SimTime {
        self.anchor.add_us(self.difs_us + remaining_slots as u64 * self.slot_us)
    }

    /// Whole idle slots completed on this grid by `busy_at`, capped at
    /// `remaining`. A transition exactly on a slot boundary counts that
    /// slot as completed (the slot just ended was idle).
    pub fn slots_elapsed(&self, busy_at: SimTime, remaining: u32) -> u32 {
        let after_difs = busy_at.since(self.anchor.add_us(self.difs_us));
        ((after_difs / self.slot_us) as u32).min(remaining)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cw_doubles_from_min() {
        assert_eq!(next_cw(15, 1023), 31);
        assert_eq!(next_cw(31, 1023), 63);
    }

    #[test]
    fn cw_caps_at_max() {
        assert_eq!(next_cw(1023, 1023), 1023);
        assert_eq!(next_cw(511, 1023), 1023);
        assert_eq!(next_cw(15, 15), 15);
    }

    #[test]
    fn default_mac_params_are_11a() {
        let p = MacParams::default();
        assert_eq!(p.slot_us, 9);
        assert_eq!(p.sifs_us, 16);
        assert_eq!(p.difs_us, p.sifs_us + 2 * p.slot_us);
        assert_eq!(p.cw_min, 15);
        assert_eq!(p.cw_max, 1023);
        // SIFS + 28us ACK + 2 slots.
        assert_eq!(p.resolved_ack_timeout_us(28), 62);
    }

    #[test]
    fn retry_limit_boundaries() {
        let zero = RetryLimit::Count(0);
        assert!(!zero.exceeded_by(0));
        assert!(zero.exceeded_by(1));
        let unlimited = RetryLimit::Named(RetryLimitName::Unlimited);
        assert!(!unlimited.exceeded_by(u32::MAX));
    }

    #[test]
    fn grid_tx_time_and_elapsed() {
        let g = BackoffGrid { anchor: SimTime::from_us(100), difs_us: 34, slot_us: 9 };
        assert_eq!(g.tx_time(0), SimTime::from_us(134));
        assert_eq!(g.tx_time(3), SimTime::from_us(161));
        // Busy before DIFS completes: nothing elapsed.
        assert_eq!(g.slots_elapsed(SimTime::from_us(120), 5), 0);
        // Busy mid-slot: only whole slots count.
        assert_eq!(g.slots_elapsed(SimTime::from_us(150), 5), 1);
        // Busy exactly on a boundary counts that slot.
        assert_eq!(g.slots_elapsed(SimTime::from_us(152), 5), 2);
        // Capped at remaining.
        assert_eq!(g.slots_elapsed(SimTime::from_us(1000), 5), 5);
    }
}
