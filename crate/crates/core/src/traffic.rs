//! Traffic sources, the simplified reliable-transport abstraction that
//! generates transport ACKs, and the loose-mode multipath subflow scheduler.
//!
//! There is no congestion control and no transport retransmission: losses
//! are counted at the MAC layer, and what matters here is where bytes and
//! ACKs travel, not TCP dynamics.

use serde::{Deserialize, Serialize};

use crate::frame::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// There is always a segment to send.
    Saturated,
    /// Segments paced to a fixed rate.
    ConstantRate { mbps: f64 },
    /// No traffic in this direction.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    /// Fire-and-forget segments; no transport ACKs.
    None,
    /// In-order delivery accounting with delayed transport ACKs.
    Reliable,
}

/// Per-direction traffic description shared by every client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub uplink: SourceKind,
    pub downlink: SourceKind,
    pub segment_bytes: u64,
    pub transport: Transport,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec {
            uplink: SourceKind::Saturated,
            downlink: SourceKind::Saturated,
            segment_bytes: 1500,
            transport: Transport::None,
        }
    }
}

impl FlowSpec {
    pub fn source(&self, direction: Direction) -> SourceKind {
        match direction {
            Direction::Uplink => self.uplink,
            Direction::Downlink => self.downlink,
        }
    }

    /// Pacing interval of a constant-rate source in microseconds.
    pub fn pacing_interval_us(&self, mbps: f64) -> f64 {
        self.segment_bytes as f64 * 8.0 / mbps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AckPolicy {
    /// Delayed-ACK factor: one transport ACK per this many deliveries.
    pub segments_per_ack: u64,
    pub ack_bytes: u64,
}

impl Default for AckPolicy {
    fn default() -> Self {
        AckPolicy { segments_per_ack: 2, ack_bytes: 40 }
    }
}

/// Delivery-side state of one reliable flow.
#[derive(Debug, Default, Clone)]
pub struct FlowDeliveryState {
    pub delivered_segments: u64,
    pub acks_emitted: u64,
}

impl FlowDeliveryState {
    /// Record one delivered segment; returns true when this delivery is the
    /// `segments_per_ack`-th since the last ACK and a transport ACK must be
    /// emitted. ACK count stays exactly `floor(deliveries / segments_per_ack)`.
    pub fn on_segment_delivered(&mut self, policy: &AckPolicy) -> bool {
        self.delivered_segments += 1;
        if self.delivered_segments / policy.segments_per_ack > self.acks_emitted {
            self.acks_emitted += 1;
            true
        } else {
            false
        }
    }
}

/// Measured and configured inputs of one subflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubflowState {
    /// Administrative cost applied to uplink segment decisions. Raising the
    /// Wi-Fi uplink cost is the knob that steers uplink traffic onto LTE.
    pub uplink_cost: f64,
    /// Administrative cost applied to downlink segment decisions.
    pub downlink_cost: f64,
    pub measured_rtt_us: f64,
    pub measured_bandwidth_mbps: f64,
    pub available: bool,
}

impl Default for SubflowState {
    fn default() -> Self {
        SubflowState {
            uplink_cost: 0.0,
            downlink_cost: 0.0,
            measured_rtt_us: 0.0,
            measured_bandwidth_mbps: 0.0,
            available: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubflowMetrics {
    pub wifi: SubflowState,
    pub lte: SubflowState,
}

impl Default for SubflowMetrics {
    fn default() -> Self {
        SubflowMetrics { wifi: SubflowState::default(), lte: SubflowState::default() }
    }
}

/// Scoring weights of the subflow scheduler. The defaults make the cost
/// rule primary: alpha = beta = 0 reduces the score to the configured cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerWeights {
    pub alpha: f64,
    pub beta: f64,
    pub rtt_ref_us: f64,
    pub bw_ref_mbps: f64,
}

impl Default for SchedulerWeights {
    fn default() -> Self {
        SchedulerWeights { alpha: 0.0, beta: 0.0, rtt_ref_us: 10_000.0, bw_ref_mbps: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChosenSubflow {
    Wifi,
    Lte,
}

fn score(s: &SubflowState, w: &SchedulerWeights, direction: Direction) -> f64 {
    let cost = match direction {
        Direction::Uplink => s.uplink_cost,
        Direction::Downlink => s.downlink_cost,
    };
    cost + w.alpha * (s.measured_rtt_us / w.rtt_ref_us)
        - w.beta * (s.measured_bandwidth_mbps / w.bw_ref_mbps)
}

/// Pick the subflow with the lower score. Ties break toward LTE for uplink
/// segments (the offload intent) and toward Wi-Fi for downlink segments. A
/// subflow that is down is never chosen.
pub fn choose_subflow(m: &SubflowMetrics, w: &SchedulerWeights, direction: Direction) -> ChosenSubflow {
    match (m.wifi.available, m.lte.available) {
        (true, false) => return ChosenSubflow::Wifi,
        (false, true) => return ChosenSubflow::Lte,
        (false, false) => return ChosenSubflow::Lte,
        (true, true) => {}
    }
    let wifi = score(&m.wifi, w, direction);
    let lte = score(&m.lte, w, direction);
    if wifi < lte {
        ChosenSubflow::Wifi
    } else if lte < wifi {
        ChosenSubflow::Lte
    } else {
        match direction {
            Direction::Uplink => ChosenSubflow::Lte,
            Direction::Downlink => ChosenSubflow::Wifi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_source_always_has_a_segment() {
        let spec = FlowSpec::default();
        // A saturated source never runs dry: 1000 queries yield 1000
        // segments by definition of the kind.
        for _ in 0..1000 {
            assert_eq!(spec.source(Direction::Uplink), SourceKind::Saturated);
        }
    }

    #[test]
    fn constant_rate_pacing_interval() {
        let spec = FlowSpec::default();
        assert!((spec.pacing_interval_us(12.0) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn delayed_ack_every_second_delivery() {
        let policy = AckPolicy::default();
        let mut st = FlowDeliveryState::default();
        let acks = (0..10).filter(|_| st.on_segment_delivered(&policy)).count();
        assert_eq!(acks, 5);
        assert_eq!(st.delivered_segments, 10);
        assert_eq!(st.acks_emitted, 5);
    }

    #[test]
    fn ack_per_segment() {
        let policy = AckPolicy { segments_per_ack: 1, ..AckPolicy::default() };
        let mut st = FlowDeliveryState::default();
        let acks = (0..7).filter(|_| st.on_segment_delivered(&policy)).count();
        assert_eq!(acks, 7);
    }

    #[test]
    fn ack_count_is_floor_of_deliveries() {
        let policy = AckPolicy { segments_per_ack: 3, ..AckPolicy::default() };
        let mut st = FlowDeliveryState::default();
        for _ in 0..10 {
            st.on_segment_delivered(&policy);
        }
        assert_eq!(st.acks_emitted, 10 / 3);
    }

    #[test]
    fn scheduler_single_path_fallback() {
        let mut m = SubflowMetrics::default();
        m.wifi.available = false;
        assert_eq!(choose_subflow(&m, &SchedulerWeights::default(), Direction::Uplink), ChosenSubflow::Lte);
        m.wifi.available = true;
        m.lte.available = false;
        assert_eq!(choose_subflow(&m, &SchedulerWeights::default(), Direction::Uplink), ChosenSubflow::Wifi);
    }

    #[test]
    fn scheduler_tie_breaks_by_direction() {
        let m = SubflowMetrics::default();
        let w = SchedulerWeights::default();
        assert_eq!(choose_subflow(&m, &w, Direction::Uplink), ChosenSubflow::Lte);
        assert_eq!(choose_subflow(&m, &w, Direction::Downlink), ChosenSubflow::Wifi);
    }

    #[test]
    fn raising_wifi_uplink_cost_moves_uplink_only() {
        let mut m = SubflowMetrics::default();
        m.wifi.uplink_cost = 10.0;
        let w = SchedulerWeights::default();
        assert_eq!(choose_subflow(&m, &w, Direction::Uplink), ChosenSubflow::Lte);
        // Downlink decisions ignore the uplink cost and stay on Wi-Fi.
        assert_eq!(choose_subflow(&m, &w, Direction::Downlink), ChosenSubflow::Wifi);
    }

    #[test]
    fn rtt_and_bandwidth_terms_steer_when_weighted() {
        let mut m = SubflowMetrics::default();
        m.wifi.measured_rtt_us = 50_000.0;
        m.lte.measured_rtt_us = 5_000.0;
        let w = SchedulerWeights { alpha: 1.0, ..SchedulerWeights::default() };
        assert_eq!(choose_subflow(&m, &w, Direction::Downlink), ChosenSubflow::Lte);
        let mut m2 = SubflowMetrics::default();
        m2.wifi.measured_bandwidth_mbps = 40.0;
        m2.lte.measured_bandwidth_mbps = 5.0;
        let w2 = SchedulerWeights { beta: 1.0, ..SchedulerWeights::default() };
        assert_eq!(choose_subflow(&m2, &w2, Direction::Uplink), ChosenSubflow::Wifi);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        /// With alpha = beta = 0 the decision is a pure threshold on cost:
        /// raising only the Wi-Fi cost never moves a segment from LTE back
        /// to Wi-Fi.
        #[test]
        fn one_sided_cost_increase_is_monotone(
            base in 0.0f64..20.0,
            bump in 0.0f64..20.0,
            lte_cost in 0.0f64..20.0,
        ) {
            let w = SchedulerWeights::default();
            let mut before = SubflowMetrics::default();
            before.wifi.uplink_cost = base;
            before.lte.uplink_cost = lte_cost;
            let mut after = before;
            after.wifi.uplink_cost = base + bump;
            let chose_before = choose_subflow(&before, &w, Direction::Uplink);
            let chose_after = choose_subflow(&after, &w, Direction::Uplink);
            if chose_before == ChosenSubflow::Lte {
                prop_assert_eq!(chose_after, ChosenSubflow::Lte);
            }
        }

        #[test]
        fn ack_count_exact(k in 1u64..8, deliveries in 0u64..200) {
            let policy = AckPolicy { segments_per_ack: k, ..AckPolicy::default() };
            let mut st = FlowDeliveryState::default();
            let mut acks = 0u64;
            for _ in 0..deliveries {
                if st.on_segment_delivered(&policy) {
                    acks += 1;
                }
            }
            prop_assert_eq!(acks, deliveries / k);
        }
    }
}
