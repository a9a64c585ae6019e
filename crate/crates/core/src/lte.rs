//! Abstract contention-free LTE link: per-direction capacity accounting,
//! FDD/TDD duplexing with a tunable uplink share, equal-share scheduling at
//! subframe granularity, and the tunnel paths of the hybrid mode.
//!
//! The link is a capacity pipe, not a PHY: no loss, no reordering within a
//! station, grants handed out once per scheduler epoch.

use serde::{Deserialize, Serialize};

use crate::frame::{Direction, Frame, FrameKind, StationId};
use crate::kernel::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Duplex {
    Fdd,
    Tdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LteConfig {
    pub duplex: Duplex,
    /// FDD: fixed per-direction capacities.
    pub ul_capacity_mbps: f64,
    pub dl_capacity_mbps: f64,
    /// TDD: one shared band split by `ul_fraction`.
    pub total_capacity_mbps: f64,
    pub ul_fraction: f64,
    pub scheduler_epoch_us: u64,
}

impl Default for LteConfig {
    fn default() -> Self {
        LteConfig {
            duplex: Duplex::Fdd,
            ul_capacity_mbps: 50.0,
            dl_capacity_mbps: 50.0,
            total_capacity_mbps: 100.0,
            ul_fraction: 0.5,
            scheduler_epoch_us: 1000,
        }
    }
}

impl LteConfig {
    /// Capacity available to one direction under the configured duplexing.
    pub fn capacity_mbps(&self, direction: Direction) -> f64 {
        match (self.duplex, direction) {
            (Duplex::Fdd, Direction::Uplink) => self.ul_capacity_mbps,
            (Duplex::Fdd, Direction::Downlink) => self.dl_capacity_mbps,
            (Duplex::Tdd, Direction::Uplink) => self.total_capacity_mbps * self.ul_fraction,
            (Duplex::Tdd, Direction::Downlink) => self.total_capacity_mbps * (1.0 - self.ul_fraction),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TunnelPath {
    ViaCore,
    DirectEnbAp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunnelConfig {
    pub path: TunnelPath,
    /// Override of the per-path default latency (10 ms via the core, 2 ms
    /// over the direct eNB-AP link).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub one_way_latency_us: Option<u64>,
    pub per_packet_overhead_bytes: u64,
    /// How long the AP waits for a tunneled MAC ACK before queueing the one
    /// retransmission. `None` derives 2 x tunnel latency + 4 ms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hybrid_ack_timeout_us: Option<u64>,
}

impl Default for TunnelConfig {
    fn default() -> Self {
        TunnelConfig {
            path: TunnelPath::DirectEnbAp,
            one_way_latency_us: None,
            per_packet_overhead_bytes: 40,
            hybrid_ack_timeout_us: None,
        }
    }
}

impl TunnelConfig {
    pub fn latency_us(&self) -> u64 {
        self.one_way_latency_us.unwrap_or(match self.path {
            TunnelPath::ViaCore => 10_000,
            TunnelPath::DirectEnbAp => 2_000,
        })
    }

    pub fn resolved_hybrid_ack_timeout_us(&self) -> u64 {
        self.hybrid_ack_timeout_us.unwrap_or(2 * self.latency_us() + 4_000)
    }
}

/// Whether a queued frame rides the hybrid tunnel (and pays its overhead
/// and latency) or terminates natively at the LTE side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtePathKind {
    Tunnel,
    Native,
}

#[derive(Debug)]
struct QueuedFrame {
    frame: Frame,
    path: LtePathKind,
    enqueued_at: SimTime,
    remaining_bytes: u64,
}

/// A station's uplink/downlink queues: tunneled MAC-layer ACKs ride a
/// control sub-queue served ahead of data, the way LTE prioritizes
/// signaling bearers. Order within each sub-queue is strictly FIFO.
#[derive(Debug, Default)]
struct StationQueues {
    control: std::collections::VecDeque<QueuedFrame>,
    data: std::collections::VecDeque<QueuedFrame>,
}

impl StationQueues {
    fn is_empty(&self) -> bool {
        self.control.is_empty() && self.data.is_empty()
    }

    fn front_mut(&mut self) -> Option<&mut QueuedFrame> {
        if !self.control.is_empty() {
            self.control.front_mut()
        } else {
            self.data.front_mut()
        }
    }

    fn pop_front(&mut self) -> Option<QueuedFrame> {
        if !self.control.is_empty() {
            self.control.pop_front()
        } else {
            self.data.pop_front()
        }
    }

    fn iter(&self) -> impl Iterator<Item = &QueuedFrame> {
        self.control.iter().chain(self.data.iter())
    }
}

/// A frame whose grant completed this epoch. Tunnel frames still owe the
/// one-way tunnel latency before they reach the AP.
#[derive(Debug)]
pub struct LteDelivery {
    pub frame: Frame,
    pub path: LtePathKind,
    pub direction: Direction,
    pub enqueued_at: SimTime,
    pub granted_at: SimTime,
}

#[derive(Debug, Default)]
struct DirectionState {
    /// One queue pair per station; index = client id for uplink,
    /// destination client id for downlink.
    queues: Vec<StationQueues>,
    /// Fractional byte budget carried between epochs so non-integer
    /// capacities stay exact over time.
    credit_bytes: f64,
    pub delivered_bytes: u64,
    /// Wire bytes actually granted (payload plus any tunnel overhead,
    /// including partially granted frames).
    pub granted_bytes: u64,
}

/// Scheduled LTE link shared by every client of the cell.
#[derive(Debug)]
pub struct LteLink {
    pub config: LteConfig,
    ul: DirectionState,
    dl: DirectionState,
}

impl LteLink {
    pub fn new(config: LteConfig, stations: usize) -> Self {
        let mk = || DirectionState {
            queues: (0..stations).map(|_| StationQueues::default()).collect(),
            credit_bytes: 0.0,
            delivered_bytes: 0,
            granted_bytes: 0,
        };
        LteLink { config, ul: mk(), dl: mk() }
    }

    fn dir_mut(&mut self, direction: Direction) -> &mut DirectionState {
        match direction {
            Direction::Uplink => &mut self.ul,
            Direction::Downlink => &mut self.dl,
        }
    }

    fn dir(&self, direction: Direction) -> &DirectionState {
        match direction {
            Direction::Uplink => &self.ul,
            Direction::Downlink => &self.dl,
        }
    }

    /// Queue a frame for transmission. `wire_bytes` is what it consumes of
    /// the grant (payload plus tunnel overhead where applicable).
    pub fn enqueue(
        &mut self,
        direction: Direction,
        station: StationId,
        frame: Frame,
        path: LtePathKind,
        wire_bytes: u64,
        now: SimTime,
    ) {
        let item = QueuedFrame {
            frame,
            path,
            enqueued_at: now,
            remaining_bytes: wire_bytes.max(1),
        };
        let queues = &mut self.dir_mut(direction).queues[station];
        if item.frame.kind == FrameKind::MacAck && path == LtePathKind::Tunnel {
            queues.control.push_back(item);
        } else {
            queues.data.push_back(item);
        }
    }

    pub fn backlog_bytes(&self, direction: Direction) -> u64 {
        self.dir(direction)
            .queues
            .iter()
            .flat_map(|q| q.iter())
            .map(|f| f.remaining_bytes)
            .sum()
    }

    /// Remaining wire bytes queued for one station.
    pub fn station_backlog_bytes(&self, direction: Direction, station: StationId) -> u64 {
        self.dir(direction).queues[station].iter().map(|f| f.remaining_bytes).sum()
    }

    /// Payload bytes of tunnel-path frames still queued on the uplink.
    pub fn tunnel_backlog_payload_bytes(&self) -> u64 {
        self.ul
            .queues
            .iter()
            .flat_map(|q| q.iter())
            .filter(|f| f.path == LtePathKind::Tunnel)
            .map(|f| f.frame.payload_bytes)
            .sum()
    }

    pub fn delivered_bytes(&self, direction: Direction) -> u64 {
        self.dir(direction).delivered_bytes
    }

    pub fn delivered_wire_bytes(&self, direction: Direction) -> u64 {
        self.dir(direction).granted_bytes
    }

    /// Run one scheduler epoch for both directions; returns every frame
    /// whose grant completed, in deterministic (direction, station, FIFO)
    /// order.
    pub fn on_epoch(&mut self, now: SimTime) -> Vec<LteDelivery> {
        let mut out = Vec::new();
        for direction in [Direction::Uplink, Direction::Downlink] {
            let capacity = self.config.capacity_mbps(direction);
            let epoch = self.config.scheduler_epoch_us;
            let state = self.dir_mut(direction);
            // Mbps == bits/us, so bytes per epoch = mbps * epoch / 8.
            state.credit_bytes += capacity * epoch as f64 / 8.0;
            let mut budget = state.credit_bytes.floor() as u64;
            state.credit_bytes -= budget as f64;

            // Water-filling equal share: split the budget evenly over the
            // backlogged stations, give leftovers to the lowest ids, and
            // repeat with whatever a short queue could not use.
            loop {
                let active: Vec<usize> = (0..state.queues.len())
                    .filter(|&s| !state.queues[s].is_empty())
                    .collect();
                if active.is_empty() || budget == 0 {
                    break;
                }
                let per = budget / active.len() as u64;
                let mut extra = budget % active.len() as u64;
                if per == 0 && extra == 0 {
                    break;
                }
                let mut spent = 0u64;
                for &s in &active {
                    let mut grant = per;
                    if extra > 0 {
                        grant += 1;
                        extra -= 1;
                    }
                    let queue = &mut state.queues[s];
                    while grant > 0 {
                        let Some(head) = queue.front_mut() else { break };
                        let take = head.remaining_bytes.min(grant);
                        head.remaining_bytes -= take;
                        grant -= take;
                        spent += take;
                        state.granted_bytes += take;
                        if head.remaining_bytes == 0 {
                            let done = queue.pop_front().expect("head exists");
                            state.delivered_bytes += done.frame.payload_bytes;
                            out.push(LteDelivery {
                                frame: done.frame,
                                path: done.path,
                                direction,
                                enqueued_at: done.enqueued_at,
                                granted_at: now,
                            });
                        }
                    }
                }
                if spent == 0 {
                    break;
                }
                budget -= spent;
            }
        }
        out
    }
}
