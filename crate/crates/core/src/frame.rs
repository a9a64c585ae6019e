//! Transmission units and their classification.

use serde::{Deserialize, Serialize};

/// Station index inside one simulation run. Index 0 is always the AP.
pub type StationId = usize;

pub const AP: StationId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Downlink,
}

/// On-air or tunneled frame kinds. Transport ACKs are carried like data
/// frames on whichever interface routing selects for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Data,
    MacAck,
    CtsSelf,
    Mgmt,
    TransportAck,
}

/// Key of the flow a data segment or transport ACK belongs to: the client
/// endpoint plus the direction the data travels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowKey {
    pub client: StationId,
    pub direction: Direction,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: StationId,
    pub dst: StationId,
    pub payload_bytes: u64,
    pub airtime_us: u64,
    pub requires_mac_ack: bool,
    /// Reservation length for CTS-to-Self frames, counted from frame end.
    pub nav_duration_us: u64,
    /// Per-flow sequence number for duplicate suppression and ACK matching.
    pub seq: u64,
    pub flow: Option<FlowKey>,
    pub retransmission: bool,
}

impl Frame {
    pub fn direction(&self) -> Direction {
        if self.src == AP {
            Direction::Downlink
        } else {
            Direction::Uplink
        }
    }
}
