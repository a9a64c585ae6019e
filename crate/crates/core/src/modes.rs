//! Per-mode routing of traffic classes across the Wi-Fi and LTE interfaces,
//! the tight-mode downlink bearer splitter, and the dual-SSID association
//! decision.

use serde::{Deserialize, Serialize};

/// Wi-Fi/LTE integration mode of a client. Fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Standard,
    Loose,
    Tight,
    Hybrid,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Standard, Mode::Loose, Mode::Tight, Mode::Hybrid];

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Loose => "loose",
            Mode::Tight => "tight",
            Mode::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Mode::Standard),
            "loose" => Ok(Mode::Loose),
            "tight" => Ok(Mode::Tight),
            "hybrid" => Ok(Mode::Hybrid),
            other => Err(format!("unknown mode '{other}' (expected standard|loose|tight|hybrid)")),
        }
    }
}

/// Routing class of a frame. Every frame maps to exactly one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrafficClass {
    UlData,
    DlData,
    /// Transport-layer ACKs generated in response to downlink data; they
    /// travel uplink.
    TransportAckForDl,
    WifiMacAck,
    WifiMgmt,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 5] = [
        TrafficClass::UlData,
        TrafficClass::DlData,
        TrafficClass::TransportAckForDl,
        TrafficClass::WifiMacAck,
        TrafficClass::WifiMgmt,
    ];
}

/// Interface (or deferred decision) a routed frame is handed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoutedInterface {
    Wifi,
    /// LTE uplink grant followed by a tunnel hop that terminates at the AP.
    LteTunnel,
    /// Native LTE bearer ending at the core/server side.
    LteNative,
    /// Left to the multipath subflow scheduler (loose mode).
    PerScheduler,
    /// Left to the downlink bearer splitter (tight mode).
    PerSplitter,
}

/// The fixed routing policy table.
pub fn route(mode: Mode, class: TrafficClass) -> RoutedInterface {
    use RoutedInterface::*;
    use TrafficClass::*;
    match (mode, class) {
        (Mode::Standard, _) => Wifi,

        (Mode::Loose, UlData) => PerScheduler,
        (Mode::Loose, DlData) => PerScheduler,
        (Mode::Loose, TransportAckForDl) => Wifi,
        (Mode::Loose, WifiMacAck) => Wifi,
        (Mode::Loose, WifiMgmt) => Wifi,

        (Mode::Tight, UlData) => LteNative,
        (Mode::Tight, DlData) => PerSplitter,
        (Mode::Tight, TransportAckForDl) => LteNative,
        (Mode::Tight, WifiMacAck) => Wifi,
        (Mode::Tight, WifiMgmt) => Wifi,

        (Mode::Hybrid, UlData) => LteTunnel,
        (Mode::Hybrid, DlData) => Wifi,
        (Mode::Hybrid, TransportAckForDl) => LteTunnel,
        (Mode::Hybrid, WifiMacAck) => LteTunnel,
        (Mode::Hybrid, WifiMgmt) => LteTunnel,
    }
}

/// Proportional downlink bearer split.
///
/// Allocates `backlog_bytes` across the two interfaces in proportion to how
/// fast each drained over the previous control epoch; the remainder after
/// the Wi-Fi share rounds down goes to LTE so the split always conserves
/// bytes. Both drains zero holds the backlog.
pub fn split_downlink_bearer(
    backlog_bytes: u64,
    wifi_drain_mbps: f64,
    lte_drain_mbps: f64,
) -> (u64, u64) {
    assert!(wifi_drain_mbps >= 0.0 && lte_drain_mbps >= 0.0);
    let total = wifi_drain_mbps + lte_drain_mbps;
    if total <= 0.0 {
        return (0, 0);
    }
    let to_wifi = ((backlog_bytes as f64) * wifi_drain_mbps / total).floor() as u64;
    (to_wifi, backlog_bytes - to_wifi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsidKind {
    StandardAccess,
    IntegratedAccess,
}

/// One SSID broadcast by the AP. The integrated SSID goes out at full AP
/// power; the standard SSID at a power close to the client's so that its
/// range matches what the client uplink can sustain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsidAdvert {
    pub kind: SsidKind,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientCapability {
    /// Ignores the integrated SSID entirely.
    Legacy,
    /// Can run any of the integration modes.
    Integrated,
}

/// Result of the connection-manager decision for one client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "mode")]
pub enum AssociationOutcome {
    Associated(Mode),
    /// No usable SSID: the client stays on LTE and contributes no Wi-Fi
    /// load.
    LteOnly,
}

impl AssociationOutcome {
    pub fn is_associated(&self) -> bool {
        matches!(self, AssociationOutcome::Associated(_))
    }
}

/// Connection-manager mode selection at association time.
///
/// A client prefers its configured mode when that mode is viable:
/// standard/loose/tight need a decodable SSID *and* client uplink reach,
/// hybrid needs only the integrated SSID. An integration-capable client
/// whose preference is unreachable falls back to hybrid (the only mode that
/// works beyond uplink range), then standard; a client configured for
/// standard access never auto-upgrades.
pub fn select_mode(
    preferred: Mode,
    capability: ClientCapability,
    sees_standard_ssid: bool,
    sees_integrated_ssid: bool,
    uplink_reaches_ap: bool,
) -> AssociationOutcome {
    let standard_viable = sees_standard_ssid && uplink_reaches_ap;
    if capability == ClientCapability::Legacy || preferred == Mode::Standard {
        return if standard_viable {
            AssociationOutcome::Associated(Mode::Standard)
        } else {
            AssociationOutcome::LteOnly
        };
    }
    let preferred_viable = match preferred {
        Mode::Hybrid => sees_integrated_ssid,
        Mode::Loose | Mode::Tight => sees_integrated_ssid && uplink_reaches_ap,
        Mode::Standard => unreachable!(),
    };
    if preferred_viable {
        AssociationOutcome::Associated(preferred)
    } else if sees_integrated_ssid {
        AssociationOutcome::Associated(Mode::Hybrid)
    } else if standard_viable {
        AssociationOutcome::Associated(Mode::Standard)
    } else {
        AssociationOutcome::LteOnly
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_is_total_over_all_pairs() {
        // Exhausting the full cross product is the property; the match in
        // `route` would fail to compile if a pair were missing, but this
        // also pins the standard-mode row to Wi-Fi for every class.
        for mode in Mode::ALL {
            for class in TrafficClass::ALL {
                let iface = route(mode, class);
                if mode == Mode::Standard {
                    assert_eq!(iface, RoutedInterface::Wifi);
                }
            }
        }
    }

    #[test]
    fn loose_keeps_transport_acks_on_wifi() {
        assert_eq!(route(Mode::Loose, TrafficClass::TransportAckForDl), RoutedInterface::Wifi);
    }

    #[test]
    fn tight_moves_transport_acks_to_lte() {
        assert_eq!(route(Mode::Tight, TrafficClass::TransportAckForDl), RoutedInterface::LteNative);
    }

    #[test]
    fn hybrid_tunnels_mac_acks() {
        assert_eq!(route(Mode::Hybrid, TrafficClass::WifiMacAck), RoutedInterface::LteTunnel);
    }

    #[test]
    fn hybrid_leaves_no_class_on_wifi_uplink() {
        for class in [
            TrafficClass::UlData,
            TrafficClass::TransportAckForDl,
            TrafficClass::WifiMacAck,
            TrafficClass::WifiMgmt,
        ] {
            assert_eq!(route(Mode::Hybrid, class), RoutedInterface::LteTunnel);
        }
        assert_eq!(route(Mode::Hybrid, TrafficClass::DlData), RoutedInterface::Wifi);
    }

    #[test]
    fn split_proportional_three_to_one() {
        let (wifi, lte) = split_downlink_bearer(4000, 30.0, 10.0);
        assert_eq!((wifi, lte), (3000, 1000));
    }

    #[test]
    fn split_equal_drains_half_half() {
        let (wifi, lte) = split_downlink_bearer(1000, 20.0, 20.0);
        assert_eq!((wifi, lte), (500, 500));
    }

    #[test]
    fn split_zero_drains_holds_backlog() {
        assert_eq!(split_downlink_bearer(12345, 0.0, 0.0), (0, 0));
    }

    #[test]
    fn split_all_to_lte_when_wifi_collapses() {
        assert_eq!(split_downlink_bearer(999, 0.0, 25.0), (0, 999));
    }

    #[test]
    fn select_mode_far_client_is_hybrid_only() {
        // 40 m out: beyond standard SSID and uplink range, inside the
        // integrated SSID's.
        for preferred in [Mode::Loose, Mode::Tight, Mode::Hybrid] {
            let got = select_mode(preferred, ClientCapability::Integrated, false, true, false);
            assert_eq!(got, AssociationOutcome::Associated(Mode::Hybrid));
        }
        // A standard-preference client out there cannot associate at all.
        let got = select_mode(Mode::Standard, ClientCapability::Integrated, false, true, false);
        assert_eq!(got, AssociationOutcome::LteOnly);
    }

    #[test]
    fn select_mode_legacy_gate() {
        let got = select_mode(Mode::Hybrid, ClientCapability::Legacy, true, true, true);
        assert_eq!(got, AssociationOutcome::Associated(Mode::Standard));
    }

    #[test]
    fn select_mode_in_range_uses_preference() {
        for preferred in Mode::ALL {
            let got = select_mode(preferred, ClientCapability::Integrated, true, true, true);
            assert_eq!(got, AssociationOutcome::Associated(preferred));
        }
    }

    #[test]
    fn select_mode_nothing_decodable_is_lte_only() {
        let got = select_mode(Mode::Hybrid, ClientCapability::Integrated, false, false, false);
        assert_eq!(got, AssociationOutcome::LteOnly);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn split_conserves_bytes(
            backlog in 0u64..10_000_000,
            wifi in 0.0f64..500.0,
            lte in 0.0f64..500.0,
        ) {
            prop_assume!(wifi + lte > 0.0);
            let (w, l) = split_downlink_bearer(backlog, wifi, lte);
            prop_assert_eq!(w + l, backlog);
        }
    }
}
