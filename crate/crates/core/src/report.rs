//! Run metrics and their CSV/JSON serializations.
//!
//! The CSV column set is fixed by the report schema version, never by the
//! data; JSON key order follows struct declaration order. Both are stable
//! byte-for-byte for a given scenario and seed, which is what the golden
//! regression fixtures rely on.

use serde::{Deserialize, Serialize};

use crate::modes::{AssociationOutcome, Mode};
use crate::scenario::ScenarioConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Wi-Fi airtime in microseconds per frame class and direction. Uplink
/// classes are client-originated, downlink classes AP-originated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AirtimeBreakdown {
    pub ul_data_us: u64,
    pub dl_data_us: u64,
    pub ul_mac_ack_us: u64,
    pub dl_mac_ack_us: u64,
    pub cts_self_us: u64,
    pub ul_mgmt_us: u64,
    pub ul_transport_ack_us: u64,
    pub dl_transport_ack_us: u64,
}

impl AirtimeBreakdown {
    pub fn uplink_total_us(&self) -> u64 {
        self.ul_data_us + self.ul_mac_ack_us + self.ul_mgmt_us + self.ul_transport_ack_us
    }

    pub fn downlink_total_us(&self) -> u64 {
        self.dl_data_us + self.dl_mac_ack_us + self.cts_self_us + self.dl_transport_ack_us
    }

    pub fn total_us(&self) -> u64 {
        self.uplink_total_us() + self.downlink_total_us()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WifiMetrics {
    /// Union of all transmission intervals on the channel.
    pub busy_us: u64,
    /// Complement of `busy_us` over the run (inter-frame spaces included).
    pub idle_us: u64,
    /// Airtime counted more than once by overlapping transmissions;
    /// per-class airtimes minus this equals `busy_us` exactly.
    pub overlap_us: u64,
    pub airtime: AirtimeBreakdown,
    pub collisions: u64,
    pub retransmissions: u64,
    pub drops: u64,
    pub tx_frames: u64,
    pub delivered_frames: u64,
    pub duplicate_frames: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GoodputMetrics {
    pub ul_wifi_bytes: u64,
    pub dl_wifi_bytes: u64,
    pub ul_lte_bytes: u64,
    pub dl_lte_bytes: u64,
    /// Uplink payload ingested at the AP through the hybrid tunnel.
    pub ul_tunnel_bytes: u64,
    pub ul_wifi_mbps: f64,
    pub dl_wifi_mbps: f64,
    pub ul_lte_mbps: f64,
    pub dl_lte_mbps: f64,
    pub ul_tunnel_mbps: f64,
    pub total_mbps: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LteMetrics {
    pub ul_delivered_bytes: u64,
    pub dl_delivered_bytes: u64,
    pub ul_utilization: f64,
    pub dl_utilization: f64,
    pub ul_backlog_bytes_end: u64,
    pub dl_backlog_bytes_end: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TunnelMetrics {
    /// Payload bytes clients handed to the tunnel.
    pub tx_bytes: u64,
    pub tx_frames: u64,
    /// Payload bytes the AP ingested from the tunnel.
    pub ingested_bytes: u64,
    pub ingested_frames: u64,
    /// Queued or in-transit payload at run end, measured on the link side.
    pub in_flight_bytes_end: u64,
    /// Mean handoff-to-ingest latency (grant queueing plus tunnel hop).
    pub mean_latency_us: f64,
    pub late_acks: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtsMetrics {
    pub windows: u64,
    pub reserved_us: u64,
    /// Standard-client transmissions that began inside a reserved window.
    pub violations: u64,
    /// Reservation windows as (start, end) pairs, from CTS frame end to NAV
    /// expiry.
    pub window_list: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMetrics {
    pub id: usize,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub associated: bool,
    pub ul_wifi_bytes: u64,
    pub dl_wifi_bytes: u64,
    pub ul_lte_bytes: u64,
    pub dl_lte_bytes: u64,
    pub tunneled_bytes: u64,
    pub collisions: u64,
    pub retransmissions: u64,
    pub drops: u64,
}

/// Association decision per client, echoed in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRecord {
    pub client: usize,
    pub outcome: AssociationOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub config: ScenarioConfig,
    pub duration_us: u64,
    pub goodput: GoodputMetrics,
    pub wifi: WifiMetrics,
    pub lte: LteMetrics,
    pub tunnel: TunnelMetrics,
    pub cts: CtsMetrics,
    pub associations: Vec<AssociationRecord>,
    pub stations: Vec<StationMetrics>,
}

impl MetricsReport {
    pub fn associated_clients(&self) -> u64 {
        self.associations.iter().filter(|a| a.outcome.is_associated()).count() as u64
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<MetricsReport, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Fixed CSV column order, schema version 1.
pub const CSV_COLUMNS: &[&str] = &[
    "seed",
    "mode",
    "clients",
    "duration_s",
    "goodput_total_mbps",
    "goodput_ul_wifi_mbps",
    "goodput_dl_wifi_mbps",
    "goodput_ul_lte_mbps",
    "goodput_dl_lte_mbps",
    "goodput_ul_tunnel_mbps",
    "wifi_busy_us",
    "wifi_idle_us",
    "wifi_overlap_us",
    "wifi_ul_airtime_us",
    "wifi_dl_airtime_us",
    "airtime_ul_data_us",
    "airtime_dl_data_us",
    "airtime_ul_mac_ack_us",
    "airtime_dl_mac_ack_us",
    "airtime_cts_self_us",
    "airtime_ul_mgmt_us",
    "airtime_ul_transport_ack_us",
    "airtime_dl_transport_ack_us",
    "collisions",
    "retransmissions",
    "drops",
    "tx_frames",
    "delivered_frames",
    "lte_ul_utilization",
    "lte_dl_utilization",
    "lte_ul_backlog_bytes",
    "lte_dl_backlog_bytes",
    "tunnel_tx_bytes",
    "tunnel_ingested_bytes",
    "tunnel_in_flight_bytes",
    "tunnel_mean_latency_us",
    "tunnel_late_acks",
    "cts_windows",
    "cts_violations",
    "associated_clients",
];

fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_row(report: &MetricsReport) -> Vec<String> {
    let g = &report.goodput;
    let w = &report.wifi;
    let a = &w.airtime;
    let l = &report.lte;
    let t = &report.tunnel;
    vec![
        report.config.seed.to_string(),
        report.config.mode.name().to_string(),
        report.config.clients.to_string(),
        fmt_f64(report.config.duration_s),
        fmt_f64(g.total_mbps),
        fmt_f64(g.ul_wifi_mbps),
        fmt_f64(g.dl_wifi_mbps),
        fmt_f64(g.ul_lte_mbps),
        fmt_f64(g.dl_lte_mbps),
        fmt_f64(g.ul_tunnel_mbps),
        w.busy_us.to_string(),
        w.idle_us.to_string(),
        w.overlap_us.to_string(),
        a.uplink_total_us().to_string(),
        a.downlink_total_us().to_string(),
        a.ul_data_us.to_string(),
        a.dl_data_us.to_string(),
        a.ul_mac_ack_us.to_string(),
        a.dl_mac_ack_us.to_string(),
        a.cts_self_us.to_string(),
        a.ul_mgmt_us.to_string(),
        a.ul_transport_ack_us.to_string(),
        a.dl_transport_ack_us.to_string(),
        w.collisions.to_string(),
        w.retransmissions.to_string(),
        w.drops.to_string(),
        w.tx_frames.to_string(),
        w.delivered_frames.to_string(),
        fmt_f64(l.ul_utilization),
        fmt_f64(l.dl_utilization),
        l.ul_backlog_bytes_end.to_string(),
        l.dl_backlog_bytes_end.to_string(),
        t.tx_bytes.to_string(),
        t.ingested_bytes.to_string(),
        t.in_flight_bytes_end.to_string(),
        fmt_f64(t.mean_latency_us),
        t.late_acks.to_string(),
        report.cts.windows.to_string(),
        report.cts.violations.to_string(),
        report.associated_clients().to_string(),
    ]
}

/// Single-run CSV: header plus one row.
pub fn emit_csv(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    out.push_str(&csv_row(report).join(","));
    out.push('\n');
    out
}

/// Sweep CSV: one row per report, keyed by the axis value in the leading
/// columns. An empty sweep emits the header only.
pub fn emit_sweep_csv(axis_name: &str, rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::new();
    out.push_str("axis,axis_value,");
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for (value, report) in rows {
        out.push_str(axis_name);
        out.push(',');
        out.push_str(value);
        out.push(',');
        out.push_str(&csv_row(report).join(","));
        out.push('\n');
    }
    out
}

/// Sweep JSON: array of `{axis, value, report}` objects.
pub fn emit_sweep_json(axis_name: &str, rows: &[(String, MetricsReport)]) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        axis: &'a str,
        value: &'a str,
        report: &'a MetricsReport,
    }
    let rows: Vec<Row> = rows
        .iter()
        .map(|(value, report)| Row { axis: axis_name, value, report })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("sweep serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_report() -> MetricsReport {
        MetricsReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config: ScenarioConfig::default(),
            duration_us: 0,
            goodput: GoodputMetrics::default(),
            wifi: WifiMetrics::default(),
            lte: LteMetrics::default(),
            tunnel: TunnelMetrics::default(),
            cts: CtsMetrics::default(),
            associations: Vec::new(),
            stations: Vec::new(),
        }
    }

    #[test]
    fn csv_header_matches_row_width() {
        let report = empty_report();
        let csv = emit_csv(&report);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        let row = lines.next().unwrap();
        assert_eq!(header.split(',').count(), CSV_COLUMNS.len());
        assert_eq!(row.split(',').count(), CSV_COLUMNS.len());
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let csv = emit_sweep_csv("n_clients", &[]);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("axis,axis_value,seed,"));
    }

    #[test]
    fn json_roundtrip_is_structurally_identical() {
        let report = empty_report();
        let text = report.to_json();
        let back = MetricsReport::from_json(&text).unwrap();
        assert_eq!(back, report);
    }
}
