//! End-to-end behavior of the cell simulator: DCF timing on the slot grid,
//! capture and hidden-node effects, per-mode routing, the hybrid tunnel,
//! the bearer splitter, and channel accounting identities.

use hetcell::frame::{FrameKind, AP};
use hetcell::lte::Duplex;
use hetcell::modes::Mode;
use hetcell::report::MetricsReport;
use hetcell::scenario::{Placement, ScenarioConfig, SweepAxis};
use hetcell::sim::{run_scenario, run_scenario_traced, run_sweep, TraceEvent, TraceRecord};
use hetcell::traffic::{SourceKind, Transport};

fn base(clients: usize, duration_s: f64, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.clients = clients;
    cfg.duration_s = duration_s;
    cfg.seed = seed;
    cfg
}

fn validated(cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.validate().unwrap_or_else(|e| panic!("scenario invalid: {e:?}"));
    cfg
}

/// (start, end, station, kind) intervals of every transmission in a trace.
fn tx_intervals(trace: &[TraceRecord]) -> Vec<(u64, u64, usize, FrameKind)> {
    let mut open: Vec<(u64, usize, FrameKind)> = Vec::new();
    let mut out = Vec::new();
    for rec in trace {
        match rec.event {
            TraceEvent::TxStart { kind, .. } => open.push((rec.t_us, rec.station, kind)),
            TraceEvent::TxEnd { kind } => {
                if let Some(pos) = open
                    .iter()
                    .position(|(_, s, k)| *s == rec.station && *k == kind.kind)
                {
                    let (start, station, k) = open.remove(pos);
                    out.push((start, rec.t_us, station, k));
                }
            }
            _ => {}
        }
    }
    out
}

#[test]
fn single_station_cycle_matches_closed_form() {
    // payload / (DIFS + E[backoff]*slot + T_data + SIFS + T_ack)
    let mut cfg = base(1, 5.0, 7);
    cfg.placement = Placement::Colocated { distance_m: 5.0 };
    cfg.traffic.downlink = SourceKind::None;
    cfg.mgmt.enabled = false;
    let cfg = validated(cfg);
    let report = run_scenario(&cfg);
    let cycle_us = 34.0 + 7.5 * 9.0 + 244.0 + 16.0 + 28.0;
    let expected = 1500.0 * 8.0 / cycle_us;
    let got = report.goodput.ul_wifi_mbps;
    assert!(
        (got / expected - 1.0).abs() < 0.01,
        "single-station goodput {got} vs closed form {expected}"
    );
    assert_eq!(report.wifi.collisions, 0);
    assert_eq!(report.wifi.retransmissions, 0);
}

#[test]
fn ack_chain_timing_on_the_event_log() {
    // Data end -> ACK after exactly SIFS; next access resumes on the DIFS
    // slot grid anchored at the ACK's end.
    let mut cfg = base(1, 0.1, 3);
    cfg.traffic.downlink = SourceKind::None;
    cfg.mgmt.enabled = false;
    let cfg = validated(cfg);
    let (_, trace) = run_scenario_traced(&cfg);
    let intervals = tx_intervals(&trace);
    let data: Vec<_> = intervals.iter().filter(|(.., k)| *k == FrameKind::Data).collect();
    let acks: Vec<_> = intervals.iter().filter(|(.., k)| *k == FrameKind::MacAck).collect();
    assert!(data.len() >= 2 && acks.len() >= 2);
    for (d, a) in data.iter().zip(acks.iter()) {
        assert_eq!(d.1 - d.0, 244, "data airtime");
        assert_eq!(a.0, d.1 + 16, "ACK starts SIFS after data end");
        assert_eq!(a.1 - a.0, 28, "ACK airtime");
        assert_eq!(a.2, AP, "AP acknowledges uplink data");
    }
    // Every subsequent data transmission starts DIFS plus a whole number of
    // slots after the previous ACK ended.
    for w in data.windows(2) {
        let prev_ack_end = w[0].1 + 16 + 28;
        let gap = w[1].0 - prev_ack_end;
        assert!(gap >= 34, "gap {gap} shorter than DIFS");
        assert_eq!((gap - 34) % 9, 0, "start not on the slot grid: gap {gap}");
    }
}

#[test]
fn overlapping_transmissions_only_start_simultaneously_when_in_cs_range() {
    // Three co-located stations: backoff freezing keeps every start on the
    // shared slot grid, so the only overlaps are exact ties (collisions).
    let mut cfg = base(3, 2.0, 11);
    cfg.placement = Placement::Colocated { distance_m: 5.0 };
    cfg.traffic.downlink = SourceKind::None;
    cfg.mgmt.enabled = false;
    let cfg = validated(cfg);
    let (report, trace) = run_scenario_traced(&cfg);
    assert!(report.wifi.collisions > 0, "expected contention ties");
    let intervals = tx_intervals(&trace);
    for (i, a) in intervals.iter().enumerate() {
        for b in intervals.iter().skip(i + 1) {
            let overlap = a.0 < b.1 && b.0 < a.1;
            if overlap && a.2 != b.2 {
                assert_eq!(
                    a.0, b.0,
                    "partial overlap between stations {} and {} ({} vs {})",
                    a.2, b.2, a.0, b.0
                );
            }
        }
    }
}

#[test]
fn hidden_nodes_collide_mid_frame() {
    // Two clients out of each other's carrier-sense range but both audible
    // at the AP: partial overlaps (not slot ties) appear, and the capture
    // rule loses both equal-power frames.
    let mut cfg = base(2, 2.0, 5);
    cfg.placement = Placement::Explicit { positions: vec![[-16.0, 0.0], [16.0, 0.0]] };
    cfg.traffic.downlink = SourceKind::None;
    cfg.mgmt.enabled = false;
    let cfg = validated(cfg);
    let (report, trace) = run_scenario_traced(&cfg);
    assert!(report.wifi.collisions > 0, "hidden nodes must collide");
    let intervals = tx_intervals(&trace);
    let mut partial = 0;
    for (i, a) in intervals.iter().enumerate() {
        for b in intervals.iter().skip(i + 1) {
            if a.0 < b.1 && b.0 < a.1 && a.2 != b.2 && a.0 != b.0 {
                partial += 1;
            }
        }
    }
    assert!(partial > 0, "expected mid-frame overlaps from hidden nodes");
}

#[test]
fn near_far_capture_rescues_the_strong_frame() {
    let mut cfg = base(2, 5.0, 13);
    cfg.placement = Placement::Explicit { positions: vec![[2.0, 0.0], [18.0, 0.0]] };
    cfg.traffic.downlink = SourceKind::None;
    cfg.mgmt.enabled = false;
    let cfg = validated(cfg);
    let report = run_scenario(&cfg);
    let near = &report.stations[1];
    let far = &report.stations[2];
    assert!(near.ul_wifi_bytes > far.ul_wifi_bytes, "near station should win capture ties");
    assert_eq!(near.collisions, 0, "near frames always clear the capture threshold");
    assert!(far.collisions > 0, "far frames lose every tie");
}

#[test]
fn hybrid_uplink_never_touches_the_air() {
    let mut cfg = base(8, 2.0, 21);
    cfg.mode = Mode::Hybrid;
    cfg.traffic.transport = Transport::Reliable;
    let cfg = validated(cfg);
    let report = run_scenario(&cfg);
    assert_eq!(report.wifi.airtime.uplink_total_us(), 0);
    assert_eq!(report.goodput.ul_wifi_bytes, 0);
    assert!(report.goodput.ul_tunnel_bytes > 0, "uplink flows through the tunnel");
    assert_eq!(report.associated_clients(), 8);
    // Tunnel conservation with independent end counters.
    assert_eq!(
        report.tunnel.tx_bytes,
        report.tunnel.ingested_bytes + report.tunnel.in_flight_bytes_end
    );
}

#[test]
fn hybrid_late_ack_retransmits_once_and_throughput_halves() {
    let run = |latency: Option<u64>, timeout: Option<u64>| {
        let mut cfg = base(1, 5.0, 2);
        cfg.mode = Mode::Hybrid;
        cfg.traffic.uplink = SourceKind::None;
        cfg.tunnel.one_way_latency_us = latency;
        cfg.tunnel.hybrid_ack_timeout_us = timeout;
        run_scenario(&validated(cfg))
    };
    let prompt = run(None, None);
    assert_eq!(prompt.wifi.retransmissions, 0);
    assert_eq!(prompt.tunnel.late_acks, 0);
    let late = run(Some(50_000), Some(20_000));
    assert!(late.wifi.retransmissions > 0);
    assert_eq!(
        late.wifi.duplicate_frames, late.wifi.retransmissions,
        "each retransmission is suppressed as a duplicate at the client"
    );
    assert!(late.tunnel.late_acks > 0);
    let ratio = late.goodput.dl_wifi_mbps / prompt.goodput.dl_wifi_mbps;
    assert!((ratio - 0.5).abs() < 0.02, "late-ACK goodput ratio {ratio}, expected one half");
}

#[test]
fn loose_uplink_cost_steers_uplink_off_wifi_only() {
    // With alpha = beta = 0 the decision is a pure cost threshold: raising
    // the Wi-Fi uplink cost above LTE's moves every uplink segment to LTE
    // while downlink stays on Wi-Fi.
    let run = |wifi_cost: f64| {
        let mut cfg = base(4, 2.0, 17);
        cfg.mode = Mode::Loose;
        cfg.subflow.wifi_uplink_cost = wifi_cost;
        cfg.subflow.lte_uplink_cost = 5.0;
        cfg.mgmt.enabled = false;
        run_scenario(&validated(cfg))
    };
    let cheap_wifi = run(0.0);
    assert!(cheap_wifi.goodput.ul_wifi_bytes > 0, "cost 0 < 5 keeps uplink on Wi-Fi");
    assert_eq!(cheap_wifi.goodput.ul_lte_bytes, 0);
    let costly_wifi = run(10.0);
    assert_eq!(costly_wifi.goodput.ul_wifi_bytes, 0, "uplink shifts entirely to LTE");
    assert!(costly_wifi.goodput.ul_lte_bytes > 0);
    assert!(costly_wifi.goodput.dl_wifi_bytes > 0, "downlink stays on Wi-Fi");
    assert_eq!(costly_wifi.goodput.dl_lte_bytes, 0);
}

#[test]
fn tight_splitter_shifts_all_bytes_to_lte_when_wifi_jams() {
    let run = |jam: bool| {
        let mut cfg = base(4, 4.0, 23);
        cfg.mode = Mode::Tight;
        cfg.traffic.uplink = SourceKind::None;
        cfg.mgmt.enabled = false;
        cfg.interferer.enabled = jam;
        cfg.interferer.start_s = 2.0;
        cfg.interferer.position = [3.0, 0.0];
        run_scenario(&validated(cfg))
    };
    let clean = run(false);
    let jammed = run(true);
    // The Wi-Fi share dies with the jammer (only the pre-jam half remains,
    // plus at most a staged epoch of residue); LTE keeps delivering.
    assert!(
        (jammed.goodput.dl_wifi_bytes as f64) < 0.62 * clean.goodput.dl_wifi_bytes as f64,
        "wifi share should collapse after the jam: {} vs {}",
        jammed.goodput.dl_wifi_bytes,
        clean.goodput.dl_wifi_bytes
    );
    assert!(
        (jammed.goodput.dl_lte_bytes as f64) > 0.95 * clean.goodput.dl_lte_bytes as f64,
        "lte share survives the jam"
    );
}

#[test]
fn splitter_downlink_still_flows_during_jam_via_lte() {
    // Even with the channel jammed from t=0, tight-mode downlink arrives
    // over LTE within the first control epochs.
    let mut cfg = base(2, 1.0, 29);
    cfg.mode = Mode::Tight;
    cfg.traffic.uplink = SourceKind::None;
    cfg.mgmt.enabled = false;
    cfg.interferer.enabled = true;
    cfg.interferer.start_s = 0.0;
    cfg.interferer.position = [2.0, 0.0];
    let report = run_scenario(&validated(cfg));
    assert!(report.goodput.dl_lte_bytes > 0);
    assert_eq!(report.goodput.dl_wifi_bytes, 0, "no Wi-Fi deliveries under a full-time jam");
}

#[test]
fn reserved_windows_block_client_transmissions() {
    let mut cfg = base(6, 3.0, 31);
    cfg.downlink_only.enabled = true;
    cfg.traffic.transport = Transport::Reliable;
    let cfg = validated(cfg);
    let (report, trace) = run_scenario_traced(&cfg);
    assert!(report.cts.windows >= 25, "expected a window per 100 ms period");
    assert_eq!(report.cts.violations, 0);
    // Event-trace assertion: no client transmission begins strictly inside
    // any reserved window.
    for &(w_start, w_end) in &report.cts.window_list {
        for rec in &trace {
            if let TraceEvent::TxStart { .. } = rec.event {
                if rec.station != AP {
                    assert!(
                        rec.t_us <= w_start || rec.t_us >= w_end,
                        "station {} transmitted at {} inside window ({w_start}, {w_end})",
                        rec.station,
                        rec.t_us
                    );
                }
            }
        }
    }
    // The reservation is actually used for downlink.
    assert!(report.wifi.airtime.dl_data_us > 0);
}

#[test]
fn hybrid_clients_keep_uplink_flowing_during_reserved_windows() {
    let mut cfg = base(4, 2.0, 37);
    cfg.mode = Mode::Hybrid;
    cfg.downlink_only.enabled = true;
    let cfg = validated(cfg);
    let report = run_scenario(&cfg);
    assert!(report.cts.windows > 0);
    // Tunneled uplink keeps arriving regardless of the NAV windows.
    let window_fraction = report.cts.reserved_us as f64 / report.duration_us as f64;
    let ul = report.goodput.ul_tunnel_mbps;
    assert!(ul > 40.0, "uplink {ul} Mbps should be unaffected by {window_fraction} reserved");
}

#[test]
fn out_of_range_standard_client_is_lte_only_and_silent() {
    let mut cfg = base(2, 1.0, 41);
    cfg.placement = Placement::Explicit { positions: vec![[5.0, 0.0], [40.0, 0.0]] };
    let cfg = validated(cfg);
    let report = run_scenario(&cfg);
    assert_eq!(report.associated_clients(), 1);
    let far = &report.stations[2];
    assert!(!far.associated);
    assert_eq!(far.ul_wifi_bytes + far.dl_wifi_bytes + far.tunneled_bytes, 0);
}

#[test]
fn tdd_uplink_fraction_scales_lte_uplink_monotonically() {
    let mut last = 0u64;
    for (i, fraction) in ["0.1", "0.3", "0.5", "0.7", "0.9"].iter().enumerate() {
        let mut cfg = base(4, 1.0, 43);
        cfg.mode = Mode::Tight;
        cfg.lte.duplex = Duplex::Tdd;
        cfg.lte.total_capacity_mbps = 100.0;
        cfg.traffic.downlink = SourceKind::None;
        let cfg = hetcell::scenario::apply_axis(&cfg, SweepAxis::UlFraction, fraction).unwrap();
        let report = run_scenario(&validated(cfg));
        let delivered = report.lte.ul_delivered_bytes;
        assert!(
            delivered > last,
            "uplink delivery must grow with the TDD fraction: {delivered} after {last} at {fraction}"
        );
        if i > 0 {
            last = delivered;
        } else {
            last = delivered;
        }
    }
}

#[test]
fn channel_airtime_accounting_is_exact() {
    let mut cfg = base(5, 2.0, 47);
    cfg.traffic.transport = Transport::Reliable;
    let cfg = validated(cfg);
    let report = run_scenario(&cfg);
    let w = &report.wifi;
    assert_eq!(w.busy_us + w.idle_us, report.duration_us, "busy + idle == duration");
    assert_eq!(
        w.airtime.total_us() - w.overlap_us,
        w.busy_us,
        "per-class airtime minus overlap == channel busy union"
    );
    assert!(w.overlap_us > 0, "collisions must produce overlap in this scenario");
}

#[test]
fn identical_config_and_seed_reproduce_byte_identical_output() {
    let mut cfg = base(6, 1.0, 53);
    cfg.mode = Mode::Tight;
    cfg.traffic.transport = Transport::Reliable;
    let cfg = validated(cfg);
    let a = run_scenario(&cfg);
    let b = run_scenario(&cfg);
    assert_eq!(hetcell::report::emit_csv(&a), hetcell::report::emit_csv(&b));
    assert_eq!(a.to_json(), b.to_json());
    let mut other = cfg.clone();
    other.seed = 54;
    let c = run_scenario(&other);
    assert_ne!(a.goodput.ul_wifi_bytes, c.goodput.ul_wifi_bytes, "different seeds should differ");
}

#[test]
fn report_json_roundtrip_preserves_config_echo() {
    let mut cfg = base(3, 0.5, 59);
    cfg.mode = Mode::Loose;
    let cfg = validated(cfg);
    let report = run_scenario(&cfg);
    let back = MetricsReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.config, cfg, "config echo survives the round trip");
}

#[test]
fn sweep_rows_equal_individual_runs() {
    let base_cfg = validated(base(2, 0.5, 61));
    let values: Vec<String> = ["1", "2", "4"].iter().map(|s| s.to_string()).collect();
    let rows = run_sweep(&base_cfg, SweepAxis::NClients, &values).unwrap();
    assert_eq!(rows.len(), 3);
    for (i, (value, row_report)) in rows.iter().enumerate() {
        let mut single = hetcell::scenario::apply_axis(&base_cfg, SweepAxis::NClients, value).unwrap();
        single.seed = hetcell::scenario::sweep_seed(base_cfg.seed, i);
        let standalone = run_scenario(&single);
        assert_eq!(standalone, *row_report, "sweep row {i} must match its standalone run");
    }
}

#[test]
fn mgmt_probe_load_appears_on_wifi_except_hybrid() {
    let run = |mode: Mode| {
        let mut cfg = base(4, 2.0, 67);
        cfg.mode = mode;
        cfg.traffic.uplink = SourceKind::None;
        cfg.traffic.downlink = SourceKind::None;
        run_scenario(&validated(cfg))
    };
    let standard = run(Mode::Standard);
    assert!(standard.wifi.airtime.ul_mgmt_us > 0);
    let hybrid = run(Mode::Hybrid);
    assert_eq!(hybrid.wifi.airtime.ul_mgmt_us, 0);
    assert!(hybrid.tunnel.ingested_frames > 0, "management rides the tunnel instead");
}
